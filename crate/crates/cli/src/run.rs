use std::time::Instant;

use serde_json::{json, Value};

use besselstop::acceptance::{run_all, AcceptanceOptions};
use besselstop::boundary::{closed_form_z, find_c_excursion, find_z};
use besselstop::bridge_sim::{mc_estimate, policy_sweep, SimConfig, ThresholdPolicy};
use besselstop::oracles::lattice::{dp_value, LatticeConfig};
use besselstop::oracles::ode::{ode_shoot, z_from_ode, DEFAULT_STEP};
use besselstop::value::{build_candidate, CandidateSolution};
use besselstop::verification::{appendix_checks, lemmas, VerificationReport};
use besselstop::{Error, Params};

use crate::config::{Command, OutFormat, RunConfig, SchemeChoice};
use crate::output::{emit_boundary_curve, emit_report, emit_sweep_table, emit_table, sig10};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Numeric(e) => match e {
                Error::InvalidParameter { .. } => "invalid_parameter",
                Error::OutOfRange { .. } => "out_of_range",
                Error::Truncation { .. } => "truncation",
                Error::NoRoot { .. } => "no_root",
                Error::Quadrature { .. } => "quadrature",
                Error::OdeAccuracy { .. } => "ode_accuracy",
                Error::Scheme(_) => "scheme",
            },
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Value,
    /// Command-specific CSV; `None` means the scalar fields of `results`.
    pub csv: Option<String>,
    /// False when a check or criterion failed.
    pub success: bool,
    pub seconds: f64,
}

fn params(cfg: &RunConfig) -> Result<Params, Error> {
    Params::new(cfg.alpha, cfg.n)
}

fn sim_config(cfg: &RunConfig, p: Params) -> SimConfig {
    match cfg.scheme {
        SchemeChoice::Auto => SimConfig::preferred(p, cfg.t0, cfg.q0, cfg.paths, cfg.steps, cfg.seed),
        SchemeChoice::Exact => {
            let mut s = SimConfig::exact(p, cfg.paths, cfg.steps, cfg.seed);
            s.t0 = cfg.t0;
            s.q0 = cfg.q0;
            s
        }
        SchemeChoice::Euler => SimConfig::euler(p, cfg.t0, cfg.q0, cfg.paths, cfg.steps, cfg.seed),
    }
}

fn is_excursion(p: &Params) -> bool {
    p.alpha() == 3.0 && p.n() == 1.0
}

fn report_value(r: &VerificationReport) -> Value {
    let (passed, total) = r.summary();
    json!({ "passed": passed, "total": total, "all_pass": r.all_pass(), "checks": r.checks })
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut csv = None;
    let mut success = true;
    let results = match cfg.command {
        Command::Boundary => {
            let p = params(cfg)?;
            let root = find_z(p, cfg.tol)?;
            let c = if is_excursion(&p) {
                Some(find_c_excursion(cfg.tol)?.value)
            } else {
                None
            };
            if cfg.out_format == OutFormat::Csv {
                let cand = CandidateSolution::from_root(p, root.value)?;
                csv = Some(emit_boundary_curve(&cand, cfg.points)?);
            }
            json!({
                "Z": root.value,
                "residual": root.residual,
                "iterations": root.iterations,
                "bracket": [root.bracket.0, root.bracket.1],
                "method": root.method,
                "proposition_bound": p.proposition_bound(),
                "margin": root.value - p.proposition_bound(),
                "closed_form_Z": closed_form_z(p)?,
                "C": c,
            })
        }
        Command::Coeffs => {
            let cand = build_candidate(params(cfg)?)?;
            let coeffs = cand.table().coeffs();
            let rows = coeffs.iter().enumerate().map(|(k, &a)| vec![k as f64, a]).collect();
            csv = Some(emit_table(&["k", "A_k"], rows));
            json!({ "order": cand.table().order(), "ymax": cand.table().ymax(), "coefficients": coeffs })
        }
        Command::Value => {
            let cand = build_candidate(params(cfg)?)?;
            let u = cand.u_star(cfg.t0, cfg.q0)?;
            let stop = cfg.q0 >= cand.boundary_q(cfg.t0)?;
            let explicit = besselstop::value::explicit_special_values(cand.params(), cfg.t0, cfg.q0)?;
            json!({
                "U": u,
                "Z": cand.z(),
                "E1": cand.e1(),
                "branch": if stop { "stopping" } else { "continuation" },
                "explicit": explicit,
            })
        }
        Command::Simulate => {
            let p = params(cfg)?;
            let cand = build_candidate(p)?;
            let sim = sim_config(cfg, p);
            let m = mc_estimate(&sim, ThresholdPolicy::new(cand.z())?)?;
            json!({
                "scheme": sim.scheme,
                "Z": cand.z(),
                "mean": m.mean,
                "stderr": m.stderr,
                "ci_lo": m.ci95.0,
                "ci_hi": m.ci95.1,
                "n_paths": m.n_paths,
                "stop_fraction": m.stop_fraction,
                "low_path_count": m.low_path_count,
                "candidate_U": cand.u_star(cfg.t0, cfg.q0)?,
            })
        }
        Command::Sweep => {
            let p = params(cfg)?;
            let z = find_z(p, cfg.tol)?.value;
            let sim = sim_config(cfg, p);
            let sweep = policy_sweep(&sim, z, &cfg.multipliers)?;
            csv = Some(emit_sweep_table(&sweep));
            json!({
                "scheme": sim.scheme,
                "base_z": sweep.base_z,
                "candidate_is_best": sweep.candidate_is_best(),
                "rows": sweep.rows,
            })
        }
        Command::DpOracle => {
            let p = params(cfg)?;
            let cand = build_candidate(p)?;
            let lat = dp_value(p, LatticeConfig::reference(cand.z(), cfg.t0, cfg.q0))?;
            let target = cand.u_star(cfg.t0, cfg.q0)?;
            let rows = lat
                .t_grid
                .iter()
                .zip(&lat.boundary_estimate)
                .map(|(&t, &b)| vec![t, b, cand.boundary_q(t).unwrap_or(f64::NAN)])
                .collect();
            csv = Some(emit_table(&["t", "z_q_lattice", "z_q_candidate"], rows));
            json!({
                "value_at_origin": lat.value_at_origin,
                "U": target,
                "relative_error": (lat.value_at_origin - target).abs() / target,
                "obstacle_holds": lat.obstacle_holds(p.n()),
                "continuation_is_interval": lat.continuation_is_interval.iter().all(|&b| b),
                "t_steps": lat.config.t_steps,
                "q_steps": lat.config.q_steps,
                "q_max": lat.config.q_max,
            })
        }
        Command::OdeOracle => {
            let p = params(cfg)?;
            let z_ode = z_from_ode(p)?;
            let z = find_z(p, cfg.tol)?.value;
            let sol = ode_shoot(p, p.default_ymax(), DEFAULT_STEP)?;
            json!({
                "Z_ode": z_ode,
                "Z_series": z,
                "diff": (z_ode - z).abs(),
                "max_residual": sol.max_residual(),
                "step": DEFAULT_STEP,
            })
        }
        Command::VerifyAppendix => {
            let r = appendix_checks()?;
            success = r.all_pass();
            csv = Some(emit_report(&r));
            report_value(&r)
        }
        Command::VerifyLemmas => {
            let mut r = lemmas::excursion_checks()?;
            r.extend(lemmas::general_checks(params(cfg)?)?.checks);
            success = r.all_pass();
            csv = Some(emit_report(&r));
            report_value(&r)
        }
        Command::Acceptance => {
            let opts = AcceptanceOptions {
                mc_paths: cfg.paths,
                mc_steps: cfg.steps,
                seed: cfg.seed,
            };
            let rows = run_all(opts);
            success = rows.iter().all(|r| r.pass);
            for r in &rows {
                eprintln!("{r}");
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "name", "pass", "seconds", "budget_seconds", "detail"])
                .expect("in-memory write");
            for r in &rows {
                w.write_record([
                    r.id.to_string(),
                    r.name.clone(),
                    r.pass.to_string(),
                    sig10(r.seconds),
                    sig10(r.budget_seconds),
                    r.detail.clone(),
                ])
                .expect("in-memory write");
            }
            csv = Some(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
            let passed = rows.iter().filter(|r| r.pass).count();
            json!({ "passed": passed, "total": rows.len(), "criteria": rows })
        }
    };
    Ok(Outcome {
        results,
        csv,
        success,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `key,value` rows for the scalar fields of a JSON object.
pub fn scalar_csv(results: &Value) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"]).expect("in-memory write");
    if let Value::Object(map) = results {
        for (k, v) in map {
            let cell = match v {
                Value::Number(x) => x.as_f64().map(sig10).unwrap_or_else(|| x.to_string()),
                Value::String(s) => s.clone(),
                Value::Bool(b) => b.to_string(),
                Value::Null => String::new(),
                _ => continue,
            };
            w.write_record([k.as_str(), cell.as_str()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn cfg(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("besselstop").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn boundary_results() {
        let out = execute(&cfg(&["boundary"])).unwrap();
        let z = out.results["Z"].as_f64().unwrap();
        assert!((z - 2.2601976579937237).abs() < 1e-9);
        assert!((out.results["C"].as_f64().unwrap() - 1.503395376470781).abs() < 1e-9);
        // n = alpha - 2 has a closed form.
        assert!((out.results["closed_form_Z"].as_f64().unwrap() - z).abs() < 1e-9);
        let out = execute(&cfg(&["boundary", "--alpha", "5", "--n", "2"])).unwrap();
        assert!(out.results["closed_form_Z"].is_null());
    }

    #[test]
    fn closed_form_echoed() {
        let out = execute(&cfg(&["boundary", "--alpha", "2", "--n", "2"])).unwrap();
        assert_eq!(out.results["closed_form_Z"].as_f64(), Some(2.0));
        assert!(out.results["C"].is_null());
    }

    #[test]
    fn value_branches() {
        let out = execute(&cfg(&["value", "--alpha", "1", "--n", "1"])).unwrap();
        assert!((out.results["U"].as_f64().unwrap() - (-0.5f64).exp()).abs() < 1e-9);
        assert_eq!(out.results["branch"], "continuation");
        let out = execute(&cfg(&["value", "--t0", "0.5", "--q0", "4"])).unwrap();
        assert_eq!(out.results["branch"], "stopping");
        assert_eq!(out.results["U"].as_f64(), Some(2.0));
    }

    #[test]
    fn coefficients_csv() {
        let out = execute(&cfg(&["coeffs"])).unwrap();
        let csv = out.csv.unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,A_k"));
        assert_eq!(lines.next(), Some("0,1.000000000"));
    }

    #[test]
    fn exact_scheme_rejects_offset_start() {
        let err = execute(&cfg(&["simulate", "--scheme", "exact", "--q0", "1", "--paths", "10"])).unwrap_err();
        assert_eq!(err.kind(), "scheme");
    }

    #[test]
    fn scalar_rows() {
        let csv = scalar_csv(&json!({"a": 1.5, "b": "x", "c": null, "d": [1, 2]}));
        assert_eq!(csv, "key,value\na,1.500000000\nb,x\nc,\n");
    }
}
