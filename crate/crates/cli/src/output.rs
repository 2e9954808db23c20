use serde::{Deserialize, Serialize};

use besselstop::bridge_sim::SweepResult;
use besselstop::verification::VerificationReport;
use besselstop::Candidate;

use crate::config::RunConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub tool_version: String,
    pub config: RunConfig,
    pub results: serde_json::Value,
    pub timing_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub tool_version: String,
    pub config: RunConfig,
    pub error: ErrorPayload,
}

/// Ten significant digits, period decimal separator, no grouping.
pub fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..10).contains(&mag) {
        format!("{:.*}", (9 - mag) as usize, x)
    } else {
        format!("{x:.9e}")
    }
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// `t,z_q,x_boundary,value_at_zero` on `points` equally spaced times in `[0, 1]`.
pub fn emit_boundary_curve(sol: &Candidate, points: usize) -> besselstop::Result<String> {
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let t = if i + 1 == points { 1.0 } else { i as f64 / (points - 1) as f64 };
        let (zq, xb) = if t < 1.0 {
            (sol.boundary_q(t)?, sol.boundary_x(t)?)
        } else {
            (0.0, 0.0)
        };
        let v = sol.u_star_with_terminal(t, 0.0)?;
        rows.push(vec![sig10(t), sig10(zq), sig10(xb), sig10(v)]);
    }
    Ok(to_csv(&["t", "z_q", "x_boundary", "value_at_zero"], rows))
}

pub fn emit_sweep_table(sweep: &SweepResult) -> String {
    let rows = sweep.rows.iter().map(|r| {
        vec![
            sig10(r.multiplier),
            sig10(r.z_level),
            sig10(r.result.mean),
            sig10(r.result.stderr),
            sig10(r.result.ci95.0),
            sig10(r.result.ci95.1),
            sig10(r.result.stop_fraction),
            r.candidate.to_string(),
        ]
    });
    to_csv(
        &["multiplier", "Z_level", "mean", "stderr", "ci_lo", "ci_hi", "stop_fraction", "candidate"],
        rows,
    )
}

pub fn emit_report(report: &VerificationReport) -> String {
    let rows = report
        .checks
        .iter()
        .map(|c| vec![c.name.clone(), c.pass.to_string(), sig10(c.margin), sig10(c.tolerance)]);
    to_csv(&["name", "pass", "margin", "tolerance"], rows)
}

pub fn emit_table(header: &[&str], rows: Vec<Vec<f64>>) -> String {
    to_csv(header, rows.into_iter().map(|r| r.into_iter().map(sig10).collect()))
}
