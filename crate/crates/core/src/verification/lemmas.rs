//! Grid checks of the excursion profile `f`, the obstacle inequality for
//! `g = E1 ψ`, the supermartingale drifts on the stopping region, the smooth
//! fit, and the single sign change of `F`.

use serde::{Deserialize, Serialize};

use super::{Check, VerificationReport};
use crate::boundary::find_z;
use crate::error::Result;
use crate::series::{build_coefficients, ModelParams, DEFAULT_EPS};
use crate::value::{build_candidate, ExcursionSolution};

/// Points per one-dimensional grid.
pub const GRID_POINTS: usize = 10_000;
/// Slack allowed for inequalities that are tight at an endpoint.
pub const INEQUALITY_TOL: f64 = 1e-10;
/// Bound on smooth-fit and ODE residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// The 9 × 9 parameter grid.
pub const PARAM_GRID: [f64; 9] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LemmaTarget {
    Excursion,
    General { alpha: f64, n: f64 },
}

pub fn lemma_checks(target: LemmaTarget) -> Result<VerificationReport> {
    match target {
        LemmaTarget::Excursion => excursion_checks(),
        LemmaTarget::General { alpha, n } => general_checks(ModelParams::new(alpha, n)?),
    }
}

/// Drift of `V* = x` on the excursion stopping region: `x^{-1}(1 - x²/(1-t))`.
pub fn excursion_drift(t: f64, x: f64) -> f64 {
    (1.0 - x * x / (1.0 - t)) / x
}

pub fn excursion_checks() -> Result<VerificationReport> {
    let ex = ExcursionSolution::<f64>::solve()?;
    let (c, b) = (ex.c, ex.b);
    let mut r = VerificationReport::default();

    r.push(Check::error("excursion f(0)=B", (ex.f(0.0)? - ex.b_from_identity()).abs() / b, 1e-8));
    r.push(Check::error("excursion f(0+)=B", (ex.f(1e-6)? - b).abs() / b, 1e-10));
    r.push(Check::error("excursion f'(0)=0", ex.f_prime(0.0)?.abs(), 0.0));
    let y = 1e-3;
    r.push(Check::error("excursion f'(0+)~By/3", (ex.f_prime(y)? - b * y / 3.0).abs(), 1e-8));

    let (mut min_f2, mut min_gap) = (f64::INFINITY, f64::INFINITY);
    for i in 0..=GRID_POINTS {
        let y = c * i as f64 / GRID_POINTS as f64;
        if i > 0 && i < GRID_POINTS {
            min_f2 = min_f2.min(ex.f_second(y)?);
        }
        min_gap = min_gap.min(ex.f(y)? - y);
    }
    r.push(Check::slack("excursion f''>0 on (0,C)", min_f2, 0.0));
    r.push(Check::flag("excursion f''>0 strict", min_f2 > 0.0));
    r.push(Check::slack("excursion f>=y on [0,C]", min_gap, INEQUALITY_TOL));

    // g(t, C√(1-t)) = (1/C - C)/√(1-t), and g(t, ·) decreases past the boundary.
    let (mut worst_err, mut worst_sign, mut monotone) = (0.0f64, f64::NEG_INFINITY, true);
    for i in 0..GRID_POINTS {
        let t = 0.99 * i as f64 / GRID_POINTS as f64;
        let root = (1.0 - t).sqrt();
        let at = excursion_drift(t, c * root);
        let expect = (1.0 / c - c) / root;
        worst_err = worst_err.max((at - expect).abs() / expect.abs());
        worst_sign = worst_sign.max(at);
        monotone &= excursion_drift(t, 1.5 * c * root) <= at;
    }
    r.push(Check::error("excursion drift at boundary closed form", worst_err, 1e-12));
    r.push(Check::slack("excursion drift at boundary < 0", -worst_sign, 0.0));
    r.push(Check::flag("excursion drift decreasing in x", monotone));
    Ok(r)
}

/// `h(t, q) = n q^{n/2-1}((α+n-2)/2 - q/(1-t))`.
pub fn bridge_drift(params: &ModelParams<f64>, t: f64, q: f64) -> f64 {
    let n = params.n();
    n * q.powf(n / 2.0 - 1.0) * (params.proposition_bound() - q / (1.0 - t))
}

pub fn general_checks(params: ModelParams<f64>) -> Result<VerificationReport> {
    let label = format!("(alpha={},n={})", params.alpha(), params.n());
    let cand = build_candidate(params)?;
    let (z, h) = (cand.z(), params.n() / 2.0);
    let mut r = VerificationReport::default();

    let mut gap = f64::INFINITY;
    for i in 0..=GRID_POINTS {
        let y = z * i as f64 / GRID_POINTS as f64;
        let p = y.powf(h);
        gap = gap.min((cand.g(y)? - p) / p.max(1.0));
    }
    r.push(Check::slack(format!("obstacle g>=z^(n/2) {label}"), gap, INEQUALITY_TOL));

    let mut worst = f64::NEG_INFINITY;
    for i in 0..100 {
        let t = 0.99 * i as f64 / 100.0;
        for j in 0..100 {
            let q = z * (1.0 - t) * (1.0 + 2.0 * j as f64 / 99.0);
            let scale = params.n() * q.powf(h - 1.0) * q / (1.0 - t);
            worst = worst.max(bridge_drift(&params, t, q) / scale);
        }
    }
    r.push(Check::slack(format!("drift h<=0 on stopping region {label}"), -worst, 0.0));

    let sf = cand.smooth_fit_residual(0.0)? / (h * z.powf(h - 1.0));
    r.push(Check::error(format!("smooth fit {label}"), sf, RESIDUAL_TOL));
    let vm = cand.value_matching_residual(0.0)? / z.powf(h);
    r.push(Check::error(format!("value matching {label}"), vm, RESIDUAL_TOL));

    let table = cand.table();
    let mut ode = 0.0f64;
    for i in 0..=1000 {
        let y = z * i as f64 / 1000.0;
        let scale = 1.0 + table.psi(y)?.abs();
        ode = ode.max(table.ode_residual(y)?.abs() / scale);
    }
    r.push(Check::error(format!("ode residual of psi {label}"), ode, RESIDUAL_TOL));

    r.push(sign_change_check(params)?);
    Ok(r)
}

/// `F` changes sign exactly once on a log-spaced grid over `[1e-6, 10 Z]`.
pub fn sign_change_check(params: ModelParams<f64>) -> Result<Check> {
    let z = find_z(params, 1e-12)?.value;
    let top = 10.0 * z;
    let table = build_coefficients(params, 1.01 * top.max(params.default_ymax()), DEFAULT_EPS)?;
    let (lo, hi) = (1e-6f64.ln(), top.ln());
    let mut changes = 0usize;
    let mut prev = table.f_eval(1e-6)?.signum();
    for i in 1..=GRID_POINTS {
        let y = (lo + (hi - lo) * i as f64 / GRID_POINTS as f64).exp().min(top);
        let s = table.f_eval(y)?.signum();
        if s != prev {
            changes += 1;
            prev = s;
        }
    }
    Ok(Check::error(
        format!("F single sign change (alpha={},n={})", params.alpha(), params.n()),
        (changes as f64 - 1.0).abs(),
        0.0,
    ))
}

/// General checks over the 9 × 9 grid.
pub fn grid_lemma_checks() -> Result<VerificationReport> {
    use rayon::prelude::*;
    let pairs: Vec<(f64, f64)> = PARAM_GRID
        .iter()
        .flat_map(|&a| PARAM_GRID.iter().map(move |&n| (a, n)))
        .collect();
    let reports = pairs
        .par_iter()
        .map(|&(alpha, n)| general_checks(ModelParams::new(alpha, n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::merge(reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excursion() {
        let r = lemma_checks(LemmaTarget::Excursion).unwrap();
        assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn general_examples() {
        for (a, n) in [(3.0, 1.0), (1.0, 1.0), (0.25, 10.0), (10.0, 0.25)] {
            let r = lemma_checks(LemmaTarget::General { alpha: a, n }).unwrap();
            assert!(r.all_pass(), "{:?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn drift_at_half_time() {
        let p = ModelParams::new(3.0, 1.0).unwrap();
        let z = find_z(p, 1e-12).unwrap().value;
        assert!(bridge_drift(&p, 0.5, z * 0.5) <= 0.0);
    }
}
