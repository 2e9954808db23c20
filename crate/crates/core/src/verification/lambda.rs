//! The series
//! `Λ_{D,B,Δ} = Σ_k (n+γ)^k / (2^k k!) · Γ(k+n/2) / Γ(k+n/2+Δ+1+γ) · [Dk/2^{Δ-1} + Bn/2^Δ]`
//! and its invariance under `(D, B, Δ) -> ((n+γ)D + nB, (n+γ)D + (n+2Δ+2+2γ)B, Δ+1)`.

use libm::lgamma;
use serde::{Deserialize, Serialize};

use super::{Check, VerificationReport};
use crate::error::{Error, Result};
use crate::series::{build_coefficients, ModelParams, DEFAULT_EPS};

/// Relative tolerance of the invariance check.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Relative tolerance of the `H`/`F` identity.
pub const IDENTITY_TOL: f64 = 1e-9;

const TAIL_REL: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    pub d: f64,
    pub b: f64,
    /// The shift `Δ >= 0`.
    pub shift: f64,
    pub n: f64,
    pub gamma: f64,
    /// Cap on the number of series terms.
    pub max_terms: usize,
}

impl LambdaParams {
    /// `Λ_{1,-1,0}`, which is `H`.
    pub fn h(n: f64, gamma: f64) -> Self {
        Self {
            d: 1.0,
            b: -1.0,
            shift: 0.0,
            n,
            gamma,
            max_terms: 100_000,
        }
    }

    /// Parameters for `α = n + 2 + 2γ`.
    pub fn alpha(&self) -> f64 {
        self.n + 2.0 + 2.0 * self.gamma
    }
}

/// `Λ` together with `Σ|term|`, the scale for rounding error.
fn lambda_with_scale(p: &LambdaParams) -> Result<(f64, f64)> {
    let x = p.n + p.gamma;
    if !(p.n > 0.0) {
        return Err(Error::InvalidParameter {
            name: "n",
            value: p.n,
            reason: "must be positive",
        });
    }
    if !(x > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: p.gamma,
            reason: "needs n + gamma > 0",
        });
    }
    let lower = p.n / 2.0 + p.shift + 1.0 + p.gamma;
    if !(p.shift >= 0.0 && lower > 0.0) {
        return Err(Error::InvalidParameter {
            name: "shift",
            value: p.shift,
            reason: "needs shift >= 0 and n/2 + shift + 1 + gamma > 0",
        });
    }
    let half_n = p.n / 2.0;
    let ln_half_x = (x / 2.0).ln();
    let pow2 = (-p.shift * std::f64::consts::LN_2).exp();
    let (mut sum, mut abs_sum) = (0.0f64, 0.0f64);
    for k in 0..p.max_terms {
        let kf = k as f64;
        let log_w = kf * ln_half_x - lgamma(kf + 1.0) + lgamma(kf + half_n) - lgamma(kf + lower);
        let w = log_w.exp() * pow2;
        let term = w * (2.0 * p.d * kf + p.b * p.n);
        sum += term;
        abs_sum += term.abs();
        // The bracket can vanish at a single k, so test the magnitude bound instead.
        let bound = w * (2.0 * (p.d * kf).abs() + (p.b * p.n).abs());
        if kf > x && bound <= TAIL_REL * abs_sum {
            return Ok((sum, abs_sum));
        }
    }
    Err(Error::Truncation {
        max_terms: p.max_terms,
        ymax: x,
        last_ratio: f64::NAN,
        partial: Vec::new(),
    })
}

pub fn lambda_eval(p: &LambdaParams) -> Result<f64> {
    lambda_with_scale(p).map(|v| v.0)
}

/// Applies the shift map `steps` times (renormalising `(D, B)` and tracking
/// the scale) and compares each stage with stage 0.
pub fn lambda_iterate_invariance(p: &LambdaParams, steps: usize) -> Result<VerificationReport> {
    let (base, base_scale) = lambda_with_scale(p)?;
    let mut report = VerificationReport::default();
    let label = format!("lambda(n={},gamma={})", p.n, p.gamma);
    let mut q = *p;
    let mut log_scale = 0.0f64;
    let x = p.n + p.gamma;
    for step in 1..=steps {
        let d = x * q.d + p.n * q.b;
        let b = x * q.d + (p.n + 2.0 * q.shift + 2.0 + 2.0 * p.gamma) * q.b;
        let s = d.abs().max(b.abs());
        q.d = d / s;
        q.b = b / s;
        q.shift += 1.0;
        log_scale += s.ln();
        let (v, _) = lambda_with_scale(&q)?;
        let restored = v * log_scale.exp();
        let denom = base.abs().max(f64::EPSILON * base_scale);
        report.push(Check::error(
            format!("{label} step {step:02}"),
            (restored - base).abs() / denom,
            INVARIANCE_TOL,
        ));
    }
    Ok(report)
}

/// `Γ(n/2)/Γ(n/2+1+γ) · F_{α,n}(n+γ)` from the power series.
pub fn h_from_series(n: f64, gamma: f64) -> Result<f64> {
    let params = ModelParams::new(n + 2.0 + 2.0 * gamma, n)?;
    let x = n + gamma;
    let table = build_coefficients(params, x.max(params.default_ymax()), DEFAULT_EPS)?;
    let ratio = (lgamma(n / 2.0) - lgamma(n / 2.0 + 1.0 + gamma)).exp();
    Ok(ratio * table.f_eval(x)?)
}

/// `γ = (α - n - 2)/2`.
pub fn gamma_of(alpha: f64, n: f64) -> f64 {
    (alpha - n - 2.0) / 2.0
}

/// Sign of `H` and the `H`/`F` identity on every grid pair with `α + n > 2`.
pub fn h_grid_report(grid: &[f64]) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    for &alpha in grid {
        for &n in grid {
            if alpha + n <= 2.0 {
                continue;
            }
            let gamma = gamma_of(alpha, n);
            let (h, scale) = lambda_with_scale(&LambdaParams::h(n, gamma))?;
            let series = h_from_series(n, gamma)?;
            report.push(Check::slack(format!("H<0 (alpha={alpha},n={n})"), -h / scale, 0.0));
            report.push(Check::error(
                format!("H=F (alpha={alpha},n={n})"),
                (h - series).abs() / h.abs(),
                IDENTITY_TOL,
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients() {
        let p = LambdaParams { d: 0.0, b: 0.0, ..LambdaParams::h(1.0, -0.5) };
        assert_eq!(lambda_eval(&p).unwrap(), 0.0);
    }

    #[test]
    fn h_negative_and_matches_series() {
        let h = lambda_eval(&LambdaParams::h(1.0, -0.5)).unwrap();
        assert!(h < 0.0);
        let s = h_from_series(1.0, -0.5).unwrap();
        assert!((h - s).abs() <= 1e-9 * h.abs());
    }

    #[test]
    fn invariance_in_each_regime() {
        // |γ| < 2, γ > 0, and the δ-form with α = 0.5, δ = 1 (n = 4.5, γ = -3).
        for (n, gamma, steps) in [(1.0, -0.5, 10), (2.0, 1.5, 15), (4.5, -3.0, 12)] {
            let rep = lambda_iterate_invariance(&LambdaParams::h(n, gamma), steps).unwrap();
            assert_eq!(rep.checks.len(), steps);
            assert!(rep.all_pass(), "{:?}", rep.failures().next());
        }
        assert!(lambda_iterate_invariance(&LambdaParams::h(1.0, -0.5), 0).unwrap().checks.is_empty());
    }

    #[test]
    fn invalid_arguments() {
        assert!(lambda_eval(&LambdaParams::h(1.0, -1.0)).is_err());
        assert!(lambda_eval(&LambdaParams::h(-1.0, 2.0)).is_err());
    }

    #[test]
    fn grid() {
        let rep = h_grid_report(&[0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 10.0]).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures().collect::<Vec<_>>());
    }
}
