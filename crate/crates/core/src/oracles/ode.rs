//! ODE shooting for `4y g'' + 2(α - y) g' - n g = 0`, `g(0) = 1`.
//!
//! The equation is singular at `y = 0`, so the first two steps come from the
//! local Frobenius expansion and classical RK4 takes over from `y = 2h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ModelParams;

/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default bound on the normalised ODE residual at interior nodes.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

const BOOTSTRAP_TERMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub params: ModelParams<f64>,
    pub grid: Vec<f64>,
    pub g_values: Vec<f64>,
    pub g_prime_values: Vec<f64>,
    pub step: f64,
}

fn second_derivative(p: &ModelParams<f64>, y: f64, g: f64, gp: f64) -> f64 {
    (p.n() * g - 2.0 * (p.alpha() - y) * gp) / (4.0 * y)
}

/// Frobenius expansion around the regular singular point, `(g, g')`.
fn bootstrap(p: &ModelParams<f64>, y: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut g = 1.0;
    let mut gp = 0.0;
    let mut pow = 1.0; // y^k
    for k in 0..BOOTSTRAP_TERMS {
        let kf = k as f64;
        let next = a * (2.0 * kf + p.n()) / (2.0 * (kf + 1.0) * (2.0 * kf + p.alpha()));
        gp += (kf + 1.0) * next * pow;
        pow *= y;
        g += next * pow;
        a = next;
    }
    (g, gp)
}

impl OdeSolution {
    /// `g''` at node `i` from the ODE itself (`None` at `y = 0`).
    pub fn g_second(&self, i: usize) -> Option<f64> {
        let y = self.grid[i];
        (y > 0.0).then(|| second_derivative(&self.params, y, self.g_values[i], self.g_prime_values[i]))
    }

    /// Normalised residual `|4y g'' + 2(α - y) g' - n g| / (1 + |g|)` at each
    /// interior node, with `g''` from a five-point difference of the computed `g'`.
    pub fn residuals(&self) -> Vec<(f64, f64)> {
        let h = self.step;
        let (a, n) = (self.params.alpha(), self.params.n());
        let gp = &self.g_prime_values;
        (2..self.grid.len().saturating_sub(2))
            .map(|i| {
                let y = self.grid[i];
                let gpp = (-gp[i + 2] + 8.0 * gp[i + 1] - 8.0 * gp[i - 1] + gp[i - 2]) / (12.0 * h);
                let r = 4.0 * y * gpp + 2.0 * (a - y) * gp[i] - n * self.g_values[i];
                (y, r.abs() / (1.0 + self.g_values[i].abs()))
            })
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().into_iter().map(|(_, r)| r).fold(0.0, f64::max)
    }

    /// Cubic Hermite interpolation of `(g, g')` inside cell `i`.
    fn interpolate(&self, i: usize, y: f64) -> (f64, f64) {
        let h = self.grid[i + 1] - self.grid[i];
        let s = (y - self.grid[i]) / h;
        let herm = |f0: f64, d0: f64, f1: f64, d1: f64| {
            let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            let h10 = s * (1.0 - s) * (1.0 - s);
            let h01 = s * s * (3.0 - 2.0 * s);
            let h11 = s * s * (s - 1.0);
            h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
        };
        let gpp0 = self.g_second(i).unwrap_or(self.params.n() * (self.params.n() + 2.0)
            / (2.0 * self.params.alpha() * (self.params.alpha() + 2.0)) / 2.0);
        let gpp1 = self.g_second(i + 1).expect("interior node");
        let g = herm(self.g_values[i], self.g_prime_values[i], self.g_values[i + 1], self.g_prime_values[i + 1]);
        let gp = herm(self.g_prime_values[i], gpp0, self.g_prime_values[i + 1], gpp1);
        (g, gp)
    }

    /// Interpolated `g(y)`.
    pub fn g_at(&self, y: f64) -> Option<f64> {
        let last = *self.grid.last()?;
        if !(0.0..=last).contains(&y) {
            return None;
        }
        let i = ((y / self.step) as usize).min(self.grid.len() - 2);
        Some(self.interpolate(i, y).0)
    }
}

/// Integrates the ODE on `[0, ymax]` with step `step`.
pub fn ode_shoot(params: ModelParams<f64>, ymax: f64, step: f64) -> Result<OdeSolution> {
    if !(ymax > 0.0) {
        return Err(Error::InvalidParameter {
            name: "ymax",
            value: ymax,
            reason: "must be positive",
        });
    }
    if !(step > 0.0) || step * 4.0 > ymax {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
            reason: "must be positive and well below ymax",
        });
    }
    let m = (ymax / step).ceil() as usize;
    let mut grid = Vec::with_capacity(m + 1);
    let mut g = Vec::with_capacity(m + 1);
    let mut gp = Vec::with_capacity(m + 1);

    for i in 0..=2 {
        let y = i as f64 * step;
        let (gv, gpv) = bootstrap(&params, y);
        grid.push(y);
        g.push(gv);
        gp.push(gpv);
    }

    let rhs = |y: f64, u: f64, v: f64| (v, second_derivative(&params, y, u, v));
    for i in 2..m {
        let y = i as f64 * step;
        let (u, v) = (g[i], gp[i]);
        let (k1u, k1v) = rhs(y, u, v);
        let (k2u, k2v) = rhs(y + 0.5 * step, u + 0.5 * step * k1u, v + 0.5 * step * k1v);
        let (k3u, k3v) = rhs(y + 0.5 * step, u + 0.5 * step * k2u, v + 0.5 * step * k2v);
        let (k4u, k4v) = rhs(y + step, u + step * k3u, v + step * k3v);
        grid.push(y + step);
        g.push(u + step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u));
        gp.push(v + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v));
    }

    let sol = OdeSolution {
        params,
        grid,
        g_values: g,
        g_prime_values: gp,
        step,
    };
    let residual = sol.max_residual();
    if !(residual <= DEFAULT_RESIDUAL_TOL) {
        return Err(Error::OdeAccuracy {
            residual,
            tol: DEFAULT_RESIDUAL_TOL,
        });
    }
    Ok(sol)
}

/// Zero of `2y g'(y) - n g(y)` along the shot solution.
pub fn z_from_ode(params: ModelParams<f64>) -> Result<f64> {
    z_from_ode_with(params, params.default_ymax(), DEFAULT_STEP)
}

pub fn z_from_ode_with(params: ModelParams<f64>, ymax: f64, step: f64) -> Result<f64> {
    let n = params.n();
    let mut ymax = ymax;
    for attempt in 0..2 {
        let sol = ode_shoot(params, ymax, step)?;
        let defect = |i: usize| 2.0 * sol.grid[i] * sol.g_prime_values[i] - n * sol.g_values[i];
        let cell = (0..sol.grid.len() - 1).find(|&i| defect(i) < 0.0 && defect(i + 1) >= 0.0);
        if let Some(i) = cell {
            let f = |y: f64| {
                let (g, gp) = sol.interpolate(i, y);
                2.0 * y * gp - n * g
            };
            let (mut lo, mut hi) = (sol.grid[i], sol.grid[i + 1]);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        if attempt == 0 {
            ymax *= 2.0;
        }
    }
    Err(Error::NoRoot { limit: ymax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::default_table;

    fn p(a: f64, n: f64) -> ModelParams<f64> {
        ModelParams::new(a, n).unwrap()
    }

    #[test]
    fn initial_data() {
        let s = ode_shoot(p(3.0, 1.0), 4.0, 1e-3).unwrap();
        assert_eq!(s.g_values[0], 1.0);
        assert!((s.g_prime_values[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_case() {
        let s = ode_shoot(p(1.0, 1.0), 4.0, 1e-3).unwrap();
        for (i, &y) in s.grid.iter().enumerate() {
            let e = (y / 2.0).exp();
            assert!((s.g_values[i] - e).abs() < 1e-8, "y = {y}");
        }
        assert!(s.max_residual() <= 1e-8);
    }

    #[test]
    fn matches_series_at_excursion_boundary() {
        let c2 = 2.260_197_657_993_723_7;
        let s = ode_shoot(p(3.0, 1.0), 5.0, 1e-3).unwrap();
        let t = default_table(p(3.0, 1.0)).unwrap();
        assert!((s.g_at(c2).unwrap() - t.psi(c2).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn roots() {
        assert!((z_from_ode(p(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-6);
        assert!((z_from_ode(p(3.0, 1.0)).unwrap() - 2.260_197_657_993_723_7).abs() < 1e-6);
        let z = crate::boundary::find_z(p(7.0, 2.0), 1e-12).unwrap().value;
        assert!((z_from_ode(p(7.0, 2.0)).unwrap() - z).abs() < 1e-6);
    }

    #[test]
    fn coarse_step_flagged() {
        assert!(matches!(
            ode_shoot(p(1.0, 1.0), 40.0, 2.0),
            Err(Error::InvalidParameter { .. }) | Err(Error::OdeAccuracy { .. })
        ));
        assert!(matches!(ode_shoot(p(1.0, 1.0), 40.0, 0.5), Err(Error::OdeAccuracy { .. })));
    }

    #[test]
    fn range_error_when_ymax_too_small() {
        assert!(matches!(
            z_from_ode_with(p(10.0, 10.0), 1.0, 1e-3),
            Err(Error::NoRoot { .. })
        ));
    }
}
