//! Backward induction on a `(t, q)` lattice for the discrete-time stopping
//! problem `V = max(q^{n/2}, E[V(t + Δt, Q_{t+Δt}) | Q_t = q])`.
//!
//! The one-step law is the Euler increment of the bridge SDE, with mean
//! `q + (α - 2q/(1-t))Δt` and variance `4qΔt`. It is represented by a
//! three-point Gauss–Hermite rule whose nodes are spread onto the q-grid by
//! linear interpolation, so every weight is non-negative. Interpolation adds
//! variance; the Gauss–Hermite spread is shrunk to compensate where it can.
//! Points below zero are reflected.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ModelParams;

/// Reference time steps.
pub const REFERENCE_T_STEPS: usize = 4000;
/// Reference q steps.
pub const REFERENCE_Q_STEPS: usize = 800;
/// Reference `q_max` in units of `Z`.
pub const REFERENCE_Q_MAX_FACTOR: f64 = 6.0;
/// Distance of the last time slice from `t = 1`.
pub const DEFAULT_EPS_END: f64 = 1e-4;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const GH_WEIGHTS: [f64; 3] = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
const GH_NODES: [f64; 3] = [-SQRT3, 0.0, SQRT3];
const VARIANCE_SWEEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub t0: f64,
    pub q0: f64,
    pub t_steps: usize,
    pub q_max: f64,
    pub q_steps: usize,
    pub eps_end: f64,
}

impl LatticeConfig {
    /// Reference resolution for a boundary scale `z`, started at `(t0, q0)`.
    pub fn reference(z: f64, t0: f64, q0: f64) -> Self {
        Self {
            t0,
            q0,
            t_steps: REFERENCE_T_STEPS,
            q_max: REFERENCE_Q_MAX_FACTOR * z,
            q_steps: REFERENCE_Q_STEPS,
            eps_end: DEFAULT_EPS_END,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if self.t_steps < 100 {
            return bad("t_steps", self.t_steps as f64, "needs at least 100 steps");
        }
        if self.q_steps < 2 {
            return bad("q_steps", self.q_steps as f64, "needs at least 2 steps");
        }
        if !(self.eps_end > 0.0 && self.eps_end < 1.0) {
            return bad("eps_end", self.eps_end, "must lie in (0, 1)");
        }
        if !(self.t0 >= 0.0 && self.t0 < 1.0 - self.eps_end) {
            return bad("t0", self.t0, "must lie in [0, 1 - eps_end)");
        }
        if !(self.q_max > 0.0 && self.q_max.is_finite()) {
            return bad("q_max", self.q_max, "must be positive");
        }
        if !(self.q0 >= 0.0 && self.q0 <= self.q_max) {
            return bad("q0", self.q0, "must lie in [0, q_max]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeResult {
    pub config: LatticeConfig,
    pub t_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    /// `value[i][j]` at `(t_grid[i], q_grid[j])`.
    pub value: Vec<Vec<f64>>,
    /// Smallest grid q where stopping is optimal, per time slice
    /// (`q_max` if there is none).
    pub boundary_estimate: Vec<f64>,
    /// Whether the continuation set is `[0, boundary_estimate)` on each slice.
    pub continuation_is_interval: Vec<bool>,
    pub value_at_origin: f64,
}

impl LatticeResult {
    /// `value >= q^{n/2}` at every node.
    pub fn obstacle_holds(&self, n: f64) -> bool {
        self.value.iter().all(|row| {
            row.iter()
                .zip(&self.q_grid)
                .all(|(&v, &q)| v >= q.powf(n / 2.0))
        })
    }
}

struct Slice<'a> {
    values: &'a [f64],
    dq: f64,
    q_max: f64,
    half_n: f64,
}

impl Slice<'_> {
    fn at(&self, x: f64) -> f64 {
        if x >= self.q_max {
            return x.powf(self.half_n);
        }
        let s = x / self.dq;
        let j = (s as usize).min(self.values.len() - 2);
        let th = s - j as f64;
        self.values[j] * (1.0 - th) + self.values[j + 1] * th
    }
}

/// Variance added by linear interpolation of a point onto the grid.
fn interpolation_variance(x: f64, dq: f64) -> f64 {
    let th = (x / dq).fract();
    th * (1.0 - th) * dq * dq
}

fn transition_points(mu: f64, var: f64, dq: f64) -> [f64; 3] {
    let mut s2 = var;
    let mut pts = [mu; 3];
    for _ in 0..VARIANCE_SWEEPS {
        let s = s2.max(0.0).sqrt();
        for (p, z) in pts.iter_mut().zip(GH_NODES) {
            *p = (mu + z * s).abs();
        }
        let iv: f64 = pts
            .iter()
            .zip(GH_WEIGHTS)
            .map(|(&x, w)| w * interpolation_variance(x, dq))
            .sum();
        s2 = (var - iv).max(0.0);
    }
    let s = s2.sqrt();
    for (p, z) in pts.iter_mut().zip(GH_NODES) {
        *p = (mu + z * s).abs();
    }
    pts
}

/// Discrete-time optimal stopping value on the lattice.
pub fn dp_value(params: ModelParams<f64>, config: LatticeConfig) -> Result<LatticeResult> {
    config.validate()?;
    let (alpha, half_n) = (params.alpha(), params.n() / 2.0);
    let t_end = 1.0 - config.eps_end;
    let dt = (t_end - config.t0) / config.t_steps as f64;
    let dq = config.q_max / config.q_steps as f64;
    let t_grid: Vec<f64> = (0..=config.t_steps)
        .map(|i| if i == config.t_steps { t_end } else { config.t0 + i as f64 * dt })
        .collect();
    let q_grid: Vec<f64> = (0..=config.q_steps).map(|j| j as f64 * dq).collect();
    let payoff: Vec<f64> = q_grid.iter().map(|q| q.powf(half_n)).collect();

    let mut value = vec![Vec::new(); config.t_steps + 1];
    let mut boundary_estimate = vec![0.0; config.t_steps + 1];
    let mut interval = vec![true; config.t_steps + 1];
    value[config.t_steps] = payoff.clone();
    boundary_estimate[config.t_steps] = q_grid[1];

    for i in (0..config.t_steps).rev() {
        let t = t_grid[i];
        let h = t_grid[i + 1] - t;
        let next = Slice {
            values: &value[i + 1],
            dq,
            q_max: config.q_max,
            half_n,
        };
        let rows: Vec<(f64, bool)> = q_grid
            .par_iter()
            .zip(payoff.par_iter())
            .map(|(&q, &stop)| {
                let mu = q + (alpha - 2.0 * q / (1.0 - t)) * h;
                let pts = transition_points(mu, 4.0 * q * h, dq);
                let cont: f64 = pts.iter().zip(GH_WEIGHTS).map(|(&x, w)| w * next.at(x)).sum();
                let stopping = stop > 0.0 && stop >= cont;
                (if stopping { stop } else { cont }, stopping)
            })
            .collect();
        let first = rows.iter().position(|r| r.1);
        boundary_estimate[i] = first.map_or(config.q_max, |j| q_grid[j]);
        interval[i] = first.map_or(true, |j| rows[j..].iter().all(|r| r.1));
        value[i] = rows.into_iter().map(|r| r.0).collect();
    }

    let value_at_origin = Slice {
        values: &value[0],
        dq,
        q_max: config.q_max,
        half_n,
    }
    .at(config.q0);

    Ok(LatticeResult {
        config,
        t_grid,
        q_grid,
        value,
        boundary_estimate,
        continuation_is_interval: interval,
        value_at_origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, n: f64) -> ModelParams<f64> {
        ModelParams::new(a, n).unwrap()
    }

    fn coarse(z: f64) -> LatticeConfig {
        LatticeConfig {
            t_steps: 400,
            q_steps: 200,
            ..LatticeConfig::reference(z, 0.0, 0.0)
        }
    }

    #[test]
    fn weights_preserve_mean_away_from_zero() {
        let dq = 0.01;
        let (mu, var) = (1.234, 2e-3);
        let pts = transition_points(mu, var, dq);
        let mean: f64 = pts.iter().zip(GH_WEIGHTS).map(|(x, w)| w * x).sum();
        assert!((mean - mu).abs() < 1e-12);
        let v: f64 = pts
            .iter()
            .zip(GH_WEIGHTS)
            .map(|(&x, w)| w * ((x - mu).powi(2) + interpolation_variance(x, dq)))
            .sum();
        assert!((v - var).abs() < 1e-3 * var, "{v} vs {var}");
    }

    #[test]
    fn brownian_bridge_coarse() {
        let r = dp_value(p(1.0, 1.0), coarse(1.0)).unwrap();
        let target = (-0.5f64).exp();
        assert!((r.value_at_origin - target).abs() / target < 0.03, "{}", r.value_at_origin);
        assert!(r.obstacle_holds(1.0));
        assert!(r.continuation_is_interval.iter().all(|&b| b));
    }

    #[test]
    fn refinement_shrinks_the_error() {
        let target = (-0.5f64).exp();
        let err = |t_steps, q_steps| {
            let c = LatticeConfig { t_steps, q_steps, ..LatticeConfig::reference(1.0, 0.0, 0.0) };
            (dp_value(p(1.0, 1.0), c).unwrap().value_at_origin - target).abs()
        };
        let (e1, e2, e3) = (err(250, 100), err(500, 200), err(1000, 400));
        assert!(e2 < e1 && e3 < e2, "{e1} {e2} {e3}");
    }

    #[test]
    fn boundary_tracks_linear_rule() {
        let r = dp_value(p(1.0, 1.0), LatticeConfig::reference(1.0, 0.0, 0.0)).unwrap();
        for (i, &t) in r.t_grid.iter().enumerate().filter(|(_, &t)| t <= 0.8) {
            let ratio = r.boundary_estimate[i] / (1.0 - t);
            assert!((ratio - 1.0).abs() < 0.05, "t = {t}: {ratio}");
        }
    }

    #[test]
    fn invalid_config() {
        let mut c = coarse(1.0);
        c.t_steps = 50;
        assert!(dp_value(p(1.0, 1.0), c).is_err());
        let mut c = coarse(1.0);
        c.q0 = 100.0;
        assert!(dp_value(p(1.0, 1.0), c).is_err());
    }
}
