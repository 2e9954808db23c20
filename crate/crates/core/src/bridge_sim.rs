//! Monte Carlo for the squared Bessel bridge and threshold stopping rules.
//!
//! Every path draws from its own ChaCha8 stream (the master seed picks the key,
//! the path index picks the stream), and sums run over per-path results in
//! index order, so estimates do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ModelParams;

/// Default distance of the last Euler node from `t = 1`.
pub const DEFAULT_EPS_END: f64 = 1e-6;
/// Below this many paths an estimate is flagged.
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Sum of `α` squared Brownian bridges, exact at the grid nodes.
    ExactIntegerDim,
    EulerFullTruncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams<f64>,
    pub t0: f64,
    pub q0: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub eps_end: f64,
}

impl SimConfig {
    /// Exact scheme from `(0, 0)`.
    pub fn exact(params: ModelParams<f64>, n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            params,
            t0: 0.0,
            q0: 0.0,
            n_paths,
            n_steps,
            seed,
            scheme: Scheme::ExactIntegerDim,
            eps_end: DEFAULT_EPS_END,
        }
    }

    /// Full-truncation Euler from `(t0, q0)`.
    pub fn euler(
        params: ModelParams<f64>,
        t0: f64,
        q0: f64,
        n_paths: usize,
        n_steps: usize,
        seed: u64,
    ) -> Self {
        Self {
            params,
            t0,
            q0,
            n_paths,
            n_steps,
            seed,
            scheme: Scheme::EulerFullTruncation,
            eps_end: DEFAULT_EPS_END,
        }
    }

    /// Exact scheme when it applies, Euler otherwise.
    pub fn preferred(
        params: ModelParams<f64>,
        t0: f64,
        q0: f64,
        n_paths: usize,
        n_steps: usize,
        seed: u64,
    ) -> Self {
        if integer_dimension(params.alpha()).is_some() && t0 == 0.0 && q0 == 0.0 {
            Self::exact(params, n_paths, n_steps, seed)
        } else {
            Self::euler(params, t0, q0, n_paths, n_steps, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.t0 >= 0.0 && self.t0 < 1.0) {
            return bad("t0", self.t0, "must lie in [0, 1)");
        }
        if !(self.q0 >= 0.0 && self.q0.is_finite()) {
            return bad("q0", self.q0, "must be finite and non-negative");
        }
        if self.n_steps == 0 {
            return bad("n_steps", 0.0, "must be positive");
        }
        if self.n_paths == 0 {
            return bad("n_paths", 0.0, "must be positive");
        }
        match self.scheme {
            Scheme::ExactIntegerDim => {
                if integer_dimension(self.params.alpha()).is_none() {
                    return Err(Error::Scheme(format!(
                        "exact scheme needs a positive integer alpha, got {}",
                        self.params.alpha()
                    )));
                }
                if self.t0 != 0.0 || self.q0 != 0.0 {
                    return Err(Error::Scheme(
                        "exact scheme starts from t0 = 0, q0 = 0; use the Euler scheme".into(),
                    ));
                }
            }
            Scheme::EulerFullTruncation => {
                if !(self.eps_end > 0.0 && self.eps_end < 1.0 - self.t0) {
                    return bad("eps_end", self.eps_end, "must lie in (0, 1 - t0)");
                }
            }
        }
        Ok(())
    }

    fn t_end(&self) -> f64 {
        match self.scheme {
            Scheme::ExactIntegerDim => 1.0,
            Scheme::EulerFullTruncation => 1.0 - self.eps_end,
        }
    }

    fn node_time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end()
        } else {
            self.t0 + (self.t_end() - self.t0) * k as f64 / self.n_steps as f64
        }
    }
}

fn integer_dimension(alpha: f64) -> Option<usize> {
    (alpha >= 1.0 && alpha.fract() == 0.0 && alpha <= 1e6).then_some(alpha as usize)
}

fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Walks path `index`, calling `visit(t, q)` at every node until it returns `false`.
fn walk(config: &SimConfig, index: u64, mut visit: impl FnMut(f64, f64) -> bool) {
    let mut rng = path_rng(config.seed, index);
    let alpha = config.params.alpha();
    match config.scheme {
        Scheme::ExactIntegerDim => {
            let dim = alpha as usize;
            let mut b = vec![0.0f64; dim];
            if !visit(0.0, 0.0) {
                return;
            }
            for k in 0..config.n_steps {
                let (t, t_next) = (config.node_time(k), config.node_time(k + 1));
                let h = t_next - t;
                let rest = 1.0 - t;
                let shrink = 1.0 - h / rest;
                let sd = (h * (rest - h).max(0.0) / rest).sqrt();
                let mut q = 0.0;
                for x in b.iter_mut() {
                    let xi: f64 = rng.sample(StandardNormal);
                    *x = *x * shrink + sd * xi;
                    q += *x * *x;
                }
                if k + 1 == config.n_steps {
                    b.iter_mut().for_each(|x| *x = 0.0);
                    q = 0.0;
                }
                if !visit(t_next, q) {
                    return;
                }
            }
        }
        Scheme::EulerFullTruncation => {
            let mut q = config.q0;
            if !visit(config.t0, q) {
                return;
            }
            for k in 0..config.n_steps {
                let (t, t_next) = (config.node_time(k), config.node_time(k + 1));
                let h = t_next - t;
                let xi: f64 = rng.sample(StandardNormal);
                let drift = (alpha - 2.0 * q / (1.0 - t)) * h;
                q = (q + drift + 2.0 * q.max(0.0).sqrt() * h.sqrt() * xi).max(0.0);
                if !visit(t_next, q) {
                    return;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgePath {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub seed_used: u64,
    pub path_index: u64,
}

impl BridgePath {
    /// Number of nodes after the first where the path sits at zero, excluding `t = 1`.
    pub fn zero_hits(&self) -> usize {
        self.times
            .iter()
            .zip(&self.q)
            .skip(1)
            .filter(|(&t, &q)| t < 1.0 && q == 0.0)
            .count()
    }
}

fn simulate(config: &SimConfig, index: u64) -> Result<BridgePath> {
    config.validate()?;
    let mut times = Vec::with_capacity(config.n_steps + 1);
    let mut q = Vec::with_capacity(config.n_steps + 1);
    walk(config, index, |t, v| {
        times.push(t);
        q.push(v);
        true
    });
    Ok(BridgePath {
        times,
        q,
        seed_used: config.seed,
        path_index: index,
    })
}

/// Path `index` of the exact scheme.
pub fn simulate_exact(config: &SimConfig, index: u64) -> Result<BridgePath> {
    if config.scheme != Scheme::ExactIntegerDim {
        return Err(Error::Scheme("config selects the Euler scheme".into()));
    }
    simulate(config, index)
}

/// Path `index` of the Euler scheme.
pub fn simulate_euler(config: &SimConfig, index: u64) -> Result<BridgePath> {
    if config.scheme != Scheme::EulerFullTruncation {
        return Err(Error::Scheme("config selects the exact scheme".into()));
    }
    simulate(config, index)
}

/// Stop the first time `Q_s >= Z (1 - s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub z: f64,
}

impl ThresholdPolicy {
    pub fn new(z: f64) -> Result<Self> {
        if z > 0.0 && z.is_finite() {
            Ok(Self { z })
        } else {
            Err(Error::InvalidParameter {
                name: "Z",
                value: z,
                reason: "threshold must be positive",
            })
        }
    }

    fn triggers(&self, t: f64, q: f64) -> bool {
        t < 1.0 && q >= self.z * (1.0 - t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingOutcome {
    pub tau: f64,
    pub payoff: f64,
    pub stopped: bool,
}

impl StoppingOutcome {
    const UNSTOPPED: Self = Self {
        tau: 1.0,
        payoff: 0.0,
        stopped: false,
    };
}

pub fn apply_policy(path: &BridgePath, policy: ThresholdPolicy, n: f64) -> StoppingOutcome {
    path.times
        .iter()
        .zip(&path.q)
        .find(|(&t, &q)| policy.triggers(t, q))
        .map_or(StoppingOutcome::UNSTOPPED, |(&t, &q)| StoppingOutcome {
            tau: t,
            payoff: q.powf(n / 2.0),
            stopped: true,
        })
}

/// Outcomes of several thresholds on the same path, in one pass.
fn evaluate_thresholds(config: &SimConfig, index: u64, policies: &[ThresholdPolicy]) -> Vec<StoppingOutcome> {
    let half_n = config.params.n() / 2.0;
    let mut out = vec![StoppingOutcome::UNSTOPPED; policies.len()];
    let mut open = policies.len();
    walk(config, index, |t, q| {
        for (o, p) in out.iter_mut().zip(policies) {
            if !o.stopped && p.triggers(t, q) {
                *o = StoppingOutcome {
                    tau: t,
                    payoff: q.powf(half_n),
                    stopped: true,
                };
                open -= 1;
            }
        }
        open > 0
    });
    out
}

/// Pairwise summation in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// `(mean, stderr)` of a sample.
fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub ci95: (f64, f64),
    pub stop_fraction: f64,
    /// Set when `n_paths < 100`.
    pub low_path_count: bool,
}

impl McResult {
    fn from_outcomes(outcomes: &[StoppingOutcome]) -> Self {
        let payoffs: Vec<f64> = outcomes.iter().map(|o| o.payoff).collect();
        let (mean, stderr) = mean_stderr(&payoffs);
        let stopped = outcomes.iter().filter(|o| o.stopped).count();
        Self {
            mean,
            stderr,
            n_paths: outcomes.len(),
            ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
            stop_fraction: stopped as f64 / outcomes.len() as f64,
            low_path_count: outcomes.len() < MIN_PATHS,
        }
    }
}

fn run_paths(config: &SimConfig, policies: &[ThresholdPolicy]) -> Result<Vec<Vec<StoppingOutcome>>> {
    config.validate()?;
    Ok((0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| evaluate_thresholds(config, i, policies))
        .collect())
}

pub fn mc_estimate(config: &SimConfig, policy: ThresholdPolicy) -> Result<McResult> {
    let outcomes: Vec<StoppingOutcome> = run_paths(config, &[policy])?.into_iter().map(|v| v[0]).collect();
    Ok(McResult::from_outcomes(&outcomes))
}

/// Paired comparison of the candidate threshold against another one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    /// Mean of `payoff(candidate) - payoff(this row)`.
    pub mean: f64,
    pub stderr: f64,
}

impl PairedDifference {
    /// The candidate is not beaten by more than one paired standard error.
    pub fn candidate_holds(&self) -> bool {
        self.mean >= -self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub multiplier: f64,
    pub z_level: f64,
    pub result: McResult,
    pub candidate: bool,
    /// Absent for the candidate row and when no multiplier equals one.
    pub versus_candidate: Option<PairedDifference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub base_z: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Every paired comparison favours the candidate row.
    pub fn candidate_is_best(&self) -> bool {
        self.rows.iter().any(|r| r.candidate)
            && self
                .rows
                .iter()
                .filter_map(|r| r.versus_candidate)
                .all(|d| d.candidate_holds())
    }
}

fn is_candidate(m: f64) -> bool {
    (m - 1.0).abs() <= 1e-12
}

/// Thresholds `m Z` on a common path ensemble.
pub fn policy_sweep(config: &SimConfig, base_z: f64, multipliers: &[f64]) -> Result<SweepResult> {
    let policies = multipliers
        .iter()
        .map(|&m| {
            if m > 0.0 && m.is_finite() {
                ThresholdPolicy::new(m * base_z)
            } else {
                Err(Error::InvalidParameter {
                    name: "multiplier",
                    value: m,
                    reason: "must be positive",
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes = run_paths(config, &policies)?;
    let column = |j: usize| -> Vec<StoppingOutcome> { outcomes.iter().map(|row| row[j]).collect() };
    let cand = multipliers.iter().position(|&m| is_candidate(m));

    let rows = multipliers
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let versus_candidate = cand.filter(|&c| c != j).map(|c| {
                let diffs: Vec<f64> = outcomes.iter().map(|row| row[c].payoff - row[j].payoff).collect();
                let (mean, stderr) = mean_stderr(&diffs);
                PairedDifference { mean, stderr }
            });
            SweepRow {
                multiplier: m,
                z_level: policies[j].z,
                result: McResult::from_outcomes(&column(j)),
                candidate: is_candidate(m),
                versus_candidate,
            }
        })
        .collect();
    Ok(SweepResult { base_z, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, n: f64) -> ModelParams<f64> {
        ModelParams::new(a, n).unwrap()
    }

    /// Sample mean and standard error of `Q` at the node nearest `t`.
    fn moment_at(config: &SimConfig, t: f64) -> (f64, f64) {
        let xs: Vec<f64> = (0..config.n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut out = f64::NAN;
                walk(config, i, |s, q| {
                    if s >= t - 1e-12 {
                        out = q;
                        false
                    } else {
                        true
                    }
                });
                out
            })
            .collect();
        mean_stderr(&xs)
    }

    #[test]
    fn exact_bridge_mean() {
        let c = SimConfig::exact(p(3.0, 1.0), 200_000, 2, 7);
        let (m, se) = moment_at(&c, 0.5);
        assert!((m - 0.75).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn euler_bridge_mean() {
        let c = SimConfig::euler(p(3.0, 1.0), 0.0, 0.0, 20_000, 4000, 11);
        let (m, se) = moment_at(&c, 0.5);
        assert!((m - 0.75).abs() < 3.0 * se + 5e-3, "{m} ± {se}");
    }

    #[test]
    fn pinned_and_nonnegative() {
        let c = SimConfig::exact(p(1.0, 1.0), 10, 50, 3);
        for i in 0..10 {
            let path = simulate_exact(&c, i).unwrap();
            assert_eq!(path.q[0], 0.0);
            assert_eq!(*path.q.last().unwrap(), 0.0);
            assert_eq!(*path.times.last().unwrap(), 1.0);
            assert!(path.q.iter().all(|&q| q >= 0.0));
        }
        let e = SimConfig::euler(p(0.5, 1.0), 0.2, 1.0, 10, 200, 3);
        let path = simulate_euler(&e, 0).unwrap();
        assert!(path.q.iter().all(|&q| q >= 0.0));
        assert!((path.times.last().unwrap() - (1.0 - DEFAULT_EPS_END)).abs() < 1e-15);
    }

    #[test]
    fn low_dimension_hits_zero() {
        let e = SimConfig::euler(p(0.5, 1.0), 0.9, 5.0, 200, 2000, 5);
        let hits = (0..200).filter(|&i| simulate_euler(&e, i).unwrap().zero_hits() > 0).count();
        assert!(hits > 100, "{hits}");
    }

    #[test]
    fn scheme_validation() {
        let c = SimConfig::exact(p(2.5, 1.0), 10, 10, 0);
        assert!(matches!(simulate_exact(&c, 0), Err(Error::Scheme(_))));
        let mut c = SimConfig::exact(p(2.0, 1.0), 10, 10, 0);
        c.q0 = 1.0;
        assert!(matches!(c.validate(), Err(Error::Scheme(_))));
        let mut e = SimConfig::euler(p(2.0, 1.0), 0.5, 0.0, 10, 10, 0);
        e.eps_end = 0.6;
        assert!(e.validate().is_err());
    }

    #[test]
    fn policy_outcomes() {
        let path = BridgePath {
            times: vec![0.0, 0.5, 1.0],
            q: vec![0.0, 0.0, 0.0],
            seed_used: 0,
            path_index: 0,
        };
        let pol = ThresholdPolicy::new(1.0).unwrap();
        assert_eq!(apply_policy(&path, pol, 1.0), StoppingOutcome::UNSTOPPED);
        let path = BridgePath {
            times: vec![0.2, 0.5, 1.0],
            q: vec![0.9, 0.1, 0.0],
            seed_used: 0,
            path_index: 0,
        };
        let o = apply_policy(&path, pol, 1.0);
        assert!(o.stopped && o.tau == 0.2 && (o.payoff - 0.9f64.sqrt()).abs() < 1e-15);
        assert!(ThresholdPolicy::new(0.0).is_err());
    }

    #[test]
    fn streaming_matches_stored_path() {
        let c = SimConfig::exact(p(3.0, 1.0), 20, 300, 99);
        let pol = ThresholdPolicy::new(2.26).unwrap();
        for i in 0..20 {
            let stored = apply_policy(&simulate_exact(&c, i).unwrap(), pol, 1.0);
            assert_eq!(stored, evaluate_thresholds(&c, i, &[pol])[0]);
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let c = SimConfig::exact(p(1.0, 1.0), 3000, 200, 42);
        let pol = ThresholdPolicy::new(1.0).unwrap();
        let a = mc_estimate(&c, pol).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| mc_estimate(&c, pol).unwrap());
        assert_eq!(a, b);
        assert!(!a.low_path_count);
        assert!((a.ci95.1 - a.mean - 1.96 * a.stderr).abs() < 1e-15);
    }

    #[test]
    fn single_multiplier_sweep_matches_estimate() {
        let c = SimConfig::exact(p(1.0, 1.0), 500, 100, 1);
        let s = policy_sweep(&c, 1.0, &[1.0]).unwrap();
        let m = mc_estimate(&c, ThresholdPolicy::new(1.0).unwrap()).unwrap();
        assert_eq!(s.rows[0].result, m);
        assert!(s.rows[0].candidate && s.rows[0].versus_candidate.is_none());
        assert!(mc_estimate(&SimConfig::exact(p(1.0, 1.0), 50, 10, 1), ThresholdPolicy::new(1.0).unwrap())
            .unwrap()
            .low_path_count);
    }

    #[test]
    fn brownian_bridge_value() {
        let c = SimConfig::exact(p(1.0, 1.0), 50_000, 1000, 2024);
        let m = mc_estimate(&c, ThresholdPolicy::new(1.0).unwrap()).unwrap();
        let target = (-0.5f64).exp();
        assert!((m.mean - target).abs() <= (3.0 * m.stderr).max(0.01 * target), "{m:?}");
    }
}
