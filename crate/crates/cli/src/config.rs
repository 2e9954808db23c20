use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Boundary scale Z, the lower-bound margin, and C for the excursion.
    Boundary,
    /// Power-series coefficients of ψ.
    Coeffs,
    /// Candidate value U*(t0, q0).
    Value,
    /// Monte Carlo value of the threshold rule at Z.
    Simulate,
    /// Thresholds m·Z on common random numbers.
    Sweep,
    /// Lattice dynamic programming oracle.
    DpOracle,
    /// ODE shooting oracle for Z.
    OdeOracle,
    /// Series machinery checks: Λ invariance, iterated polynomials, inductive bounds.
    VerifyAppendix,
    /// Grid checks of the lemmas for the excursion and for (alpha, n).
    VerifyLemmas,
    /// Full acceptance suite.
    Acceptance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    /// Exact bridges for integer alpha from (0, 0), Euler otherwise.
    Auto,
    Exact,
    Euler,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a finite positive number"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a finite non-negative number"))
    }
}

fn unit_time(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1)"))
    }
}

fn count_at_least(s: &str, min: usize) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= min {
        Ok(v)
    } else {
        Err(format!("must be at least {min}"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    count_at_least(s, 1)
}

fn at_least_two(s: &str) -> Result<usize, String> {
    count_at_least(s, 2)
}

/// Parsed command line; echoed into every JSON envelope.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "besselstop", version, about = "Optimal stopping of squared Bessel bridges")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Bridge dimension.
    #[arg(long, default_value_t = 3.0, value_parser = positive, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Payoff power (payoff is q^(n/2)).
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_hyphen_values = true)]
    pub n: f64,
    #[arg(long, default_value_t = 0.0, value_parser = unit_time, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.0, value_parser = non_negative, allow_hyphen_values = true)]
    pub q0: f64,
    /// Bisection width for Z.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000, value_parser = at_least_one)]
    pub paths: usize,
    #[arg(long, default_value_t = 2000, value_parser = at_least_one)]
    pub steps: usize,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.75, 1.0, 1.5, 2.0], value_parser = positive)]
    pub multipliers: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SchemeChoice::Auto)]
    pub scheme: SchemeChoice,
    /// Rows in the boundary-curve CSV.
    #[arg(long, default_value_t = 11, value_parser = at_least_two)]
    pub points: usize,
    #[arg(long = "format", value_enum, default_value_t = OutFormat::Json)]
    pub out_format: OutFormat,
    #[arg(long = "out")]
    pub out_path: Option<PathBuf>,
}
