use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("argument {name} = {value} outside validated range [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("series did not converge within {max_terms} terms at y = {ymax} (last term ratio {last_ratio:e})")]
    Truncation {
        max_terms: usize,
        ymax: f64,
        last_ratio: f64,
        /// Coefficients computed before the cap was hit.
        partial: Vec<f64>,
    },
    #[error("no sign change found while growing bracket up to {limit:e}")]
    NoRoot { limit: f64 },
    #[error("quadrature failed to reach tolerance {tol:e} on [{a}, {b}] (estimate {estimate:e})")]
    Quadrature {
        a: f64,
        b: f64,
        tol: f64,
        estimate: f64,
    },
    #[error("ODE integration inaccurate: residual {residual:e} exceeds {tol:e}; reduce the step")]
    OdeAccuracy { residual: f64, tol: f64 },
    #[error("simulation scheme error: {0}")]
    Scheme(String),
}

pub type Result<T> = std::result::Result<T, Error>;
