//! Optimal stopping of squared Bessel bridges with power payoffs.
//!
//! For an α-dimensional squared Bessel bridge `Q` and payoff `Q^{n/2}`, the
//! optimal rule stops the first time `Q_t >= Z (1 - t)`, where `Z` is the
//! unique positive root of a Kummer-type power series. This crate computes
//! `Z`, the value function, and checks both against ODE shooting, a lattice
//! dynamic program and Monte Carlo simulation of the bridge.
//!
//! The analytic core (`series`, `boundary`, `value`, `quadrature`) is generic
//! over [`Real`]; the aliases below fix it to `f64`.

pub mod acceptance;
pub mod boundary;
pub mod bridge_sim;
pub mod error;
pub mod oracles;
pub mod quadrature;
pub mod scalar;
pub mod series;
pub mod value;
pub mod verification;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params = series::ModelParams<f64>;
pub type Table = series::CoefficientTable<f64>;
pub type Candidate = value::CandidateSolution<f64>;
pub type Excursion = value::ExcursionSolution<f64>;
pub type Root = boundary::RootResult<f64>;
