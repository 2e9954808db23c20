//! Independent numerical oracles for the series construction.

pub mod lattice;
pub mod ode;
pub mod special;
