//! Numerical core for the stochastic fractional heat equation: stable Green
//! functions, moment kernels, discrete-semigroup approximations, a lattice
//! solver and ensemble analysis.

pub mod analysis;
pub mod error;
pub mod kernel_series;
pub mod quad;
pub mod semigroup_approx;
pub mod spde_solver;
pub mod special;
pub mod stable_green;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
