//! Shared numeric utilities: Gauss-Legendre quadrature and small statistics
//! helpers used by the solvers and the simulation diagnostics.

pub mod quadrature;
pub mod stats;

pub use quadrature::{gauss_legendre, gauss_legendre_on};
pub use stats::{batch_means_se, ks_statistic, linear_fit, median, LinearFit};
