//! Limit laws of multi-matrix models with polynomial potentials, computed three
//! independent ways and cross-validated:
//!
//! * [`sdsolver`] solves the Schwinger-Dyson moment equations, either as a
//!   truncated power series in the coupling constants (whose coefficients are
//!   signed planar-map counts) or as a damped numeric fixed point at fixed
//!   couplings.
//! * [`mapcount`] enumerates colored maps of each genus by brute-force gluing
//!   of labeled stars. Counts are exact big integers and serve as the
//!   combinatorial oracle for every series coefficient.
//! * [`langevin`] integrates the matrix Langevin dynamics
//!   `dX = dH - DV(X)/2 dt` on tuples of Hermitian matrices and measures trace
//!   observables, spectra, coupling contraction and support connectivity.
//!
//! [`onematrix`] provides the high-precision analytic solution of the quartic
//! one-matrix model (Cauchy transform, spectral density, exact moments) and
//! [`entropy`] evaluates the microstates free entropy from an interpolation
//! over Schwinger-Dyson solutions. [`ncpoly`] supplies the shared symbolic
//! algebra of non-commutative *-polynomials.

pub mod entropy;
pub mod langevin;
pub mod mapcount;
pub mod ncpoly;
pub mod numeric;
pub mod onematrix;
pub mod sdsolver;

/// Complex scalar used for all coefficients and matrix entries.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix; `faer::c64` is the same type as [`C64`].
pub type CMat = faer::Mat<faer::c64>;

pub use ncpoly::{Letter, NCPoly, Potential, TensorPoly, Word};
pub use sdsolver::{BetaSeries, MomentFunctional};
pub use mapcount::StarSystem;
pub use onematrix::OneCutSolution;
pub use entropy::EntropyReport;
pub use langevin::{SimConfig, SpectralReport};
