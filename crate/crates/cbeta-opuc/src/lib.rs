//! Monte Carlo laboratory for the spectral measure of circular β ensembles,
//! built on the coefficient side of the theory: random Verblunsky
//! coefficients α_k with rotationally invariant law |α_k|² ~ Beta(1, β(k+1)/2)
//! drive Szegő's recursion, and every spectral quantity of interest — local
//! dimensions, large-deviation rate functions, finite-level densities — is
//! read off the resulting orthogonal polynomials.
//!
//! The crate is organized around independent computational routes that
//! cross-check one another:
//!
//! * [`verblunsky`] samples coefficient sequences under the raw measure, its
//!   size-biased companion, and rotated variants, with closed-form moments
//!   as oracles;
//! * [`opuc`] advances the polynomials themselves, by matrix recursion and
//!   by Poisson-kernel phase products, plus the five-diagonal unitary
//!   matrix realization;
//! * [`measure`] tabulates and samples finite-level spectral densities and
//!   verifies the martingale and size-bias structure by Monte Carlo;
//! * [`dimension`] estimates local scaling exponents of the measure and the
//!   induced Hausdorff-dimension point via two-sided polynomial growth;
//! * [`ldp`] evaluates the large-deviation rate functions for the polynomial
//!   growth exponents, with quadrature oracles for the underlying cumulant
//!   limits.
//!
//! Everything downstream of a seed is deterministic: each Monte Carlo
//! trajectory owns an RNG stream indexed by its trial number, so results are
//! byte-identical across worker counts.

pub mod cli;
pub mod dimension;
pub mod error;
pub mod ldp;
pub mod measure;
pub mod opuc;
pub mod parallel;
pub mod stats;
pub mod verblunsky;

pub use error::{Error, Result};
