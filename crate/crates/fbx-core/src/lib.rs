//! Finite-blocklength converse bounds for Gaussian channels with feedback,
//! plus the Monte Carlo machinery used to verify them.
//!
//! Module map:
//! - [`error`]: shared error type.
//! - [`special`]: Gaussian CDF/quantile, incomplete gamma, noncentral
//!   chi-square (linear and log domain), Kolmogorov distribution.
//! - [`quad`]: adaptive Simpson quadrature.
//! - [`llr`]: the per-symbol statistic λ(x, y), its moments, and the
//!   code-independent law and MGF of its n-sum.
//! - [`bounds`]: capacity, dispersion, and the scalar converse bounds
//!   (finite-n, κ-form, normal approximation).
//! - [`parallel`]: water-filling and the parallel-channel converse with
//!   its variance envelope and strong-converse check.
//! - [`sim`]: deterministic feedback-code simulator and the empirical
//!   checks (distribution identity, MGF, Berry–Esséen, variance
//!   envelope).
//! - [`hypothesis`]: Neyman–Pearson β (finite and Gaussian), converse
//!   lower bounds, and the toy-code meta-converse harness.

pub mod bounds;
pub mod error;
pub mod hypothesis;
pub mod llr;
pub mod parallel;
pub mod quad;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
