//! Converse bounds on the maximal code size for the unit-noise AWGN
//! channel with feedback under a peak power constraint, plus the
//! normal-approximation reference curve.
//!
//! Three evaluations share one report shape:
//! - `finite_n_converse`: the explicit finite-n bound
//!   (n/2)log₂(1+P) + σ√n·Φ⁻¹(ε + 2T/(σ³√n)) − log₂(T/(σ³√n)),
//!   valid whenever the shifted quantile argument stays below 1;
//! - `theorem1_kappa_form`: its n-free-constant relaxation
//!   nC + √(nV)Φ⁻¹(ε) + ½log₂n + κ, where κ packages the Berry–Esséen
//!   and Taylor slack;
//! - `normal_approximation`: nC + √(nV)Φ⁻¹(ε) + ½log₂n with the O(1)
//!   term set to zero — a reference curve, not a bound.
//!
//! All outputs are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llr::{llr_moments, LlrMoments};
use crate::special::{normal_quantile, normal_quantile_deriv};

/// Scalar AWGN channel with unit noise variance and peak input power P.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarChannel {
    power: f64,
}

impl ScalarChannel {
    pub fn new(power: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::NonPositivePower(power));
        }
        Ok(Self { power })
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

/// First- and second-order channel coefficients, in bits and bits².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityDispersion {
    pub capacity: f64,
    pub dispersion: f64,
}

/// Capacity C(P) = ½log₂(1+P) in bits per channel use.
pub fn capacity(ch: &ScalarChannel) -> f64 {
    0.5 * (1.0 + ch.power).log2()
}

/// Dispersion V(P) = P(P+2)(log₂e)²/(2(P+1)²) in bits² per channel use.
pub fn dispersion(ch: &ScalarChannel) -> f64 {
    let p = ch.power;
    p * (p + 2.0) * std::f64::consts::LOG2_E.powi(2) / (2.0 * (p + 1.0).powi(2))
}

pub fn capacity_dispersion(ch: &ScalarChannel) -> CapacityDispersion {
    CapacityDispersion { capacity: capacity(ch), dispersion: dispersion(ch) }
}

/// Which curve a [`BoundReport`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "finite_n_converse")]
    FiniteNConverse,
    #[serde(rename = "theorem1_kappa_form")]
    KappaForm,
    #[serde(rename = "normal_approximation")]
    NormalApproximation,
}

/// Every constant that enters a bound evaluation, so a report can be
/// audited without rerunning the moment quadrature. Fields that a given
/// kind does not use are omitted from the serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Per-symbol standard deviation σ = √V(P), bits.
    pub sigma: f64,
    /// Third absolute moment T, bits³ (converse kinds only).
    #[serde(rename = "T", skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    /// Berry–Esséen/Taylor constant κ̄ (κ-form only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa_bar: Option<f64>,
    /// The n-free constant κ (κ-form only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
}

/// One evaluated curve point: a bound (or reference value) on log₂ M at
/// blocklength n and error probability ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u64,
    pub epsilon: f64,
    pub kind: BoundKind,
    #[serde(rename = "log_m_bound_bits")]
    pub log_m_bound: f64,
    /// The threshold log₂ ξ_n backing the converse argument; absent for
    /// the normal-approximation reference curve.
    #[serde(
        rename = "threshold_log_xi_bits",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub threshold_log_xi: Option<f64>,
    pub constants: BoundConstants,
}

fn check_args(n: u64, epsilon: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength n must be >= 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::ProbabilityRange { name: "epsilon", range: "(0,1)", value: epsilon });
    }
    Ok(())
}

/// The explicit finite-n converse bound
///
///   log₂ M ≤ (n/2)log₂(1+P) + σ√n·Φ⁻¹(ε + 2T/(σ³√n)) − log₂(T/(σ³√n)),
///
/// with the threshold term log₂ ξ_n = (n/2)log₂(1+P) + σ√n·Φ⁻¹(ε + Δ)
/// recorded separately. Requires ε + 2T/(σ³√n) < 1, i.e. n large enough
/// for the Berry–Esséen slack to leave the quantile in its domain.
pub fn finite_n_converse(ch: &ScalarChannel, n: u64, epsilon: f64) -> Result<BoundReport> {
    check_args(n, epsilon)?;
    let m = llr_moments(ch.power)?;
    let (sigma, t) = (m.sigma, m.third_abs);
    let sqrt_n = (n as f64).sqrt();
    let delta = 2.0 * t / (sigma.powi(3) * sqrt_n);
    if epsilon + delta >= 1.0 {
        return Err(Error::BlocklengthTooSmall);
    }
    let xi = n as f64 * capacity(ch) + sigma * sqrt_n * normal_quantile(epsilon + delta)?;
    let bound = xi - (t / (sigma.powi(3) * sqrt_n)).log2();
    Ok(BoundReport {
        n,
        epsilon,
        kind: BoundKind::FiniteNConverse,
        log_m_bound: bound,
        threshold_log_xi: Some(xi),
        constants: BoundConstants { sigma, t: Some(t), kappa_bar: None, kappa: None },
    })
}

/// The κ constants of the n-free relaxation, computed once per (P, ε):
/// κ̄ = (2T/σ²)·sup(Φ⁻¹)′ − log₂(T/σ³) and
/// κ = κ̄ + ½log₂(1+P) + σΦ⁻¹(ε) + ½.
///
/// The supremum of (Φ⁻¹)′ runs over the Taylor interval of the shifted
/// quantile argument, [ε, ε + 2T/σ³] intersected with the quantile's
/// domain; since 2T/σ³ ≥ 1 always pushes the right end past 1, the
/// interval is capped at 0.99 (or at ε itself when ε is higher still),
/// keeping the constant finite while staying above every argument the
/// finite-n bound can produce once it is defined at all. (Φ⁻¹)′ is
/// U-shaped with its minimum at 1/2, so the supremum is attained at an
/// endpoint.
fn kappa_constants(ch: &ScalarChannel, epsilon: f64, m: &LlrMoments) -> Result<(f64, f64)> {
    let (sigma, t) = (m.sigma, m.third_abs);
    let right = (epsilon + 2.0 * t / sigma.powi(3)).min(0.99).max(epsilon);
    let sup_deriv = normal_quantile_deriv(epsilon)?.max(normal_quantile_deriv(right)?);
    let kappa_bar = 2.0 * t / (sigma * sigma) * sup_deriv - (t / sigma.powi(3)).log2();
    let kappa = kappa_bar
        + 0.5 * (1.0 + ch.power).log2()
        + sigma * normal_quantile(epsilon)?
        + 0.5;
    Ok((kappa_bar, kappa))
}

/// The n-free-constant converse bound
///
///   log₂ M ≤ nC(P) + √(nV(P))·Φ⁻¹(ε) + ½log₂n + κ,
///
/// a relaxation of [`finite_n_converse`] valid for every n ≥ 1. The
/// constants record carries κ̄ and κ; the threshold entry is the value
/// whose excess over the bound matches the finite-n threshold structure,
/// log₂ ξ = bound + log₂(T/(σ³√n)).
pub fn theorem1_kappa_form(ch: &ScalarChannel, n: u64, epsilon: f64) -> Result<BoundReport> {
    check_args(n, epsilon)?;
    let m = llr_moments(ch.power)?;
    let (sigma, t) = (m.sigma, m.third_abs);
    let (kappa_bar, kappa) = kappa_constants(ch, epsilon, &m)?;
    let nf = n as f64;
    let cd = capacity_dispersion(ch);
    let bound = nf * cd.capacity
        + (nf * cd.dispersion).sqrt() * normal_quantile(epsilon)?
        + 0.5 * nf.log2()
        + kappa;
    let xi = bound + (t / (sigma.powi(3) * nf.sqrt())).log2();
    Ok(BoundReport {
        n,
        epsilon,
        kind: BoundKind::KappaForm,
        log_m_bound: bound,
        threshold_log_xi: Some(xi),
        constants: BoundConstants {
            sigma,
            t: Some(t),
            kappa_bar: Some(kappa_bar),
            kappa: Some(kappa),
        },
    })
}

/// The normal-approximation reference curve nC + √(nV)Φ⁻¹(ε) + ½log₂n,
/// with the O(1) term set to zero. A reference, not a bound.
pub fn normal_approximation(ch: &ScalarChannel, n: u64, epsilon: f64) -> Result<BoundReport> {
    check_args(n, epsilon)?;
    let m = llr_moments(ch.power)?;
    let nf = n as f64;
    let cd = capacity_dispersion(ch);
    let value = nf * cd.capacity
        + (nf * cd.dispersion).sqrt() * normal_quantile(epsilon)?
        + 0.5 * nf.log2();
    Ok(BoundReport {
        n,
        epsilon,
        kind: BoundKind::NormalApproximation,
        log_m_bound: value,
        threshold_log_xi: None,
        constants: BoundConstants { sigma: m.sigma, t: None, kappa_bar: None, kappa: None },
    })
}
