//! Water-filling power allocation and the Chebyshev-based converse bound
//! for L independent parallel Gaussian channels with feedback under a
//! joint peak power constraint.
//!
//! The bound evaluates
//!
//!   log₂ M ≤ nC_L(P) + (log₂e/(2Λ))·√((2/(1−ε))·nκ̄) − log₂((1−ε)/2),
//!
//! where Λ is the water level, C_L the water-filled capacity, and κ̄ the
//! upper envelope of Var[ΣU_k]/n valid for every feedback code; κ̃ is the
//! matching strict lower envelope. All outputs in bits.

use serde::{Deserialize, Serialize};

use crate::bounds::{capacity, dispersion, ScalarChannel};
use crate::error::{Error, Result};

/// L parallel AWGN channels: per-channel noise variances and a joint
/// power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelSpec {
    noise_variances: Vec<f64>,
    total_power: f64,
}

impl ParallelSpec {
    pub fn new(noise_variances: Vec<f64>, total_power: f64) -> Result<Self> {
        if noise_variances.is_empty() {
            return Err(Error::InvalidArgument("need at least one channel".into()));
        }
        for &v in &noise_variances {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveVariance(v));
            }
        }
        if !(total_power > 0.0) || !total_power.is_finite() {
            return Err(Error::NonPositivePower(total_power));
        }
        Ok(Self { noise_variances, total_power })
    }

    pub fn noise_variances(&self) -> &[f64] {
        &self.noise_variances
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn channels(&self) -> usize {
        self.noise_variances.len()
    }
}

/// Water-filling solution: the level Λ and per-channel powers
/// P_ℓ = max{0, Λ − σ_ℓ²} with Σ P_ℓ = P.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub water_level: f64,
    pub powers: Vec<f64>,
}

/// Solve the water-filling problem by monotone bisection on Λ over
/// [min σ², max σ² + P] (the spill function Σ max{0, Λ − σ_ℓ²} is
/// continuous and strictly increasing once any channel is active), then
/// polish Λ to the exact closed form over the final active set so the
/// power identity holds to machine precision.
pub fn waterfill(spec: &ParallelSpec) -> PowerAllocation {
    let s = &spec.noise_variances;
    let p = spec.total_power;
    let spill =
        |lam: f64| -> f64 { s.iter().map(|&v| (lam - v).max(0.0)).sum() };
    let mut lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = s.iter().cloned().fold(0.0f64, f64::max) + p;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spill(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Closed-form polish: with the active set A fixed,
    // Λ = (P + Σ_{ℓ∈A} σ_ℓ²)/|A|.
    let lam0 = 0.5 * (lo + hi);
    let active: Vec<f64> = s.iter().cloned().filter(|&v| v < lam0).collect();
    let lam = if active.is_empty() {
        lam0 // cannot happen for P > 0; bisection value as a safety net
    } else {
        (p + active.iter().sum::<f64>()) / active.len() as f64
    };
    let powers: Vec<f64> = s.iter().map(|&v| (lam - v).max(0.0)).collect();
    PowerAllocation { water_level: lam, powers }
}

/// Water-filled capacity C_L(P) = Σ_ℓ C(P_ℓ/σ_ℓ²), bits per channel use.
pub fn capacity_parallel(spec: &ParallelSpec) -> f64 {
    let alloc = waterfill(spec);
    alloc
        .powers
        .iter()
        .zip(&spec.noise_variances)
        .map(|(&pl, &v)| {
            if pl > 0.0 {
                capacity(&ScalarChannel::new(pl / v).expect("positive snr"))
            } else {
                0.0
            }
        })
        .sum()
}

/// Water-filled dispersion V_L(P) = Σ_ℓ V(P_ℓ/σ_ℓ²), bits² per channel
/// use — the reference quantity for the no-feedback achievability curve.
pub fn dispersion_parallel(spec: &ParallelSpec) -> f64 {
    let alloc = waterfill(spec);
    alloc
        .powers
        .iter()
        .zip(&spec.noise_variances)
        .map(|(&pl, &v)| {
            if pl > 0.0 {
                dispersion(&ScalarChannel::new(pl / v).expect("positive snr"))
            } else {
                0.0
            }
        })
        .sum()
}

/// The variance envelope constants (κ̃, κ̄) bracketing Var[ΣU_k]/n for
/// every feedback code: κ̃ = 4·min σ²·P (strict lower) and
/// κ̄ = 2ΣP_ℓ² + 4·max σ²·P (upper), raw λ-units.
pub fn variance_envelope(spec: &ParallelSpec) -> (f64, f64) {
    let alloc = waterfill(spec);
    let p = spec.total_power;
    let min_v = spec.noise_variances.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_v = spec.noise_variances.iter().cloned().fold(0.0f64, f64::max);
    let sum_sq: f64 = alloc.powers.iter().map(|&x| x * x).sum();
    (4.0 * min_v * p, 2.0 * sum_sq + 4.0 * max_v * p)
}

/// Constants behind a parallel bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelBoundConstants {
    pub kappa_tilde: f64,
    pub kappa_bar: f64,
    pub kappa: f64,
    #[serde(rename = "C_L")]
    pub c_l: f64,
    #[serde(rename = "V_L")]
    pub v_l: f64,
}

/// One evaluated point of the parallel converse, mirroring the scalar
/// report shape plus the water-filling data that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelBoundReport {
    pub n: u64,
    pub epsilon: f64,
    pub kind: String,
    #[serde(rename = "log_m_bound_bits")]
    pub log_m_bound: f64,
    #[serde(rename = "threshold_log_xi_bits")]
    pub threshold_log_xi: f64,
    pub water_level: f64,
    pub powers: Vec<f64>,
    pub constants: ParallelBoundConstants,
}

/// Kind tag carried by parallel reports.
pub const PARALLEL_BOUND_KIND: &str = "parallel_chebyshev_converse";

/// Evaluate the Chebyshev converse with the code-independent variance
/// envelope nκ̄ substituted for the unknown Var[ΣU_k]:
///
///   log₂ M ≤ nC_L + (log₂e/(2Λ))·√((2/(1−ε))·nκ̄) − log₂((1−ε)/2),
///
/// recording the threshold log₂ ξ_n (the same expression without the
/// final −log₂((1−ε)/2)) and the n-free constant
/// κ = (log₂e/Λ)√(2κ̄/(1−ε)) − log₂((1−ε)/2) + C_L. Requires n ≥ 2.
///
/// The √n-order structure is asserted on every call:
/// bound ≤ nC_L + κ√n + C_L + κ, the n↦n−1 shift slack included.
pub fn theorem2_bound(spec: &ParallelSpec, n: u64, epsilon: f64) -> Result<ParallelBoundReport> {
    if n < 2 {
        return Err(Error::InvalidArgument("parallel bound requires n >= 2".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::ProbabilityRange { name: "epsilon", range: "(0,1)", value: epsilon });
    }
    let alloc = waterfill(spec);
    let lam = alloc.water_level;
    let c_l = capacity_parallel(spec);
    let v_l = dispersion_parallel(spec);
    let (kappa_tilde, kappa_bar) = variance_envelope(spec);
    let nf = n as f64;
    let log2e = std::f64::consts::LOG2_E;
    let spread = log2e / (2.0 * lam) * (2.0 / (1.0 - epsilon) * nf * kappa_bar).sqrt();
    let threshold = nf * c_l + spread;
    let bound = threshold - ((1.0 - epsilon) / 2.0).log2();
    let kappa = log2e / lam * (2.0 * kappa_bar / (1.0 - epsilon)).sqrt()
        - ((1.0 - epsilon) / 2.0).log2()
        + c_l;
    assert!(
        bound <= nf * c_l + kappa * nf.sqrt() + c_l + kappa + 1e-9,
        "√n-order structure violated: bound {bound} at n={n}"
    );
    Ok(ParallelBoundReport {
        n,
        epsilon,
        kind: PARALLEL_BOUND_KIND.to_string(),
        log_m_bound: bound,
        threshold_log_xi: threshold,
        water_level: lam,
        powers: alloc.powers,
        constants: ParallelBoundConstants { kappa_tilde, kappa_bar, kappa, c_l, v_l },
    })
}

/// Per-ε outcome of the strong-converse limit check at a fixed large n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongConverseReport {
    pub n: u64,
    /// |bound(n)/n − C_L| per requested ε, in order.
    pub gaps: Vec<f64>,
    /// The largest κ over the ε list; every gap must be ≤ kappa_max/√n.
    pub kappa_max: f64,
    pub pass: bool,
}

/// Verify numerically that theorem2_bound(n)/n → C_L for each ε: at
/// n = 10⁶ the normalized gap must sit below κ_max/√n.
pub fn strong_converse_check(spec: &ParallelSpec, epsilons: &[f64]) -> Result<StrongConverseReport> {
    const N: u64 = 1_000_000;
    for &e in epsilons {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::ProbabilityRange { name: "epsilon", range: "(0,1)", value: e });
        }
    }
    let c_l = capacity_parallel(spec);
    let mut gaps = Vec::with_capacity(epsilons.len());
    let mut kappa_max = 0.0f64;
    for &e in epsilons {
        let r = theorem2_bound(spec, N, e)?;
        gaps.push((r.log_m_bound / N as f64 - c_l).abs());
        kappa_max = kappa_max.max(r.constants.kappa);
    }
    let limit = kappa_max / (N as f64).sqrt();
    let pass = gaps.iter().all(|&g| g <= limit);
    Ok(StrongConverseReport { n: N, gaps, kappa_max, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn spec(vars: &[f64], p: f64) -> ParallelSpec {
        ParallelSpec::new(vars.to_vec(), p).unwrap()
    }

    fn assert_alloc(alloc: &PowerAllocation, lam: f64, powers: &[f64]) {
        assert!((alloc.water_level - lam).abs() < 1e-12 * lam.max(1.0), "Λ={}", alloc.water_level);
        for (got, want) in alloc.powers.iter().zip(powers) {
            assert!((got - want).abs() < 1e-9, "powers {:?} vs {powers:?}", alloc.powers);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ParallelSpec::new(vec![], 1.0).is_err());
        assert!(ParallelSpec::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(ParallelSpec::new(vec![1.0], 0.0).is_err());
        assert!(ParallelSpec::new(vec![1.0], -3.0).is_err());
    }

    #[test]
    fn waterfill_worked_examples() {
        assert_alloc(&waterfill(&spec(&[1.0, 3.0], 4.0)), 4.0, &[3.0, 1.0]);
        assert_alloc(&waterfill(&spec(&[1.0, 10.0], 2.0)), 3.0, &[2.0, 0.0]);
        assert_alloc(&waterfill(&spec(&[1.0], 5.0)), 6.0, &[5.0]);
    }

    #[test]
    fn waterfill_power_identity_and_kkt() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let l = rng.random_range(1..=16usize);
            let vars: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..50.0)).collect();
            let p = rng.random_range(0.1..100.0);
            let sp = spec(&vars, p);
            let alloc = waterfill(&sp);
            let total: f64 = alloc.powers.iter().sum();
            assert!((total - p).abs() < 1e-12 * p.max(1.0), "ΣP={total} vs {p}");
            for (pl, v) in alloc.powers.iter().zip(&vars) {
                let kkt = (pl - (alloc.water_level - v).max(0.0)).abs();
                assert!(kkt < 1e-9, "KKT residual {kkt}");
                assert!(*pl >= 0.0);
            }
        }
    }

    #[test]
    fn capacity_parallel_values() {
        let got = capacity_parallel(&spec(&[1.0, 3.0], 4.0));
        assert!((got - 1.20751874963942191).abs() < 1e-12);
        // L=1 reduces to the scalar capacity of P/σ².
        let one = capacity_parallel(&spec(&[2.0], 3.0));
        let scalar = capacity(&ScalarChannel::new(1.5).unwrap());
        assert!((one - scalar).abs() < 1e-15);
        // Inactive channel contributes zero.
        let inactive = capacity_parallel(&spec(&[1.0, 10.0], 2.0));
        assert!((inactive - 0.792481250360578091).abs() < 1e-12);
    }

    #[test]
    fn dispersion_parallel_values() {
        let got = dispersion_parallel(&spec(&[1.0, 3.0], 4.0));
        assert!((got - 1.43094117444135536).abs() < 1e-12);
        let v3 = dispersion(&ScalarChannel::new(3.0).unwrap());
        let v13 = dispersion(&ScalarChannel::new(1.0 / 3.0).unwrap());
        assert!((v3 - 0.975641709846378655).abs() < 1e-14);
        assert!((v13 - 0.455299464594976706).abs() < 1e-14);
        assert!((got - (v3 + v13)).abs() < 1e-13);
        // L=1 reduction and inactive-channel zero contribution.
        let one = dispersion_parallel(&spec(&[2.0], 3.0));
        assert!((one - dispersion(&ScalarChannel::new(1.5).unwrap())).abs() < 1e-15);
        let inactive = dispersion_parallel(&spec(&[1.0, 10.0], 2.0));
        assert!((inactive - dispersion(&ScalarChannel::new(2.0).unwrap())).abs() < 1e-13);
    }

    #[test]
    fn variance_envelope_values() {
        let (kt, kb) = variance_envelope(&spec(&[1.0, 1.0], 2.0));
        assert_eq!(kt, 8.0);
        assert_eq!(kb, 12.0);
        let (kt, kb) = variance_envelope(&spec(&[1.0, 3.0], 4.0));
        assert_eq!(kt, 16.0);
        assert_eq!(kb, 68.0);
        // κ̃ < κ̄ always.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let l = rng.random_range(1..=8usize);
            let vars: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..20.0)).collect();
            let p = rng.random_range(0.1..50.0);
            let (kt, kb) = variance_envelope(&spec(&vars, p));
            assert!(kt < kb, "envelope ordering: {kt} vs {kb}");
            assert!(kt > 0.0);
        }
    }

    #[test]
    fn theorem2_matches_independent_evaluation() {
        // 40-digit re-evaluation of the κ̄-envelope bound at
        // σ²=(1,3), P=4, n=10⁴, ε=0.1.
        let r = theorem2_bound(&spec(&[1.0, 3.0], 4.0), 10_000, 0.1).unwrap();
        assert!(
            (r.log_m_bound - 12298.022683950860443).abs() < 1e-9,
            "bound {}",
            r.log_m_bound
        );
        assert!((r.threshold_log_xi - 12296.870680857415393).abs() < 1e-9);
        assert_eq!(r.kind, PARALLEL_BOUND_KIND);
        assert!((r.water_level - 4.0).abs() < 1e-12);
        assert_eq!(r.constants.kappa_tilde, 16.0);
        assert_eq!(r.constants.kappa_bar, 68.0);
        assert!((r.constants.c_l - 1.20751874963942191).abs() < 1e-12);
        assert!((r.constants.v_l - 1.43094117444135536).abs() < 1e-12);
    }

    #[test]
    fn theorem2_kappa_frozen_values() {
        let s = spec(&[1.0, 3.0], 4.0);
        let cases = [(0.1, 6.7931855323483979), (0.5, 9.15590278877940775), (0.9, 18.8304379123185623)];
        for &(eps, want) in &cases {
            let r = theorem2_bound(&s, 100, eps).unwrap();
            assert!(
                (r.constants.kappa - want).abs() < 1e-12,
                "κ({eps}): got {}, want {want}",
                r.constants.kappa
            );
        }
    }

    #[test]
    fn theorem2_diverges_toward_epsilon_one() {
        let s = spec(&[1.0, 3.0], 4.0);
        let b1 = theorem2_bound(&s, 100, 0.9).unwrap().log_m_bound;
        let b2 = theorem2_bound(&s, 100, 0.999).unwrap().log_m_bound;
        let b3 = theorem2_bound(&s, 100, 0.9999999).unwrap().log_m_bound;
        assert!(b2 > b1 + 5.0 && b3 > b2 + 20.0, "{b1} {b2} {b3}");
    }

    #[test]
    fn theorem2_sqrt_n_structure() {
        // (bound − nC_L)/√n ≤ κ with the shift slack; the constructor
        // asserts it internally, exercised here across a wide n grid.
        let s = spec(&[1.0, 3.0], 4.0);
        for &n in &[2u64, 10, 100, 10_000, 1_000_000] {
            let r = theorem2_bound(&s, n, 0.1).unwrap();
            let nf = n as f64;
            let lhs = (r.log_m_bound - nf * r.constants.c_l) / nf.sqrt();
            assert!(
                lhs <= r.constants.kappa + (r.constants.c_l + r.constants.kappa) / nf.sqrt() + 1e-12,
                "n={n}: {lhs}"
            );
        }
    }

    #[test]
    fn theorem2_monotone_in_epsilon_and_power() {
        let s = spec(&[1.0, 3.0], 4.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 1..50 {
            let b = theorem2_bound(&s, 1000, i as f64 / 50.0).unwrap().log_m_bound;
            assert!(b >= prev, "ε-monotonicity at {i}");
            prev = b;
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=50 {
            let b = theorem2_bound(&spec(&[1.0, 3.0], 0.5 * i as f64), 1000, 0.1)
                .unwrap()
                .log_m_bound;
            assert!(b >= prev, "P-monotonicity at {i}");
            prev = b;
        }
    }

    #[test]
    fn theorem2_argument_validation() {
        let s = spec(&[1.0, 3.0], 4.0);
        assert!(theorem2_bound(&s, 1, 0.1).is_err());
        assert!(theorem2_bound(&s, 100, 0.0).is_err());
        assert!(theorem2_bound(&s, 100, 1.0).is_err());
    }

    #[test]
    fn strong_converse_limit() {
        let s = spec(&[1.0, 3.0], 4.0);
        let r = strong_converse_check(&s, &[0.1, 0.5, 0.9]).unwrap();
        assert!(r.pass);
        assert_eq!(r.n, 1_000_000);
        // Frozen gap values from the 40-digit evaluation.
        let want = [0.00221798384773, 0.00297619201957, 0.00665481746199];
        for (got, want) in r.gaps.iter().zip(&want) {
            assert!((got - want).abs() < 1e-9, "gap {got} vs {want}");
        }
        assert!((r.kappa_max - 18.8304379123185623).abs() < 1e-9);
        assert!(strong_converse_check(&s, &[0.1, 1.2]).is_err());
    }

    #[test]
    fn strong_converse_single_channel_consistency() {
        // L=1 with unit noise is the scalar channel: the limit of
        // bound/n is C(P), the first-order scalar behavior.
        let r = strong_converse_check(&spec(&[1.0], 1.0), &[0.1]).unwrap();
        assert!(r.pass);
        let c = capacity_parallel(&spec(&[1.0], 1.0));
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inactive_channel_leaves_reports_unchanged() {
        let base = spec(&[1.0, 3.0], 4.0);
        let padded = spec(&[1.0, 3.0, 1e9], 4.0);
        let a = theorem2_bound(&base, 10_000, 0.1).unwrap();
        let b = theorem2_bound(&padded, 10_000, 0.1).unwrap();
        // κ̄ reads max σ², which the huge inactive channel changes by
        // design; everything driven by the allocation itself must agree.
        assert!((a.water_level - b.water_level).abs() < 1e-9);
        assert!((a.constants.c_l - b.constants.c_l).abs() < 1e-9);
        assert!((a.constants.v_l - b.constants.v_l).abs() < 1e-9);
        assert_eq!(b.powers[2], 0.0);
        // Capacity and dispersion are untouched.
        assert!((capacity_parallel(&base) - capacity_parallel(&padded)).abs() < 1e-9);
        assert!((dispersion_parallel(&base) - dispersion_parallel(&padded)).abs() < 1e-9);
    }

    #[test]
    fn permutation_invariance() {
        let a = spec(&[1.0, 3.0, 0.5, 7.0], 6.0);
        let b = spec(&[7.0, 0.5, 3.0, 1.0], 6.0);
        let (alloc_a, alloc_b) = (waterfill(&a), waterfill(&b));
        assert!((alloc_a.water_level - alloc_b.water_level).abs() < 1e-12);
        for (i, j) in [(0usize, 3usize), (1, 2), (2, 1), (3, 0)] {
            assert!((alloc_a.powers[i] - alloc_b.powers[j]).abs() < 1e-12);
        }
        assert!((capacity_parallel(&a) - capacity_parallel(&b)).abs() < 1e-12);
        assert!((dispersion_parallel(&a) - dispersion_parallel(&b)).abs() < 1e-12);
        let (ta, tb) = (variance_envelope(&a), variance_envelope(&b));
        assert!((ta.0 - tb.0).abs() < 1e-12 && (ta.1 - tb.1).abs() < 1e-12);
        let (ra, rb) = (
            theorem2_bound(&a, 500, 0.2).unwrap(),
            theorem2_bound(&b, 500, 0.2).unwrap(),
        );
        assert!((ra.log_m_bound - rb.log_m_bound).abs() < 1e-12);
    }

    #[test]
    fn capacity_concave_nondecreasing_in_power() {
        let vars = [1.0, 3.0, 0.5];
        let h = 0.25;
        let caps: Vec<f64> = (1..=60)
            .map(|i| capacity_parallel(&spec(&vars, h * i as f64)))
            .collect();
        for w in caps.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "nondecreasing");
        }
        for w in caps.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9, "concavity");
        }
    }

    #[test]
    fn report_serialization_shape() {
        let r = theorem2_bound(&spec(&[1.0, 3.0], 4.0), 100, 0.1).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["kind"], "parallel_chebyshev_converse");
        assert!(v["log_m_bound_bits"].is_f64());
        assert!(v["threshold_log_xi_bits"].is_f64());
        assert!(v["water_level"].is_f64());
        assert_eq!(v["powers"].as_array().unwrap().len(), 2);
        for key in ["kappa_tilde", "kappa_bar", "kappa", "C_L", "V_L"] {
            assert!(v["constants"][key].is_f64(), "missing constants.{key}");
        }
        let back: ParallelBoundReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
