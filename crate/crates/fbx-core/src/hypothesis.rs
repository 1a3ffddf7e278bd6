//! Binary hypothesis testing: exact Neyman–Pearson β over finite
//! alphabets, the closed-form β for the Gaussian pair underlying the
//! converse (product channel law vs. the zero-mean (1+P)-variance
//! output law), converse lower bounds on β, and a Monte Carlo
//! meta-converse harness for small explicit codes.
//!
//! Throughout, `beta(p, q, δ)` is the smallest q-probability of
//! acceptance among (randomized) tests that accept with p-probability at
//! least δ. Log-likelihood ratios are base-2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::special::{noncentral_chisq_ln_cdf, noncentral_chisq_quantile};

/// A pair of distributions on a shared finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistPair {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl FiniteDistPair {
    /// Both vectors must have the same length, nonnegative entries, and
    /// sum to 1 within 1e-12.
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() != q.len() {
            return Err(Error::InvalidDistribution(
                "p and q must be nonempty and of equal length".into(),
            ));
        }
        for (name, v) in [("p", &p), ("q", &q)] {
            if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "{name} has a negative or non-finite entry"
                )));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "{name} sums to {s}, expected 1 within 1e-12"
                )));
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// The optimal randomized likelihood-ratio test: accept when the base-2
/// log-likelihood ratio exceeds the threshold, and accept boundary atoms
/// with probability `randomization`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTest {
    pub log_lr_threshold: f64,
    pub randomization: f64,
}

/// Exact Neyman–Pearson minimum: the smallest Σ q_i·t_i over randomized
/// tests t with Σ p_i·t_i ≥ δ. Returns the optimum and the achieving
/// threshold test. δ may be 0 or 1.
pub fn beta_finite(pair: &FiniteDistPair, delta: f64) -> Result<(f64, ThresholdTest)> {
    if !(0.0..=1.0).contains(&delta) || delta.is_nan() {
        return Err(Error::ProbabilityRange {
            name: "delta",
            range: "[0, 1]",
            value: delta,
        });
    }
    if delta == 0.0 {
        return Ok((0.0, ThresholdTest { log_lr_threshold: f64::INFINITY, randomization: 0.0 }));
    }
    // Atoms sorted by decreasing LLR, exact ties pooled into one group.
    let mut atoms: Vec<(f64, f64, f64)> = pair
        .p
        .iter()
        .zip(&pair.q)
        .filter(|(&p, &q)| p > 0.0 || q > 0.0)
        .map(|(&p, &q)| {
            let llr = if q == 0.0 {
                f64::INFINITY
            } else if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.log2() - q.log2()
            };
            (llr, p, q)
        })
        .collect();
    atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("LLRs are never NaN"));

    let mut p_acc = 0.0;
    let mut beta = 0.0;
    let mut i = 0;
    while i < atoms.len() {
        let llr = atoms[i].0;
        let (mut pg, mut qg) = (0.0, 0.0);
        while i < atoms.len() && atoms[i].0 == llr {
            pg += atoms[i].1;
            qg += atoms[i].2;
            i += 1;
        }
        if p_acc + pg >= delta || i == atoms.len() {
            // Boundary group: take just enough of it (γ may reach 1 at
            // δ = 1 or when rounding leaves the target in the last
            // group).
            let gamma = if pg > 0.0 { ((delta - p_acc) / pg).clamp(0.0, 1.0) } else { 1.0 };
            return Ok((
                beta + gamma * qg,
                ThresholdTest { log_lr_threshold: llr, randomization: gamma },
            ));
        }
        p_acc += pg;
        beta += qg;
    }
    unreachable!("total p mass is 1 >= delta");
}

/// Converse lower bound on the finite-alphabet β: for any ξ > 0,
/// β_δ ≥ (δ − Pr_p{LLR ≥ log₂ξ})/ξ. Returns the bound clamped at 0.
pub fn beta_lower_bound_finite(
    pair: &FiniteDistPair,
    delta: f64,
    log2_xi: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) || delta.is_nan() {
        return Err(Error::ProbabilityRange {
            name: "delta",
            range: "[0, 1]",
            value: delta,
        });
    }
    let mut tail = 0.0;
    for (&p, &q) in pair.p.iter().zip(&pair.q) {
        if p == 0.0 {
            continue;
        }
        let llr = if q == 0.0 { f64::INFINITY } else { p.log2() - q.log2() };
        if llr >= log2_xi {
            tail += p;
        }
    }
    Ok(((delta - tail) * (-log2_xi).exp2()).max(0.0))
}

/// Parameters of the Gaussian testing problem behind the converse at
/// blocklength n and power P: the null is the channel joint law along
/// the constant-√P codeword, the alternative replaces the conditional
/// output law with N(0, 1+P) per letter. Under the null the
/// log-likelihood ratio is a decreasing affine function of a
/// noncentral-chi-square variable, which the closed forms below exploit.
struct AwgnTestLaw {
    n: f64,
    power: f64,
}

impl AwgnTestLaw {
    fn new(n: u64, power: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("blocklength n must be >= 1".into()));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::NonPositivePower(power));
        }
        Ok(Self { n: n as f64, power })
    }

    /// LLR in nats as a function of the quadratic statistic
    /// Q(y) = Σ (y_k − √P − 1/√P)²: LLR = c − P·Q/(2(1+P)).
    fn llr_nats_from_q(&self, q: f64) -> f64 {
        let c = 0.5 * self.n * (1.0 + self.power).ln() + 0.5 * self.n;
        c - self.power * q / (2.0 * (1.0 + self.power))
    }

    /// Under the null, Q ~ noncentral chi-square with n degrees of
    /// freedom and noncentrality n/P.
    fn null_q_quantile(&self, delta: f64) -> Result<f64> {
        noncentral_chisq_quantile(delta, self.n as u64, self.n / self.power)
    }

    /// Under the alternative, Q/(1+P) ~ noncentral chi-square with n
    /// degrees of freedom and noncentrality n(1+P)/P; this returns
    /// ln Pr_alt{Q ≤ q}.
    fn alt_ln_cdf_q(&self, q: f64) -> Result<f64> {
        noncentral_chisq_ln_cdf(
            q / (1.0 + self.power),
            self.n as u64,
            self.n * (1.0 + self.power) / self.power,
        )
    }

    /// Pr_null{Q ≤ q} (used by the tail term of the converse bound).
    fn null_cdf_q(&self, q: f64) -> Result<f64> {
        crate::special::noncentral_chisq_cdf(q, self.n as u64, self.n / self.power)
    }
}

/// Exact log₂ β for the Gaussian converse pair at blocklength n, power
/// P, and acceptance level δ ∈ (0, 1): the optimal test accepts when the
/// quadratic statistic falls below its null δ-quantile, and β is the
/// alternative's probability of that event.
pub fn beta_awgn(n: u64, power: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ProbabilityRange {
            name: "delta",
            range: "(0, 1)",
            value: delta,
        });
    }
    let law = AwgnTestLaw::new(n, power)?;
    let q0 = law.null_q_quantile(delta)?;
    Ok(law.alt_ln_cdf_q(q0)? / LN_2)
}

/// The base-2 LLR threshold of the optimal test at level δ (the value τ
/// such that the test accepts exactly when LLR ≥ τ).
pub fn beta_awgn_threshold(n: u64, power: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ProbabilityRange {
            name: "delta",
            range: "(0, 1)",
            value: delta,
        });
    }
    let law = AwgnTestLaw::new(n, power)?;
    let q0 = law.null_q_quantile(delta)?;
    Ok(law.llr_nats_from_q(q0) / LN_2)
}

/// Converse lower bound on the Gaussian β: for any base-2 threshold τ,
/// β_δ ≥ 2^{−τ}·(δ − Pr_null{LLR ≥ τ}), clamped at 0. Returned in raw
/// probability units.
pub fn beta_lower_bound_awgn(n: u64, power: f64, delta: f64, log2_xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) || delta.is_nan() {
        return Err(Error::ProbabilityRange {
            name: "delta",
            range: "[0, 1]",
            value: delta,
        });
    }
    let law = AwgnTestLaw::new(n, power)?;
    // {LLR ≥ τ} = {Q ≤ q_τ} with q_τ from inverting the affine map.
    let c = 0.5 * law.n * (1.0 + law.power).ln() + 0.5 * law.n;
    let q_tau = (c - log2_xi * LN_2) * 2.0 * (1.0 + law.power) / law.power;
    let tail = if q_tau <= 0.0 { 0.0 } else { law.null_cdf_q(q_tau)? };
    Ok(((delta - tail) * (-log2_xi).exp2()).max(0.0))
}

/// Push a distribution pair through a deterministic map of alphabets
/// (atom i goes to output cell map[i]). Data processing can only make
/// the testing problem harder, so β of the image is ≥ β of the original.
pub fn pushforward(pair: &FiniteDistPair, map: &[usize], out_size: usize) -> Result<FiniteDistPair> {
    if map.len() != pair.len() {
        return Err(Error::InvalidArgument(
            "map must assign every atom an output cell".into(),
        ));
    }
    if out_size == 0 || map.iter().any(|&j| j >= out_size) {
        return Err(Error::InvalidArgument("map targets must lie in 0..out_size".into()));
    }
    let mut p = vec![0.0; out_size];
    let mut q = vec![0.0; out_size];
    for (i, &j) in map.iter().enumerate() {
        p[j] += pair.p[i];
        q[j] += pair.q[i];
    }
    FiniteDistPair::new(p, q)
}

/// An explicit small code over the unit-noise channel, each codeword
/// meeting Σ x_k² = nP.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyCode {
    codebook: Vec<Vec<f64>>,
    power: f64,
}

impl ToyCode {
    pub fn new(codebook: Vec<Vec<f64>>, power: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::NonPositivePower(power));
        }
        if codebook.is_empty() || codebook[0].is_empty() {
            return Err(Error::InvalidArgument("codebook must be nonempty".into()));
        }
        let n = codebook[0].len();
        let budget = n as f64 * power;
        for (i, cw) in codebook.iter().enumerate() {
            if cw.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "codeword {i} has length {}, expected {n}",
                    cw.len()
                )));
            }
            let used: f64 = cw.iter().map(|x| x * x).sum();
            if (used - budget).abs() > 1e-9 * budget {
                return Err(Error::InvalidArgument(format!(
                    "codeword {i} spends {used}, budget is {budget}"
                )));
            }
        }
        Ok(Self { codebook, power })
    }

    /// Two antipodal constant codewords ±√P.
    pub fn antipodal(n: u64, power: f64) -> Result<Self> {
        let s = power.sqrt();
        let a: Vec<f64> = vec![s; n as usize];
        let b: Vec<f64> = vec![-s; n as usize];
        Self::new(vec![a, b], power)
    }

    /// m codewords drawn uniformly on the radius-√(nP) sphere.
    pub fn random_spherical(m: u64, n: u64, power: f64, seed: u64) -> Result<Self> {
        if m == 0 || m > 1 << 16 {
            return Err(Error::InvalidArgument(
                "random_spherical toy codes support 1..=65536 codewords".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = (n as f64 * power).sqrt();
        let codebook: Vec<Vec<f64>> = (0..m)
            .map(|_| crate::sim::sphere_point(&mut rng, n as usize, radius))
            .collect();
        Self::new(codebook, power)
    }

    pub fn message_count(&self) -> usize {
        self.codebook.len()
    }

    pub fn blocklength(&self) -> usize {
        self.codebook[0].len()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Maximum-likelihood decoding: nearest codeword in Euclidean
    /// distance, ties to the lowest index.
    fn decode(&self, y: &[f64]) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, cw) in self.codebook.iter().enumerate() {
            let d: f64 = cw.iter().zip(y).map(|(x, yy)| (yy - x) * (yy - x)).sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Result of the empirical meta-converse check on a toy code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaconverseReport {
    pub message_count: u64,
    pub n: u64,
    pub power: f64,
    pub trials: u64,
    /// Empirical probability of correct decoding under the channel.
    pub alpha_hat: f64,
    /// log₂ of the Neyman–Pearson β at level α̂ for the empirical
    /// (message, decision) pair against uniform × auxiliary-decode law.
    pub log2_beta: f64,
    pub log2_m: f64,
    /// Bootstrap standard error of β (200 deterministic resamples).
    pub beta_std_error: f64,
    /// β̂ ≤ 1/M + 3·SE + 1e-12, the meta-converse inequality with
    /// statistical slack.
    pub pass: bool,
    /// False when any estimated cell's 99% CI is wider than 0.02, in
    /// which case `pass` should not be trusted.
    pub conclusive: bool,
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Multinomial resample of `total` draws over `probs` via a binomial
/// chain (probs sum to 1).
fn multinomial_resample(rng: &mut ChaCha8Rng, probs: &[f64], total: u64) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = total;
    let mut mass_left = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass_left <= 0.0 {
            out[i] = remaining;
            break;
        }
        let frac = (p / mass_left).clamp(0.0, 1.0);
        let draw = rng
            .sample(rand_distr::Binomial::new(remaining, frac).expect("frac in [0,1]"));
        out[i] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    out
}

fn beta_from_counts(
    joint: &[u64],
    aux: &[u64],
    m: usize,
    trials: f64,
) -> Result<(f64, f64)> {
    let alpha_hat: f64 = (0..m).map(|i| joint[i * m + i] as f64).sum::<f64>() / trials;
    let p: Vec<f64> = joint.iter().map(|&c| c as f64 / trials).collect();
    let mut q = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            q[i * m + j] = aux[j] as f64 / trials / m as f64;
        }
    }
    let pair = FiniteDistPair::new(p, q)?;
    let (beta, _) = beta_finite(&pair, alpha_hat)?;
    Ok((alpha_hat, beta))
}

/// Monte Carlo meta-converse check: simulate the code with ML decoding,
/// form the empirical joint (message, decision) law under the channel
/// and the decision law under the auxiliary output N(0, (1+P)I), and
/// verify that the Neyman–Pearson β at level α̂ between those two joints
/// does not exceed 1/M (up to bootstrap noise) — the converse inequality
/// every code must satisfy.
pub fn metaconverse_check(code: &ToyCode, trials: u64, seed: u64) -> Result<MetaconverseReport> {
    if trials < 1000 {
        return Err(Error::InsufficientTrials(
            "metaconverse_check needs at least 1000 trials".into(),
        ));
    }
    let m = code.message_count();
    let n = code.blocklength();
    let aux_sd = (1.0 + code.power).sqrt();

    // Phase 0: channel trials -> joint (W, Ŵ) counts.
    let joint: Vec<u64> = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; m * m],
            |mut acc, t| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(t)));
                let w = rng.random_range(0..m as u64) as usize;
                let y: Vec<f64> = code.codebook[w]
                    .iter()
                    .map(|&x| {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        x + z
                    })
                    .collect();
                acc[w * m + code.decode(&y)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; m * m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    // Phase 1: auxiliary-law trials -> decision counts.
    let aux: Vec<u64> = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; m],
            |mut acc, t| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(t).rotate_left(17) ^ 0xA0))
                ;
                let y: Vec<f64> = (0..n)
                    .map(|_| {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        aux_sd * z
                    })
                    .collect();
                acc[code.decode(&y)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let tf = trials as f64;
    let (alpha_hat, beta) = beta_from_counts(&joint, &aux, m, tf)?;

    // Conclusiveness: every estimated cell must be tight at 99%.
    let ci_width = |p_hat: f64| 2.0 * 2.5758293035489004 * (p_hat * (1.0 - p_hat) / tf).sqrt();
    let conclusive = joint
        .iter()
        .chain(aux.iter())
        .all(|&c| ci_width(c as f64 / tf) <= 0.02);

    // Bootstrap SE of β: 200 deterministic multinomial resamples of both
    // phases.
    let p_hat: Vec<f64> = joint.iter().map(|&c| c as f64 / tf).collect();
    let s_hat: Vec<f64> = aux.iter().map(|&c| c as f64 / tf).collect();
    let betas: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0xB007 ^ mix64(b)));
            let j = multinomial_resample(&mut rng, &p_hat, trials);
            let a = multinomial_resample(&mut rng, &s_hat, trials);
            let (_, beta_b) = beta_from_counts(&j, &a, m, tf).expect("resample stays valid");
            beta_b
        })
        .collect();
    let mean_b = betas.iter().sum::<f64>() / betas.len() as f64;
    let se =
        (betas.iter().map(|b| (b - mean_b) * (b - mean_b)).sum::<f64>() / betas.len() as f64)
            .sqrt();

    let pass = beta <= 1.0 / m as f64 + 3.0 * se + 1e-12;
    Ok(MetaconverseReport {
        message_count: m as u64,
        n: n as u64,
        power: code.power,
        trials,
        alpha_hat,
        log2_beta: beta.log2(),
        log2_m: (m as f64).log2(),
        beta_std_error: se,
        pass,
        conclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(p: &[f64], q: &[f64]) -> FiniteDistPair {
        FiniteDistPair::new(p.to_vec(), q.to_vec()).unwrap()
    }

    #[test]
    fn pair_validation() {
        assert!(FiniteDistPair::new(vec![], vec![]).is_err());
        assert!(FiniteDistPair::new(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(FiniteDistPair::new(vec![0.5, 0.6], vec![0.5, 0.5]).is_err());
        assert!(FiniteDistPair::new(vec![1.5, -0.5], vec![0.5, 0.5]).is_err());
        assert!(FiniteDistPair::new(vec![0.5, 0.5], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn beta_identical_distributions_is_delta() {
        let pr = pair(&[0.25, 0.25, 0.5], &[0.25, 0.25, 0.5]);
        for delta in [0.0, 0.3, 0.5, 0.99, 1.0] {
            let (beta, _) = beta_finite(&pr, delta).unwrap();
            assert!((beta - delta).abs() < 1e-15, "delta={delta}: beta={beta}");
        }
    }

    #[test]
    fn beta_textbook_example() {
        // Best half-level test keeps the atom where p/q = 5.
        let pr = pair(&[0.5, 0.5], &[0.1, 0.9]);
        let (beta, test) = beta_finite(&pr, 0.5).unwrap();
        assert!((beta - 0.1).abs() < 1e-15);
        assert!((test.log_lr_threshold - (0.5f64 / 0.1).log2()).abs() < 1e-12);
        assert!((test.randomization - 1.0).abs() < 1e-12);
        // Level 0.75 randomizes into the weaker atom.
        let (beta, test) = beta_finite(&pr, 0.75).unwrap();
        assert!((beta - (0.1 + 0.5 * 0.9)).abs() < 1e-15);
        assert!((test.randomization - 0.5).abs() < 1e-12);
    }

    #[test]
    fn beta_edge_levels() {
        let pr = pair(&[0.5, 0.5], &[0.1, 0.9]);
        let (b0, t0) = beta_finite(&pr, 0.0).unwrap();
        assert_eq!(b0, 0.0);
        assert_eq!(t0.log_lr_threshold, f64::INFINITY);
        let (b1, _) = beta_finite(&pr, 1.0).unwrap();
        assert!((b1 - 1.0).abs() < 1e-15);
        assert!(beta_finite(&pr, 1.5).is_err());
        assert!(beta_finite(&pr, f64::NAN).is_err());
    }

    #[test]
    fn beta_handles_zero_mass_atoms() {
        // An atom with q = 0 is free to accept; one with p = 0 is taken
        // last.
        let pr = pair(&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5]);
        let (beta, _) = beta_finite(&pr, 0.5).unwrap();
        assert_eq!(beta, 0.0);
        let (beta, _) = beta_finite(&pr, 0.75).unwrap();
        assert!((beta - 0.25).abs() < 1e-15);
        let (beta, _) = beta_finite(&pr, 1.0).unwrap();
        assert!((beta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_monotone_in_delta() {
        let pr = pair(&[0.2, 0.3, 0.1, 0.4], &[0.4, 0.1, 0.3, 0.2]);
        let mut prev = -1.0;
        for k in 0..=20 {
            let delta = k as f64 / 20.0;
            let (beta, _) = beta_finite(&pr, delta).unwrap();
            assert!(beta >= prev - 1e-15, "beta not monotone at delta={delta}");
            prev = beta;
        }
    }

    #[test]
    fn lower_bound_never_exceeds_exact() {
        // Deterministic grid of pairs and thresholds.
        let mut state = 0x1234_5678_u64;
        let mut next = move || {
            state = super::mix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let k = 2 + (next() * 6.0) as usize;
            let mut p: Vec<f64> = (0..k).map(|_| next() + 1e-3).collect();
            let mut q: Vec<f64> = (0..k).map(|_| next() + 1e-3).collect();
            let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            // Renormalize exactly enough for the 1e-12 gate.
            let pr = FiniteDistPair::new(p, q).unwrap();
            let delta = 0.05 + 0.9 * next();
            let (exact, _) = beta_finite(&pr, delta).unwrap();
            for xi_log2 in [-3.0, -1.0, 0.0, 1.0, 3.0] {
                let lb = beta_lower_bound_finite(&pr, delta, xi_log2).unwrap();
                assert!(
                    lb <= exact + 1e-12,
                    "lower bound {lb} exceeds exact {exact} at xi=2^{xi_log2}"
                );
            }
        }
    }

    #[test]
    fn awgn_beta_frozen_values() {
        // Independently computed with 40-digit interval arithmetic.
        let b = beta_awgn(1, 1.0, 0.5).unwrap();
        assert!(
            (b - (-2.0862436421475885)).abs() < 1e-9,
            "n=1 value off: {b}"
        );
        let b8 = beta_awgn(8, 1.0, 0.9).unwrap();
        assert!(
            (b8 - (-3.5816967526180523)).abs() < 1e-9,
            "n=8 value off: {b8}"
        );
    }

    #[test]
    fn awgn_beta_monte_carlo_cross_check() {
        // Fresh-draw validation of the whole chain: simulate the
        // alternative law, apply the optimal acceptance region
        // {Q ≤ q₀}, and compare frequencies.
        use rand::SeedableRng;
        let (n, power, delta) = (8u64, 1.0, 0.9);
        let log2_beta = beta_awgn(n, power, delta).unwrap();
        let beta = log2_beta.exp2();
        let law = AwgnTestLaw::new(n, power).unwrap();
        let q0 = law.null_q_quantile(delta).unwrap();
        let shift = power.sqrt() + 1.0 / power.sqrt();
        let sd = (1.0 + power).sqrt();
        let trials = 200_000u64;
        let hits: u64 = (0..trials)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = ChaCha8Rng::seed_from_u64(super::mix64(0xA17 ^ super::mix64(t)));
                let q: f64 = (0..n)
                    .map(|_| {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        let y = sd * z;
                        (y - shift) * (y - shift)
                    })
                    .sum();
                q <= q0
            })
            .count() as u64;
        let est = hits as f64 / trials as f64;
        let se = (beta * (1.0 - beta) / trials as f64).sqrt();
        assert!(
            (est - beta).abs() < 3.0 * se,
            "MC {est} vs closed form {beta} (se {se})"
        );
    }

    #[test]
    fn awgn_beta_monotone_and_valid_range() {
        let mut prev = f64::NEG_INFINITY;
        for delta in [0.05, 0.2, 0.5, 0.8, 0.95] {
            let b = beta_awgn(16, 1.0, delta).unwrap();
            assert!(b > prev, "log2 beta must increase with delta");
            assert!(b < 0.0);
            prev = b;
        }
        assert!(beta_awgn(16, 1.0, 0.0).is_err());
        assert!(beta_awgn(16, 1.0, 1.0).is_err());
        assert!(beta_awgn(16, -1.0, 0.5).is_err());
        assert!(beta_awgn(0, 1.0, 0.5).is_err());
    }

    #[test]
    fn awgn_lower_bound_sandwiches() {
        // Evaluate the converse bound at the optimal threshold: it must
        // stay below the exact β but lands within a factor ~δ of it.
        let (n, power, delta) = (16u64, 1.0, 0.5);
        let exact = beta_awgn(n, power, delta).unwrap().exp2();
        let tau = beta_awgn_threshold(n, power, delta).unwrap();
        let lb = beta_lower_bound_awgn(n, power, delta, tau).unwrap();
        assert!(lb <= exact * (1.0 + 1e-9), "lb {lb} vs exact {exact}");
        // At the optimal threshold Pr_null{LLR ≥ τ} ≈ 1 − δ... loose but
        // strictly positive.
        assert!(lb > 0.0);
        // A far-too-high threshold drives the bound to 0.
        assert_eq!(beta_lower_bound_awgn(n, power, delta, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn pushforward_data_processing() {
        let mut state = 0xfeed_beef_u64;
        let mut next = move || {
            state = super::mix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..100 {
            let k = 3 + (next() * 8.0) as usize;
            let out = 1 + (next() * k as f64) as usize;
            let mut p: Vec<f64> = (0..k).map(|_| next() + 1e-3).collect();
            let mut q: Vec<f64> = (0..k).map(|_| next() + 1e-3).collect();
            let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            let pr = FiniteDistPair::new(p, q).unwrap();
            let map: Vec<usize> = (0..k).map(|_| (next() * out as f64) as usize % out).collect();
            let img = pushforward(&pr, &map, out).unwrap();
            let delta = 0.1 + 0.8 * next();
            let (b_orig, _) = beta_finite(&pr, delta).unwrap();
            let (b_img, _) = beta_finite(&img, delta).unwrap();
            assert!(
                b_img >= b_orig - 1e-12,
                "trial {trial}: processing improved the test: {b_img} < {b_orig}"
            );
        }
    }

    #[test]
    fn pushforward_validation() {
        let pr = pair(&[0.5, 0.5], &[0.1, 0.9]);
        assert!(pushforward(&pr, &[0], 1).is_err());
        assert!(pushforward(&pr, &[0, 2], 2).is_err());
        assert!(pushforward(&pr, &[0, 0], 0).is_err());
        let merged = pushforward(&pr, &[0, 0], 1).unwrap();
        assert_eq!(merged.p(), &[1.0]);
    }

    #[test]
    fn toy_code_validation() {
        assert!(ToyCode::antipodal(4, 1.0).is_ok());
        assert!(ToyCode::antipodal(4, -1.0).is_err());
        // Power-violating codebook is rejected.
        assert!(ToyCode::new(vec![vec![0.5, 0.5]], 1.0).is_err());
        let c = ToyCode::random_spherical(4, 8, 2.0, 7).unwrap();
        assert_eq!(c.message_count(), 4);
        assert_eq!(c.blocklength(), 8);
        for cw in &c.codebook {
            let s: f64 = cw.iter().map(|x| x * x).sum();
            assert!((s - 16.0).abs() < 1e-9 * 16.0);
        }
    }

    #[test]
    fn decode_nearest_with_low_index_ties() {
        let code = ToyCode::antipodal(2, 1.0).unwrap();
        assert_eq!(code.decode(&[0.9, 1.1]), 0);
        assert_eq!(code.decode(&[-0.9, -1.1]), 1);
        // Equidistant point ties to index 0.
        assert_eq!(code.decode(&[0.0, 0.0]), 0);
    }

    #[test]
    fn metaconverse_antipodal() {
        let code = ToyCode::antipodal(4, 1.0).unwrap();
        let rep = metaconverse_check(&code, 60_000, 31).unwrap();
        assert!(rep.conclusive);
        assert!(rep.pass, "beta 2^{} vs 1/M={}", rep.log2_beta, 0.5);
        assert!(rep.alpha_hat > 0.97, "antipodal at n=4 decodes reliably");
        assert_eq!(rep.message_count, 2);
    }

    #[test]
    fn metaconverse_spherical() {
        let code = ToyCode::random_spherical(4, 8, 1.0, 99).unwrap();
        let rep = metaconverse_check(&code, 60_000, 13).unwrap();
        assert!(rep.conclusive);
        assert!(rep.pass, "beta 2^{} vs 1/M=0.25", rep.log2_beta);
        assert_eq!(rep.log2_m, 2.0);
        assert!(metaconverse_check(&code, 10, 0).is_err());
    }

    #[test]
    fn multinomial_resample_conserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probs = [0.1, 0.2, 0.3, 0.4];
        for _ in 0..20 {
            let counts = multinomial_resample(&mut rng, &probs, 10_000);
            assert_eq!(counts.iter().sum::<u64>(), 10_000);
        }
        // Degenerate mass at one cell.
        let counts = multinomial_resample(&mut rng, &[0.0, 1.0], 500);
        assert_eq!(counts, vec![0, 500]);
    }
}
