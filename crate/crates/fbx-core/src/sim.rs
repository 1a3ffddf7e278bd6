//! Monte Carlo simulation of feedback codes over the unit-noise AWGN
//! channel under the peak-power *equality* Σx_k² = nP, and the empirical
//! checks built on it: the code-invariance of the λ-sum law, the MGF
//! identity, the Berry–Esséen envelope, and the parallel-channel variance
//! envelope.
//!
//! Determinism contract: every trial derives its own counter-based RNG
//! stream from (seed, trial index, attempt), and aggregation is
//! order-preserving, so a batch is a pure function of
//! (encoder, n, P, trials, seed) — the number of worker threads never
//! changes a single bit of the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llr::{sum_statistic_law, u_from_lambda};
use crate::parallel::{variance_envelope, waterfill, ParallelSpec};
use crate::special::{ks_critical_value, normal_cdf};

/// Per-symbol statistic λ(x, y) = -P(y-x)² + 2x(y-x) whose n-sum has the
/// same law for every feedback code meeting the power equality.
pub fn lambda_statistic(power: f64, x: f64, y: f64) -> f64 {
    let z = y - x;
    -power * z * z + 2.0 * x * z
}

/// Built-in encoders. All of them (except the deliberate negative
/// control) emit codewords with Σx_k² = nP exactly, the adaptive one by
/// closing the budget with its final symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderKind {
    /// x_k = √P for every k; the symmetric reference codeword.
    #[serde(rename = "constant_sqrtP")]
    ConstantSqrtP,
    /// A fixed codebook of `message_count` points uniform on the radius
    /// √(nP) sphere, drawn once per batch from a dedicated seed stream.
    #[serde(rename = "random_spherical")]
    RandomSpherical,
    /// Genuinely feedback-dependent toy: x_k = √P·b_k·tanh(y_{k-1}) with
    /// message-driven signs b_k, final symbol closing the power budget.
    #[serde(rename = "adaptive_toy")]
    AdaptiveToy,
    /// Negative control violating the power equality: Σx_k² = nP/2.
    #[serde(rename = "power_violating")]
    PowerViolating,
}

/// An encoder plus its message-set size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub message_count: u64,
}

impl EncoderSpec {
    pub fn new(kind: EncoderKind, message_count: u64) -> Result<Self> {
        if message_count == 0 {
            return Err(Error::InvalidArgument("message_count must be >= 1".into()));
        }
        if kind == EncoderKind::RandomSpherical && message_count > 1 << 20 {
            return Err(Error::InvalidArgument(
                "random_spherical codebooks are materialized; message_count capped at 2^20"
                    .into(),
            ));
        }
        Ok(Self { kind, message_count })
    }
}

/// One simulated transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    /// The derived per-trial RNG seed (diagnostic; reruns reproduce it).
    pub seed: u64,
    pub n: u64,
    /// Σ_k λ(x_k, y_k), raw units.
    pub lambda_sum: f64,
    /// The centered sum in bits: log₂e/(2(1+P))·(lambda_sum + nP).
    pub u_sum: f64,
    /// |Σ x_k² − nP|.
    pub power_residual: f64,
}

/// A deterministic batch of trials sharing (encoder, n, P, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimBatch {
    pub encoder: EncoderSpec,
    pub n: u64,
    pub power: f64,
    pub seed: u64,
    pub traces: Vec<SimTrace>,
    /// lambda_sum values sorted ascending (the empirical CDF support).
    pub empirical_cdf: Vec<f64>,
    /// Trials that had to be re-derived after a power-budget rejection.
    pub rejections: u64,
}

// splitmix64-style avalanche, the standard counter-based stream deriver.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn trial_seed(seed: u64, trial: u64, attempt: u64) -> u64 {
    mix64(seed ^ mix64(trial) ^ mix64(attempt).rotate_left(17))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Uniform point on the radius-r sphere in R^n.
pub(crate) fn sphere_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|x| x * radius / norm).collect();
        }
    }
}

struct TrialOutcome {
    trace: SimTrace,
    rejected_attempts: u64,
}

fn run_trial(
    enc: &EncoderSpec,
    n: u64,
    power: f64,
    codebook: Option<&[Vec<f64>]>,
    seed: u64,
    trial: u64,
) -> TrialOutcome {
    let nf = n as f64;
    let budget = nf * power;
    let sqrt_p = power.sqrt();
    let mut attempt = 0u64;
    loop {
        let s = trial_seed(seed, trial, attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let w = rng.random_range(0..enc.message_count);
        let mut lambda_sum = 0.0;
        let mut power_used = 0.0;
        let mut prev_y = 0.0f64;
        let mut y_acc = 0.0f64;
        let mut rejected = false;
        for k in 1..=n {
            let x = match enc.kind {
                EncoderKind::ConstantSqrtP => sqrt_p,
                EncoderKind::PowerViolating => (0.5 * power).sqrt(),
                EncoderKind::RandomSpherical => {
                    codebook.expect("codebook prebuilt")[w as usize][(k - 1) as usize]
                }
                EncoderKind::AdaptiveToy => {
                    let bit = (w >> ((k - 1) % 64)) & 1;
                    let b = if bit == 1 { 1.0 } else { -1.0 };
                    if k == n {
                        // Closing symbol: spend exactly the remaining
                        // budget, sign driven by the output history.
                        let remaining = budget - power_used;
                        if remaining < 0.0 {
                            rejected = true;
                            break;
                        }
                        let sign = if y_acc > 0.0 {
                            1.0
                        } else if y_acc < 0.0 {
                            -1.0
                        } else {
                            b
                        };
                        sign * remaining.sqrt()
                    } else if k == 1 {
                        b * sqrt_p
                    } else {
                        b * sqrt_p * prev_y.tanh()
                    }
                }
            };
            power_used += x * x;
            let z = standard_normal(&mut rng);
            let y = x + z;
            lambda_sum += lambda_statistic(power, x, y);
            prev_y = y;
            y_acc += y;
        }
        if rejected {
            attempt += 1;
            continue;
        }
        let residual = match enc.kind {
            // The negative control is *supposed* to sit at nP/2; its
            // residual reports the gap to its own target so the trace
            // invariant stays meaningful.
            EncoderKind::PowerViolating => (power_used - 0.5 * budget).abs(),
            _ => (power_used - budget).abs(),
        };
        return TrialOutcome {
            trace: SimTrace {
                seed: s,
                n,
                lambda_sum,
                u_sum: u_from_lambda(lambda_sum, n, power),
                power_residual: residual,
            },
            rejected_attempts: attempt,
        };
    }
}

/// Run `trials` independent transmissions of the encoder over the channel
/// and record the λ-sum of each. Deterministic in (enc, n, P, trials,
/// seed) regardless of how many worker threads execute it.
pub fn run_batch(
    enc: &EncoderSpec,
    n: u64,
    power: f64,
    trials: u64,
    seed: u64,
) -> Result<SimBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength n must be >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::NonPositivePower(power));
    }
    EncoderSpec::new(enc.kind, enc.message_count)?;

    // The spherical codebook is shared by every trial and drawn from its
    // own seed stream so trial substreams stay independent of M and n.
    let codebook: Option<Vec<Vec<f64>>> = match enc.kind {
        EncoderKind::RandomSpherical => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0x5EED_C0DE_B00C_0001));
            let radius = (n as f64 * power).sqrt();
            Some(
                (0..enc.message_count)
                    .map(|_| sphere_point(&mut rng, n as usize, radius))
                    .collect(),
            )
        }
        _ => None,
    };

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(enc, n, power, codebook.as_deref(), seed, t))
        .collect();

    let rejections = outcomes.iter().map(|o| o.rejected_attempts).sum();
    let traces: Vec<SimTrace> = outcomes.into_iter().map(|o| o.trace).collect();
    let mut empirical_cdf: Vec<f64> = traces.iter().map(|t| t.lambda_sum).collect();
    empirical_cdf.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in lambda sums"));

    Ok(SimBatch { encoder: *enc, n, power, seed, traces, empirical_cdf, rejections })
}

impl SimBatch {
    /// Write the batch as CSV with columns trial, lambda_sum, u_sum_bits,
    /// power_residual. Formatting uses the shortest round-trip f64
    /// representation, so output is byte-stable across runs and worker
    /// counts.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "trial,lambda_sum,u_sum_bits,power_residual")?;
        for (i, t) in self.traces.iter().enumerate() {
            writeln!(w, "{},{},{},{}", i, t.lambda_sum, t.u_sum, t.power_residual)?;
        }
        Ok(())
    }
}

/// Outcome of the one-sample KS test of a batch's λ-sums against the
/// closed-form law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub trials: u64,
    pub ks_distance: f64,
    /// c(α)/√trials at α = 0.01.
    pub threshold: f64,
    pub pass: bool,
}

/// One-sample Kolmogorov–Smirnov distance between sorted samples and a
/// CDF evaluated at them.
fn ks_distance_sorted<F: Fn(f64) -> f64 + Sync>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i as f64 + 1.0) / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .reduce(|| 0.0, f64::max)
}

/// Two-sample KS distance between two individually sorted samples.
pub fn two_sample_ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Test the code-invariance of the λ-sum law: one-sample KS of the
/// batch's empirical CDF against the affine-chi-square closed form, at
/// level α = 0.01.
pub fn verify_distribution_identity(batch: &SimBatch) -> Result<IdentityReport> {
    if batch.traces.is_empty() {
        return Err(Error::InsufficientTrials("batch has no traces".into()));
    }
    let law = sum_statistic_law(batch.n, batch.power)?;
    let d = ks_distance_sorted(&batch.empirical_cdf, |x| {
        law.cdf(x).expect("law cdf is total on reals")
    });
    let trials = batch.empirical_cdf.len() as u64;
    let threshold = ks_critical_value(0.01)? / (trials as f64).sqrt();
    Ok(IdentityReport { trials, ks_distance: d, threshold, pass: d < threshold })
}

/// One grid point of the empirical-vs-closed-form MGF comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfCheck {
    pub t: f64,
    pub empirical: f64,
    pub closed_form: f64,
    /// (empirical − closed)/SE; 0 by definition at t = 0.
    pub z_score: f64,
}

/// Compare the empirical MGF of the λ-sum to the closed form on a grid of
/// admissible t. Each t must satisfy 1 + 2tP > 0, and a pre-pass over the
/// sample exponents rejects any t whose estimator would overflow or carry
/// unbounded variance (max |t·λ| capped at 300 nats).
pub fn verify_mgf(batch: &SimBatch, t_grid: &[f64]) -> Result<Vec<MgfCheck>> {
    if batch.traces.is_empty() {
        return Err(Error::InsufficientTrials("batch has no traces".into()));
    }
    let n = batch.empirical_cdf.len() as f64;
    let (min_l, max_l) =
        (batch.empirical_cdf[0], batch.empirical_cdf[batch.empirical_cdf.len() - 1]);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        // Admissibility: inside the closed form's existence region.
        let closed = crate::llr::closed_form_mgf(t, batch.n, batch.power)?;
        // Stability pre-pass on the realized exponent range.
        let extreme = (t * min_l).max(t * max_l);
        if extreme > 300.0 {
            return Err(Error::MgfEstimatorUnstable(t));
        }
        if t == 0.0 {
            out.push(MgfCheck { t, empirical: 1.0, closed_form: closed, z_score: 0.0 });
            continue;
        }
        let (sum, sum_sq) = batch
            .empirical_cdf
            .par_iter()
            .map(|&l| {
                let e = (t * l).exp();
                (e, e * e)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        let se = (var / n).sqrt();
        let z = if se > 0.0 { (mean - closed) / se } else { 0.0 };
        out.push(MgfCheck { t, empirical: mean, closed_form: closed, z_score: z });
    }
    Ok(out)
}

/// One blocklength's result of the Berry–Esséen envelope check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenCheck {
    pub n: u64,
    /// sup_x |empirical CDF of (ΣU_k)/(σ√n) − Φ(x)| over the sample.
    pub sup_dev: f64,
    /// T/(σ³√n) plus the α=0.01 KS sampling slack.
    pub bound: f64,
    pub pass: bool,
}

/// Empirically verify the Berry–Esséen envelope: the standardized U-sum's
/// CDF deviates from Φ by at most T/(σ³√n), up to KS sampling noise.
/// Requires trials ≥ 100·n·σ⁶/T² per blocklength so the sampling slack
/// stays well under the envelope itself.
pub fn berry_esseen_check(
    power: f64,
    n_list: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<BerryEsseenCheck>> {
    let m = crate::llr::llr_moments(power)?;
    let (sigma, t3) = (m.sigma, m.third_abs);
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let needed = (100.0 * n as f64 * sigma.powi(6) / (t3 * t3)).ceil() as u64;
        if trials < needed {
            return Err(Error::InsufficientTrials(format!(
                "berry_esseen_check at n={n} needs at least {needed} trials, got {trials}"
            )));
        }
        let enc = EncoderSpec::new(EncoderKind::ConstantSqrtP, 1)?;
        let batch = run_batch(&enc, n, power, trials, mix64(seed ^ n))?;
        let scale = sigma * (n as f64).sqrt();
        let mut std_u: Vec<f64> = batch.traces.iter().map(|t| t.u_sum / scale).collect();
        std_u.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        let sup_dev = ks_distance_sorted(&std_u, normal_cdf);
        let bound = t3 / (sigma.powi(3) * (n as f64).sqrt())
            + ks_critical_value(0.01)? / (trials as f64).sqrt();
        out.push(BerryEsseenCheck { n, sup_dev, bound, pass: sup_dev <= bound });
    }
    Ok(out)
}

/// Feedback encoders for the parallel-channel variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParallelEncoderKind {
    /// x_{ℓ,k} = √P_ℓ from the water-filling allocation.
    ConstantWaterfill,
    /// Per-slot total power exactly P, split across channels by a
    /// bounded feedback-driven tilt of the water-filling weights.
    AdaptiveSplit,
}

/// Monte Carlo estimate of Var[Σ_k U_k]/n for a feedback code on the
/// parallel channels, with the envelope verdict κ̃ < Var/n ≤ κ̄.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelVarianceEstimate {
    pub n: u64,
    pub trials: u64,
    pub var_per_n: f64,
    pub std_error_per_n: f64,
    pub kappa_tilde: f64,
    pub kappa_bar: f64,
    /// κ̃ < var/n ≤ κ̄ with 3·SE statistical slack on both sides.
    pub within_envelope: bool,
}

/// Per-symbol parallel statistic λ(P_ℓ, σ_ℓ², x, y) = (-P_ℓ/σ_ℓ²)(y-x)²
/// + P_ℓ + 2x(y-x), raw units.
pub fn lambda_parallel(power_l: f64, noise_var: f64, x: f64, y: f64) -> f64 {
    let z = y - x;
    -power_l / noise_var * z * z + power_l + 2.0 * x * z
}

/// Estimate Var[ΣU_k]/n for the given encoder and compare against the
/// code-independent envelope (κ̃, κ̄].
pub fn estimate_parallel_u_variance(
    spec: &ParallelSpec,
    encoder: ParallelEncoderKind,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<ParallelVarianceEstimate> {
    if n == 0 || trials < 2 {
        return Err(Error::InvalidArgument("need n >= 1 and trials >= 2".into()));
    }
    let alloc = waterfill(spec);
    let (kappa_tilde, kappa_bar) = variance_envelope(spec);
    let vars = spec.noise_variances().to_vec();
    let base = alloc.powers.clone();
    let p_total = spec.total_power();
    let l = vars.len();

    let sums: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial, 0));
            let w: u64 = rng.random();
            let mut prev_y = vec![0.0f64; l];
            let mut u_sum = 0.0;
            for _k in 0..n {
                // Per-slot powers: the water-filling split, optionally
                // tilted by feedback while keeping the slot total at P.
                let mut weights = base.clone();
                if encoder == ParallelEncoderKind::AdaptiveSplit {
                    let mut total = 0.0;
                    for (i, wgt) in weights.iter_mut().enumerate() {
                        if *wgt > 0.0 {
                            *wgt *= 1.0 + 0.45 * prev_y[i].tanh();
                        }
                        total += *wgt;
                    }
                    for wgt in weights.iter_mut() {
                        *wgt *= p_total / total;
                    }
                }
                for i in 0..l {
                    let sign = if (w >> (i % 64)) & 1 == 1 { 1.0 } else { -1.0 };
                    let x = sign * weights[i].sqrt();
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    let y = x + vars[i].sqrt() * z;
                    u_sum += lambda_parallel(base[i], vars[i], x, y);
                    prev_y[i] = y;
                }
            }
            u_sum
        })
        .collect();

    let nf = trials as f64;
    let mean = sums.iter().sum::<f64>() / nf;
    let m2 = sums.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / nf;
    let m4 = sums.iter().map(|s| (s - mean).powi(4)).sum::<f64>() / nf;
    let var_per_n = m2 / n as f64;
    // SE of the sample variance: √((m₄ − m₂²)/trials), scaled to per-n.
    let std_error_per_n = ((m4 - m2 * m2).max(0.0) / nf).sqrt() / n as f64;
    let within = var_per_n > kappa_tilde - 3.0 * std_error_per_n
        && var_per_n <= kappa_bar + 3.0 * std_error_per_n;
    Ok(ParallelVarianceEstimate {
        n,
        trials,
        var_per_n,
        std_error_per_n,
        kappa_tilde,
        kappa_bar,
        within_envelope: within,
    })
}
