//! Error type shared by every module in the crate.
//!
//! All fallible operations return [`Result`]. Domain violations (bad
//! parameters, quantile arguments outside (0,1), MGF evaluation past the
//! divergence point, …) are reported as typed variants so callers — the CLI
//! in particular — can map them onto a stable exit-code taxonomy.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when evaluating bounds or running checks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A Gaussian was requested with variance ≤ 0.
    #[error("variance must be strictly positive (got {0})")]
    NonPositiveVariance(f64),

    /// A channel was specified with signal power ≤ 0.
    #[error("power must be strictly positive (got {0})")]
    NonPositivePower(f64),

    /// A probability-valued argument fell outside its admissible range.
    #[error("{name} must lie in {range} (got {value})")]
    ProbabilityRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    /// Noncentral chi-square noncentrality must be ≥ 0.
    #[error("noncentrality must be nonnegative (got {0})")]
    NegativeNoncentrality(f64),

    /// Zero degrees of freedom (or another structurally empty input).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The finite-n converse needs ε + 2T/(σ³√n) < 1; smaller n has no
    /// admissible Gaussian quantile.
    #[error("blocklength too small for Berry–Esséen slack")]
    BlocklengthTooSmall,

    /// The sum-statistic MGF only exists for 1 + 2tP > 0.
    #[error("MGF diverges at t = {t}: requires t > -1/(2P) = {limit}")]
    MgfDiverges { t: f64, limit: f64 },

    /// The empirical MGF estimator would overflow or have unbounded
    /// variance at the requested t (pre-pass on sample exponents failed).
    #[error("MGF estimator unstable at t = {0}: sample exponents too large")]
    MgfEstimatorUnstable(f64),

    /// A distribution pair failed validation (length mismatch, mass ≠ 1, …).
    #[error("invalid distribution pair: {0}")]
    InvalidDistribution(String),

    /// A Monte Carlo check was asked to run with too few trials for its
    /// stated resolution.
    #[error("insufficient trials: {0}")]
    InsufficientTrials(String),
}
