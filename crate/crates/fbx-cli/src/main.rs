//! Command-line front end: converse-bound evaluation, water-filling,
//! blocklength sweeps, feedback-code simulation, and statistical
//! verification, with machine-readable output.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error (a module
//! precondition failed; its message goes to stderr), 3 statistical
//! failure (a verification check ran to completion and did not pass).
//!
//! Output convention: machine output (JSON or CSV) goes to --out when
//! given, otherwise to stdout; when --out is given, stdout carries a
//! one-line human summary instead. The --workers flag only affects
//! wall-clock time, never results; seeds resolve flag > FBX_SEED > 0.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fbx_core::bounds::{
    finite_n_converse, normal_approximation, theorem1_kappa_form, BoundReport, ScalarChannel,
};
use fbx_core::hypothesis::{metaconverse_check, ToyCode};
use fbx_core::parallel::{theorem2_bound, ParallelSpec};
use fbx_core::sim::{
    berry_esseen_check, run_batch, verify_distribution_identity, verify_mgf, EncoderKind,
    EncoderSpec,
};

#[derive(Parser)]
#[command(name = "fbx", version, about = "Finite-blocklength converse bounds and checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one converse bound at a single blocklength.
    Bound(BoundArgs),
    /// Evaluate all scalar bound kinds over a log-spaced blocklength grid (CSV).
    Sweep(SweepArgs),
    /// Simulate a feedback code and write per-trial statistics as CSV.
    Simulate(SimulateArgs),
    /// Run a statistical verification check (exit 3 if it fails).
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Channel {
    Awgn,
    Parallel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// Finite-blocklength converse with explicit Berry-Esseen slack.
    Finite,
    /// Asymptotic-constant form of the same bound.
    Kappa,
    /// Normal approximation (no remainder terms).
    Normal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EncoderArg {
    Constant,
    Spherical,
    Adaptive,
    PowerViolating,
}

impl EncoderArg {
    fn kind(self) -> EncoderKind {
        match self {
            EncoderArg::Constant => EncoderKind::ConstantSqrtP,
            EncoderArg::Spherical => EncoderKind::RandomSpherical,
            EncoderArg::Adaptive => EncoderKind::AdaptiveToy,
            EncoderArg::PowerViolating => EncoderKind::PowerViolating,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Identity,
    Mgf,
    BerryEsseen,
    Metaconverse,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    channel: Channel,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    eps: f64,
    /// Scalar channel SNR (the power P); required for --channel awgn.
    #[arg(long)]
    snr: Option<f64>,
    /// Parallel noise variances, comma separated; required for --channel parallel.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    /// Total power for --channel parallel.
    #[arg(long)]
    power: Option<f64>,
    /// Bound kind (scalar channel only; the parallel channel has one bound).
    #[arg(long, value_enum, default_value_t = Kind::Finite)]
    kind: Kind,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Blocklength grid start:stop:points, log-spaced inclusive.
    #[arg(long)]
    n_grid: String,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    snr: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    encoder: EncoderArg,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 1.0)]
    snr: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Message-set size for message-driven encoders.
    #[arg(long, default_value_t = 4)]
    messages: u64,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    check: Check,
    #[arg(long, value_enum, default_value_t = EncoderArg::Constant)]
    encoder: EncoderArg,
    #[arg(long, default_value_t = 16)]
    n: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1.0)]
    snr: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 4)]
    messages: u64,
    /// MGF evaluation points, comma separated (check=mgf only).
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum AppError {
    Usage(String),
    Domain(fbx_core::Error),
    Io(std::io::Error),
}

impl From<fbx_core::Error> for AppError {
    fn from(e: fbx_core::Error) -> Self {
        AppError::Domain(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                0
            } else {
                1
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Bound(a) => cmd_bound(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Domain(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(AppError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Seed resolution: flag wins, then FBX_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, AppError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("FBX_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| AppError::Usage(format!("FBX_SEED must be a 64-bit integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn configure_workers(workers: Option<usize>) -> Result<(), AppError> {
    if let Some(w) = workers {
        if w == 0 {
            return Err(AppError::Usage("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| AppError::Usage(format!("cannot configure worker pool: {e}")))?;
    }
    Ok(())
}

/// Machine output goes to --out when given (stdout then carries the
/// human summary); otherwise machine output goes to stdout.
fn emit(out: &Option<PathBuf>, payload: &str, human: &str) -> Result<(), AppError> {
    match out {
        Some(path) => {
            std::fs::write(path, payload)?;
            println!("{human} -> {}", path.display());
        }
        None => {
            print!("{payload}");
            if !payload.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}

fn scalar_bound_csv(rep: &BoundReport) -> String {
    let mut s = String::from("n,eps,kind,log_m_bound_bits,threshold_log_xi_bits\n");
    let kind = serde_json::to_value(rep.kind).expect("kind serializes");
    let threshold =
        rep.threshold_log_xi.map(|t| t.to_string()).unwrap_or_default();
    let _ = writeln!(
        s,
        "{},{},{},{},{}",
        rep.n,
        rep.epsilon,
        kind.as_str().expect("kind is a string"),
        rep.log_m_bound,
        threshold
    );
    s
}

fn cmd_bound(a: BoundArgs) -> Result<u8, AppError> {
    match a.channel {
        Channel::Awgn => {
            let snr = a.snr.ok_or_else(|| {
                AppError::Usage("--channel awgn requires --snr".into())
            })?;
            let ch = ScalarChannel::new(snr)?;
            let rep = match a.kind {
                Kind::Finite => finite_n_converse(&ch, a.n, a.eps)?,
                Kind::Kappa => theorem1_kappa_form(&ch, a.n, a.eps)?,
                Kind::Normal => normal_approximation(&ch, a.n, a.eps)?,
            };
            let payload = match a.format {
                Format::Json => serde_json::to_string_pretty(&rep).expect("report serializes"),
                Format::Csv => scalar_bound_csv(&rep),
            };
            let human = format!(
                "bound: log2 M <= {} bits (n={}, eps={})",
                rep.log_m_bound, rep.n, rep.epsilon
            );
            emit(&a.out, &payload, &human)?;
            Ok(0)
        }
        Channel::Parallel => {
            let sigmas = a.sigmas.ok_or_else(|| {
                AppError::Usage("--channel parallel requires --sigmas".into())
            })?;
            let power = a.power.ok_or_else(|| {
                AppError::Usage("--channel parallel requires --power".into())
            })?;
            let spec = ParallelSpec::new(sigmas, power)?;
            let rep = theorem2_bound(&spec, a.n, a.eps)?;
            let payload = match a.format {
                Format::Json => serde_json::to_string_pretty(&rep).expect("report serializes"),
                Format::Csv => {
                    let mut s =
                        String::from("n,eps,kind,log_m_bound_bits,threshold_log_xi_bits,water_level\n");
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        rep.n, rep.epsilon, rep.kind, rep.log_m_bound, rep.threshold_log_xi,
                        rep.water_level
                    );
                    s
                }
            };
            let human = format!(
                "bound: log2 M <= {} bits (n={}, eps={}, water level {})",
                rep.log_m_bound, rep.n, rep.epsilon, rep.water_level
            );
            emit(&a.out, &payload, &human)?;
            Ok(0)
        }
    }
}

/// Parse "start:stop:points" into a log-spaced inclusive blocklength grid.
fn parse_grid(spec: &str) -> Result<Vec<u64>, AppError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let usage = || {
        AppError::Usage(format!(
            "--n-grid must be start:stop:points with start <= stop and points >= 1, got {spec:?}"
        ))
    };
    if parts.len() != 3 {
        return Err(usage());
    }
    let start: u64 = parts[0].parse().map_err(|_| usage())?;
    let stop: u64 = parts[1].parse().map_err(|_| usage())?;
    let points: usize = parts[2].parse().map_err(|_| usage())?;
    if start == 0 || start > stop || points == 0 {
        return Err(usage());
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = ((start as f64).ln(), (stop as f64).ln());
    let mut grid: Vec<u64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .collect();
    grid.dedup();
    Ok(grid)
}

fn cmd_sweep(a: SweepArgs) -> Result<u8, AppError> {
    let grid = parse_grid(&a.n_grid)?;
    let ch = ScalarChannel::new(a.snr)?;
    let mut csv =
        String::from("n,finite_n_converse_bits,theorem1_kappa_form_bits,normal_approximation_bits\n");
    for &n in &grid {
        // A kind outside its validity region contributes an empty field.
        let cell = |r: fbx_core::Result<BoundReport>| match r {
            Ok(rep) => rep.log_m_bound.to_string(),
            Err(_) => String::new(),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            n,
            cell(finite_n_converse(&ch, n, a.eps)),
            cell(theorem1_kappa_form(&ch, n, a.eps)),
            cell(normal_approximation(&ch, n, a.eps))
        );
    }
    let human = format!("sweep: {} blocklengths, eps={}, snr={}", grid.len(), a.eps, a.snr);
    emit(&a.out, &csv, &human)?;
    Ok(0)
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8, AppError> {
    configure_workers(a.workers)?;
    let seed = resolve_seed(a.seed)?;
    let enc = EncoderSpec::new(a.encoder.kind(), a.messages)?;
    let batch = run_batch(&enc, a.n, a.snr, a.trials, seed)?;
    let mut csv = Vec::new();
    batch.write_csv(&mut csv)?;
    let payload = String::from_utf8(csv).expect("CSV is ASCII");
    let mean_u =
        batch.traces.iter().map(|t| t.u_sum).sum::<f64>() / batch.traces.len() as f64;
    let human = format!(
        "simulate: {} trials (n={}, snr={}, seed={}), mean u_sum {:.4} bits, rejections {}",
        a.trials, a.n, a.snr, seed, mean_u, batch.rejections
    );
    emit(&a.out, &payload, &human)?;
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, AppError> {
    configure_workers(a.workers)?;
    let seed = resolve_seed(a.seed)?;
    let (pass, payload, human) = match a.check {
        Check::Identity => {
            let enc = EncoderSpec::new(a.encoder.kind(), a.messages)?;
            let batch = run_batch(&enc, a.n, a.snr, a.trials, seed)?;
            let rep = verify_distribution_identity(&batch)?;
            let payload = serde_json::json!({
                "check": "identity",
                "pass": rep.pass,
                "report": rep,
            });
            let human = format!(
                "identity: KS distance {:.6} vs threshold {:.6} -> {}",
                rep.ks_distance,
                rep.threshold,
                if rep.pass { "pass" } else { "FAIL" }
            );
            (rep.pass, payload, human)
        }
        Check::Mgf => {
            let enc = EncoderSpec::new(a.encoder.kind(), a.messages)?;
            let batch = run_batch(&enc, a.n, a.snr, a.trials, seed)?;
            let t_grid = a.t_grid.unwrap_or_else(|| vec![-0.1, -0.02, 0.05]);
            let checks = verify_mgf(&batch, &t_grid)?;
            let pass = checks.iter().all(|c| c.z_score.abs() <= 3.0);
            let worst =
                checks.iter().map(|c| c.z_score.abs()).fold(0.0f64, f64::max);
            let payload = serde_json::json!({
                "check": "mgf",
                "pass": pass,
                "report": checks,
            });
            let human = format!(
                "mgf: {} points, worst |z| = {:.3} -> {}",
                t_grid.len(),
                worst,
                if pass { "pass" } else { "FAIL" }
            );
            (pass, payload, human)
        }
        Check::BerryEsseen => {
            let reps = berry_esseen_check(a.snr, &[a.n], a.trials, seed)?;
            let pass = reps.iter().all(|r| r.pass);
            let human = format!(
                "berry-esseen: n={}, sup deviation {:.6} vs bound {:.6} -> {}",
                reps[0].n,
                reps[0].sup_dev,
                reps[0].bound,
                if pass { "pass" } else { "FAIL" }
            );
            let payload = serde_json::json!({
                "check": "berry-esseen",
                "pass": pass,
                "report": reps,
            });
            (pass, payload, human)
        }
        Check::Metaconverse => {
            let code = match a.encoder {
                EncoderArg::Constant => ToyCode::antipodal(a.n, a.snr)?,
                EncoderArg::Spherical => {
                    ToyCode::random_spherical(a.messages, a.n, a.snr, seed ^ 0xC0DE)?
                }
                _ => {
                    return Err(AppError::Usage(
                        "--check metaconverse supports --encoder constant|spherical".into(),
                    ))
                }
            };
            let rep = metaconverse_check(&code, a.trials, seed)?;
            let pass = rep.pass && rep.conclusive;
            let human = format!(
                "metaconverse: M={}, log2 beta {:.4} vs -log2 M {:.4} -> {}",
                rep.message_count,
                rep.log2_beta,
                -rep.log2_m,
                if pass { "pass" } else { "FAIL" }
            );
            let payload = serde_json::json!({
                "check": "metaconverse",
                "pass": pass,
                "report": rep,
            });
            (pass, payload, human)
        }
    };
    emit(&a.out, &serde_json::to_string_pretty(&payload).expect("json"), &human)?;
    Ok(if pass { 0 } else { 3 })
}
