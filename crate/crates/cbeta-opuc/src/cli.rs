//! Command-line harness: one subcommand per experiment, deterministic
//! artifacts, versioned output schema.
//!
//! Every run resolves to a single [`RunConfig`]; JSON artifacts embed it
//! verbatim under a `format_version` so downstream plotters can key on the
//! schema. CSV artifacts are plot-ready instead — a single header row and
//! nothing else — so the config travels only in the JSON form. The
//! artifact goes to `--out` when given (summary line on stdout), otherwise
//! to stdout with the summary on stderr, keeping piped output clean.
//!
//! Determinism contract: trajectory index = RNG stream, so rerunning any
//! config is byte-identical and `--workers` never changes a statistic.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::dimension::{run_dimension_experiment, DimensionOptions};
use crate::error::{Error, Result};
use crate::ldp::{
    empirical_rate, laplace_max, rate_curve_minimum, sample_zn_path, RateCurveOptions,
    UpsilonOptions,
};
use crate::measure::{bs_density, martingale_check, q0_identity_check, IdentityRow,
    MartingaleOptions};
use crate::opuc::{build_cmv, ThetaGrid};
use crate::stats::RunningStats;
use crate::verblunsky::{
    moment_oracle, sample_alpha_cbeta, stream_rng, MeasureTag, RadialLaw, VerblunskySequence,
};
use crate::{ldp, parallel};

/// Output schema version embedded in every JSON artifact.
pub const FORMAT_VERSION: u32 = 1;

/// Fraction of aborted trajectories above which a run exits with status 3
/// instead of reporting statistics built on a biased survivor set.
pub const ABORT_EXIT_FRACTION: f64 = 0.1;

#[derive(Parser, Debug)]
#[command(
    name = "cbeta-opuc",
    version,
    about = "Circular beta-ensemble coefficient experiments: sampling, \
             dimension estimation, norm-growth deviations, measure checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a coefficient sequence and write it as CSV or JSON.
    Sample(SampleArgs),
    /// Estimate the modulus-growth exponents and the plug-in dimension.
    Dimension(DimensionArgs),
    /// Dump one normalized log-modulus path on a time grid.
    LdpPath(LdpPathArgs),
    /// Histogram the norm-growth exponent into an empirical rate curve.
    LdpRate(LdpRateArgs),
    /// Estimate the norm-growth exponent and its CLT variance.
    Upsilon(UpsilonArgs),
    /// Check the inverse-modulus martingale mean down a depth ladder.
    Martingale(MartingaleArgs),
    /// Compare sampler moments against the closed-form oracle.
    Moments(MomentsArgs),
    /// Tabulate the truncated spectral density on an angular grid.
    BsDensity(BsDensityArgs),
    /// Build the five-diagonal unitary matrix and measure its defects.
    CmvCheck(CmvCheckArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl OutFormat {
    fn name(self) -> &'static str {
        match self {
            OutFormat::Csv => "csv",
            OutFormat::Json => "json",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MeasureChoice {
    /// Raw coefficient law.
    Q,
    /// Size-biased law (spectral mass at angle 0).
    Q0,
    /// Size-biased law rotated to the angle given by --theta.
    Qtheta,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
struct CoreArgs {
    /// Coefficient-law parameter beta (> 0).
    #[arg(long, value_parser = parse_positive_real)]
    beta: f64,
    /// Base RNG seed; each trajectory derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: CBETA_OPUC_THREADS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Artifact format.
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out_format: OutFormat,
    /// Artifact destination; stdout when omitted (summary moves to stderr).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Measure selection shared by the sampling-based subcommands.
#[derive(Args, Debug)]
struct MeasureArgs {
    /// Coefficient measure.
    #[arg(long, value_enum, default_value_t = MeasureChoice::Q)]
    measure: MeasureChoice,
    /// Rotation angle; required by (and only valid with) --measure qtheta.
    #[arg(long)]
    theta: Option<f64>,
}

impl MeasureArgs {
    fn tag(&self) -> Result<MeasureTag> {
        match (self.measure, self.theta) {
            (MeasureChoice::Q, None) => Ok(MeasureTag::Q),
            (MeasureChoice::Q0, None) => Ok(MeasureTag::Q0),
            (MeasureChoice::Qtheta, Some(theta)) if theta.is_finite() => {
                Ok(MeasureTag::QTheta(theta))
            }
            (MeasureChoice::Qtheta, Some(theta)) => Err(Error::InvalidParameter(format!(
                "--theta must be finite, got {theta}"
            ))),
            (MeasureChoice::Qtheta, None) => Err(Error::InvalidParameter(
                "--measure qtheta requires --theta".into(),
            )),
            (_, Some(_)) => Err(Error::InvalidParameter(
                "--theta only applies to --measure qtheta".into(),
            )),
        }
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Number of coefficients to sample.
    #[arg(long, value_parser = parse_positive_count)]
    n_max: usize,
    /// Clamp coefficient moduli at 1 - delta.
    #[arg(long)]
    truncate_delta: Option<f64>,
}

#[derive(Args, Debug)]
struct DimensionArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Trajectory horizon (largest polynomial degree).
    #[arg(long, value_parser = parse_positive_count)]
    n_max: usize,
    /// Number of independent trajectories.
    #[arg(long, default_value_t = 200, value_parser = parse_positive_count)]
    trials: usize,
    /// Clamp coefficient moduli at 1 - delta.
    #[arg(long)]
    truncate_delta: Option<f64>,
}

#[derive(Args, Debug)]
struct LdpPathArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Trajectory horizon n.
    #[arg(long, value_parser = parse_positive_count)]
    n_max: usize,
    /// Number of equispaced grid times on [0, 1].
    #[arg(long, default_value_t = 1025, value_parser = parse_grid_resolution)]
    grid_resolution: usize,
}

#[derive(Args, Debug)]
struct LdpRateArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Trajectory horizon n.
    #[arg(long, value_parser = parse_positive_count)]
    n_max: usize,
    /// Number of independent trajectories.
    #[arg(long, default_value_t = 10_000, value_parser = parse_positive_count)]
    trials: usize,
    /// Number of histogram bins for the exponent.
    #[arg(long, default_value_t = 40, value_parser = parse_grid_resolution)]
    grid_resolution: usize,
}

#[derive(Args, Debug)]
struct UpsilonArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Trajectory horizon n.
    #[arg(long, value_parser = parse_positive_count)]
    n_max: usize,
    /// Number of independent trajectories.
    #[arg(long, default_value_t = 200, value_parser = parse_positive_count)]
    trials: usize,
    /// Clamp coefficient moduli at 1 - delta.
    #[arg(long)]
    truncate_delta: Option<f64>,
}

#[derive(Args, Debug)]
struct MartingaleArgs {
    #[command(flatten)]
    core: CoreArgs,
    /// Deepest polynomial degree to check.
    #[arg(long, default_value_t = 16, value_parser = parse_positive_count)]
    n_max: usize,
    /// Number of independent trajectories.
    #[arg(long, default_value_t = 100_000, value_parser = parse_positive_count)]
    trials: usize,
    /// Consent to run beyond the heavy-tail depth guard.
    #[arg(long)]
    allow_deep: bool,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Coefficient index to check.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Number of independent draws.
    #[arg(long, default_value_t = 1_000_000, value_parser = parse_positive_count)]
    trials: usize,
}

#[derive(Args, Debug)]
struct BsDensityArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Truncation level n (number of coefficients feeding the density).
    #[arg(long, value_parser = parse_positive_count)]
    n_max: usize,
    /// Number of equispaced angles on the circle.
    #[arg(long, default_value_t = 4096, value_parser = parse_grid_resolution)]
    grid_resolution: usize,
    /// Clamp coefficient moduli at 1 - delta.
    #[arg(long)]
    truncate_delta: Option<f64>,
}

#[derive(Args, Debug)]
struct CmvCheckArgs {
    #[command(flatten)]
    core: CoreArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Matrix size n.
    #[arg(long, value_parser = parse_positive_count)]
    n_max: usize,
}

fn parse_positive_real(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {v}"))
    }
}

fn parse_positive_count(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be at least 1".into())
    }
}

fn parse_grid_resolution(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 3 {
        Ok(v)
    } else {
        Err("grid resolution must be at least 3".into())
    }
}

fn resolve_workers(flag: Option<usize>) -> usize {
    if let Some(w) = flag {
        return w.max(1);
    }
    if let Some(w) = std::env::var("CBETA_OPUC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&w| w > 0)
    {
        return w;
    }
    std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
}

/// The resolved configuration of one run, embedded in JSON artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub beta: f64,
    pub n_max: usize,
    pub trials: usize,
    pub measure: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    pub out_format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncate_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

fn measure_parts(tag: MeasureTag) -> (&'static str, Option<f64>) {
    match tag {
        MeasureTag::Q => ("q", None),
        MeasureTag::Q0 => ("q0", None),
        MeasureTag::QTheta(theta) => ("qtheta", Some(theta)),
    }
}

#[derive(Serialize)]
struct Envelope<D: Serialize> {
    format_version: u32,
    config: RunConfig,
    data: D,
}

fn json_artifact<D: Serialize>(config: RunConfig, data: D) -> Result<Vec<u8>> {
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        config,
        data,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Write the artifact and the one-line summary. With `--out` the summary
/// owns stdout; without it the artifact does and the summary moves to
/// stderr so piped output stays machine-readable.
fn emit(out: &Option<PathBuf>, artifact: &[u8], summary: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, artifact)?;
            println!("{summary}");
        }
        None => {
            std::io::stdout().write_all(artifact)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn ensure_abort_threshold(aborted: usize, trials: usize) -> Result<()> {
    if (aborted as f64) > ABORT_EXIT_FRACTION * trials as f64 {
        return Err(Error::AbortThresholdExceeded { aborted, trials });
    }
    Ok(())
}

fn radial_law(beta: f64, truncate_delta: Option<f64>) -> Result<RadialLaw> {
    let law = RadialLaw::cbeta(beta)?;
    match truncate_delta {
        Some(delta) => law.with_truncation(delta),
        None => Ok(law),
    }
}

/// Parse the process arguments, run the experiment, and map the outcome to
/// the documented exit status: 0 success, 2 validation or I/O failure,
/// 3 abort threshold exceeded.
pub fn run() -> std::process::ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Sample(args) => cmd_sample(args),
        Command::Dimension(args) => cmd_dimension(args),
        Command::LdpPath(args) => cmd_ldp_path(args),
        Command::LdpRate(args) => cmd_ldp_rate(args),
        Command::Upsilon(args) => cmd_upsilon(args),
        Command::Martingale(args) => cmd_martingale(args),
        Command::Moments(args) => cmd_moments(args),
        Command::BsDensity(args) => cmd_bs_density(args),
        Command::CmvCheck(args) => cmd_cmv_check(args),
    }
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let law = radial_law(args.core.beta, args.truncate_delta)?;
    let seq = VerblunskySequence::sample(law, tag, args.n_max, args.core.seed, 0);

    let mut stats = RunningStats::new();
    for c in &seq.coeffs {
        stats.push(c.norm_sqr());
    }
    let summary = format!(
        "sampled {} coefficients under {tag}: mean |alpha|^2 = {:.6} +- {:.6}",
        seq.len(),
        stats.mean(),
        stats.stderr()
    );

    let config = RunConfig {
        command: "sample",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: 1,
        measure,
        theta,
        seed: args.core.seed,
        workers: 1,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: None,
        truncate_delta: args.truncate_delta,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut buf = Vec::new();
            seq.write_csv(&mut buf)?;
            buf
        }
        OutFormat::Json => json_artifact(config, serde_json::json!({ "coeffs": seq.coeffs_json() }))?,
    };
    emit(&args.core.out, &artifact, &summary)
}

fn cmd_dimension(args: DimensionArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let workers = resolve_workers(args.core.workers);
    let report = run_dimension_experiment(&DimensionOptions {
        beta: args.core.beta,
        n_max: args.n_max,
        trials: args.trials,
        measure: tag,
        seed: args.core.seed,
        workers,
        truncate_delta: args.truncate_delta,
    })?;
    ensure_abort_threshold(report.aborts, args.trials)?;

    let scale = (report.trials as f64).sqrt();
    let summary = format!(
        "s0_hat = {:.4} ({}): c = {:.4} +- {:.4}, d = {:.4} +- {:.4}, aborts = {}",
        report.s0_hat,
        if report.s0_interpretable {
            "interpretable"
        } else {
            "not interpretable"
        },
        report.c_mean,
        report.c_sd / scale,
        report.d_mean,
        report.d_sd / scale,
        report.aborts
    );

    let config = RunConfig {
        command: "dimension",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: args.trials,
        measure,
        theta,
        seed: args.core.seed,
        workers,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: None,
        truncate_delta: args.truncate_delta,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut text = String::from(
                "beta,measure,n_max,trials,c_mean,c_sd,d_mean,d_sd,s0_hat,s0_interpretable,aborts,seed\n",
            );
            text.push_str(&format!(
                "{},{tag},{},{},{},{},{},{},{},{},{},{}\n",
                report.beta,
                report.n_max,
                report.trials,
                report.c_mean,
                report.c_sd,
                report.d_mean,
                report.d_sd,
                report.s0_hat,
                report.s0_interpretable,
                report.aborts,
                report.seed
            ));
            text.into_bytes()
        }
        OutFormat::Json => json_artifact(config, &report)?,
    };
    emit(&args.core.out, &artifact, &summary)
}

fn cmd_ldp_path(args: LdpPathArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let resolution = args.grid_resolution;
    let grid: Vec<f64> = (0..resolution)
        .map(|i| i as f64 / (resolution - 1) as f64)
        .collect();
    let path = sample_zn_path(args.n_max, &grid, tag, args.core.beta, args.core.seed, 0)?;
    // The running-maximum functional needs a fine grid; on coarse grids it
    // is reported as absent rather than inaccurate.
    let laplace = laplace_max(&path).ok();

    let summary = format!(
        "Z_n(1) = {:.4}, upsilon = {:.4}, laplace_max = {} (n = {}, {} grid times)",
        path.values.last().copied().unwrap_or(f64::NAN),
        path.upsilon,
        laplace.map_or("n/a".to_string(), |v| format!("{v:.4}")),
        path.n,
        path.times.len()
    );

    let config = RunConfig {
        command: "ldp-path",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: 1,
        measure,
        theta,
        seed: args.core.seed,
        workers: 1,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: Some(resolution),
        truncate_delta: None,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut text = String::from("t,z\n");
            for (t, z) in path.times.iter().zip(&path.values) {
                text.push_str(&format!("{t},{z}\n"));
            }
            text.into_bytes()
        }
        OutFormat::Json => json_artifact(
            config,
            serde_json::json!({ "path": path, "laplace_max": laplace }),
        )?,
    };
    emit(&args.core.out, &artifact, &summary)
}

fn cmd_ldp_rate(args: LdpRateArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let workers = resolve_workers(args.core.workers);
    let report = empirical_rate(&RateCurveOptions {
        beta: args.core.beta,
        measure: tag,
        n_ladder: vec![args.n_max],
        trials: args.trials,
        bins: args.grid_resolution,
        seed: args.core.seed,
        workers,
    })?;
    ensure_abort_threshold(report.aborts, args.trials)?;

    let analytic_zero = match tag {
        MeasureTag::Q => 1.0 + 2.0 / args.core.beta,
        _ => 1.0 - 2.0 / args.core.beta,
    };
    let minimum = rate_curve_minimum(&report.points, 0.4).ok();
    let summary = match minimum {
        Some((vertex, curvature)) => format!(
            "rate minimum at x = {vertex:.4} (curvature {curvature:.3}) vs analytic zero {analytic_zero:.4}; {} bins occupied",
            report.points.len()
        ),
        None => format!(
            "rate minimum fit unavailable ({} bins occupied); analytic zero {analytic_zero:.4}",
            report.points.len()
        ),
    };

    let config = RunConfig {
        command: "ldp-rate",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: args.trials,
        measure,
        theta,
        seed: args.core.seed,
        workers,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: Some(args.grid_resolution),
        truncate_delta: None,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut text = String::from("x,empirical_rate,analytic_rate,n,count\n");
            for p in &report.points {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.x, p.empirical_rate, p.analytic_rate, p.n, p.count
                ));
            }
            text.into_bytes()
        }
        OutFormat::Json => json_artifact(
            config,
            serde_json::json!({
                "curve": report,
                "minimum": minimum.map(|(x, curvature)| {
                    serde_json::json!({ "x": x, "curvature": curvature })
                }),
                "analytic_zero": analytic_zero,
            }),
        )?,
    };
    emit(&args.core.out, &artifact, &summary)
}

fn cmd_upsilon(args: UpsilonArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let workers = resolve_workers(args.core.workers);
    let report = ldp::run_upsilon_experiment(&UpsilonOptions {
        beta: args.core.beta,
        n_max: args.n_max,
        trials: args.trials,
        measure: tag,
        seed: args.core.seed,
        workers,
        truncate_delta: args.truncate_delta,
    })?;
    ensure_abort_threshold(report.aborts, args.trials)?;

    let typical = match tag {
        MeasureTag::Q => 1.0 + 2.0 / args.core.beta,
        _ => 1.0 - 2.0 / args.core.beta,
    };
    let predicted_var = 4.0 / args.core.beta * (args.n_max as f64).ln();
    let summary = format!(
        "upsilon = {:.4} +- {:.4} (typical {typical:.4}); var log|phi|^2 = {:.2} vs {predicted_var:.2} predicted",
        report.mean, report.stderr, report.var_log_norm_sq
    );

    let config = RunConfig {
        command: "upsilon",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: args.trials,
        measure,
        theta,
        seed: args.core.seed,
        workers,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: None,
        truncate_delta: args.truncate_delta,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut text = String::from(
                "beta,measure,n_max,trials,mean,sd,stderr,var_log_norm_sq,aborts,seed\n",
            );
            text.push_str(&format!(
                "{},{tag},{},{},{},{},{},{},{},{}\n",
                report.beta,
                report.n_max,
                report.trials,
                report.mean,
                report.sd,
                report.stderr,
                report.var_log_norm_sq,
                report.aborts,
                report.seed
            ));
            text.into_bytes()
        }
        OutFormat::Json => json_artifact(config, &report)?,
    };
    emit(&args.core.out, &artifact, &summary)
}

fn cmd_martingale(args: MartingaleArgs) -> Result<()> {
    let workers = resolve_workers(args.core.workers);
    let report = martingale_check(&MartingaleOptions {
        beta: args.core.beta,
        n_max: args.n_max,
        trials: args.trials,
        seed: args.core.seed,
        workers,
        allow_deep: args.allow_deep,
    })?;

    let failed = report.rows.iter().filter(|r| !r.pass).count();
    let worst = report
        .rows
        .iter()
        .max_by(|a, b| {
            let za = ((a.mean - 1.0) / a.stderr).abs();
            let zb = ((b.mean - 1.0) / b.stderr).abs();
            za.total_cmp(&zb)
        })
        .expect("depth ladder is non-empty");
    let summary = format!(
        "depths 1..={}: {failed} of {} outside 3 SE; worst mean = {:.5} +- {:.5} at n = {}",
        args.n_max,
        report.rows.len(),
        worst.mean,
        worst.stderr,
        worst.n
    );

    let config = RunConfig {
        command: "martingale",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: args.trials,
        measure: "q",
        theta: None,
        seed: args.core.seed,
        workers,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: None,
        truncate_delta: None,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut text = String::from("n,mean,stderr,pass\n");
            for r in &report.rows {
                text.push_str(&format!("{},{},{},{}\n", r.n, r.mean, r.stderr, r.pass));
            }
            text.into_bytes()
        }
        OutFormat::Json => json_artifact(config, &report)?,
    };
    emit(&args.core.out, &artifact, &summary)
}

/// Raw-law moment rows shaped like the size-biased identity report so both
/// `moments` variants emit the same artifact schema.
#[derive(Serialize)]
struct MomentReport {
    beta: f64,
    k: usize,
    trials: usize,
    rows: Vec<IdentityRow>,
}

fn cmd_moments(args: MomentsArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let workers = resolve_workers(args.core.workers);
    let beta = args.core.beta;
    let k = args.k;

    let report = match tag {
        MeasureTag::Q => {
            RadialLaw::cbeta(beta)?;
            let stats = parallel::chunked_fold(
                args.trials,
                workers,
                || vec![RunningStats::new(); 3],
                |acc, trajectory_id| {
                    let mut rng = stream_rng(args.core.seed, trajectory_id);
                    let alpha = sample_alpha_cbeta(k, beta, &mut rng).expect("beta validated");
                    let sq = alpha.norm_sqr();
                    acc[0].push(sq);
                    acc[1].push(sq * sq);
                    acc[2].push(sq * sq * sq);
                },
                |mut left, right| {
                    for (l, r) in left.iter_mut().zip(&right) {
                        l.merge(r);
                    }
                    left
                },
            );
            let rows = stats
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let power = (i + 1) as u32;
                    let exact = moment_oracle(k, beta, 2 * power).expect("beta validated");
                    let (mean, stderr) = (s.mean(), s.stderr());
                    IdentityRow {
                        name: format!("E|alpha|^{}", 2 * power),
                        empirical: mean,
                        exact,
                        stderr,
                        pass: (mean - exact).abs() <= 3.0 * stderr,
                    }
                })
                .collect();
            MomentReport {
                beta,
                k,
                trials: args.trials,
                rows,
            }
        }
        MeasureTag::Q0 => {
            let identity = q0_identity_check(k, beta, args.trials, args.core.seed, workers)?;
            MomentReport {
                beta: identity.beta,
                k: identity.k,
                trials: identity.trials,
                rows: identity.rows,
            }
        }
        other => {
            return Err(Error::MeasureMismatch {
                expected: "q or q0",
                found: other.to_string(),
            })
        }
    };

    let failed = report.rows.iter().filter(|r| !r.pass).count();
    let first = &report.rows[0];
    let summary = format!(
        "{} = {:.6} +- {:.6} vs oracle {:.6}; {failed} of {} rows outside 3 SE",
        first.name,
        first.empirical,
        first.stderr,
        first.exact,
        report.rows.len()
    );

    let config = RunConfig {
        command: "moments",
        beta,
        n_max: k + 1,
        trials: args.trials,
        measure,
        theta,
        seed: args.core.seed,
        workers,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: None,
        truncate_delta: None,
        k: Some(k),
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut text = String::from("name,empirical,exact,stderr,pass\n");
            for r in &report.rows {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.name, r.empirical, r.exact, r.stderr, r.pass
                ));
            }
            text.into_bytes()
        }
        OutFormat::Json => json_artifact(config, &report)?,
    };
    emit(&args.core.out, &artifact, &summary)
}

fn cmd_bs_density(args: BsDensityArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let law = radial_law(args.core.beta, args.truncate_delta)?;
    let seq = VerblunskySequence::sample(law, tag, args.n_max, args.core.seed, 0);
    let grid = ThetaGrid::equispaced(args.grid_resolution)?;
    let density = bs_density(&seq.coeffs, args.n_max, &grid)?;

    let summary = format!(
        "total mass = {:.6} over {} angles at level {} ({})",
        density.total_mass(),
        density.grid.len(),
        density.level,
        if density.is_well_normalized() {
            "resolved"
        } else {
            "under-resolved"
        }
    );

    let config = RunConfig {
        command: "bs-density",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: 1,
        measure,
        theta,
        seed: args.core.seed,
        workers: 1,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: Some(args.grid_resolution),
        truncate_delta: args.truncate_delta,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => {
            let mut text = String::from("theta,density,cumulative\n");
            for ((t, v), c) in density.grid.iter().zip(&density.values).zip(&density.cumulative)
            {
                text.push_str(&format!("{t},{v},{c}\n"));
            }
            text.into_bytes()
        }
        OutFormat::Json => json_artifact(config, &density)?,
    };
    emit(&args.core.out, &artifact, &summary)
}

fn cmd_cmv_check(args: CmvCheckArgs) -> Result<()> {
    let tag = args.measure.tag()?;
    let (measure, theta) = measure_parts(tag);
    let law = radial_law(args.core.beta, None)?;
    let mut coeffs = VerblunskySequence::sample(law, tag, args.n_max, args.core.seed, 0).coeffs;
    // A finite matrix needs a unimodular terminal coefficient; keep the
    // sampled angle (uniform on the circle) and promote the modulus to 1.
    let last = coeffs.last_mut().expect("n_max >= 1");
    *last = if last.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        *last / last.norm()
    };
    let matrix = build_cmv(&coeffs)?;
    let defect = matrix.unitarity_defect();
    let band_leak = matrix.max_outside_band();

    let summary = format!(
        "unitarity defect = {defect:.3e}, outside-band maximum = {band_leak:.3e} (size {})",
        matrix.size()
    );

    let config = RunConfig {
        command: "cmv-check",
        beta: args.core.beta,
        n_max: args.n_max,
        trials: 1,
        measure,
        theta,
        seed: args.core.seed,
        workers: 1,
        out_format: args.core.out_format.name(),
        out_path: args.core.out.as_ref().map(|p| p.display().to_string()),
        grid_resolution: None,
        truncate_delta: None,
        k: None,
    };
    let artifact = match args.core.out_format {
        OutFormat::Csv => format!(
            "size,unitarity_defect,max_outside_band\n{},{},{}\n",
            matrix.size(),
            defect,
            band_leak
        )
        .into_bytes(),
        OutFormat::Json => json_artifact(
            config,
            serde_json::json!({
                "unitarity_defect": defect,
                "max_outside_band": band_leak,
                "matrix": matrix,
            }),
        )?,
    };
    emit(&args.core.out, &artifact, &summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qtheta_requires_theta_and_rejects_it_elsewhere() {
        let no_theta = MeasureArgs {
            measure: MeasureChoice::Qtheta,
            theta: None,
        };
        assert!(matches!(no_theta.tag(), Err(Error::InvalidParameter(_))));
        let stray_theta = MeasureArgs {
            measure: MeasureChoice::Q,
            theta: Some(0.5),
        };
        assert!(matches!(stray_theta.tag(), Err(Error::InvalidParameter(_))));
        let good = MeasureArgs {
            measure: MeasureChoice::Qtheta,
            theta: Some(0.5),
        };
        assert_eq!(good.tag().unwrap(), MeasureTag::QTheta(0.5));
    }

    #[test]
    fn worker_resolution_prefers_flag_and_floors_at_one() {
        assert_eq!(resolve_workers(Some(3)), 3);
        assert_eq!(resolve_workers(Some(0)), 1);
        assert!(resolve_workers(None) >= 1);
    }

    #[test]
    fn abort_threshold_is_ten_percent() {
        assert!(ensure_abort_threshold(10, 100).is_ok());
        assert!(matches!(
            ensure_abort_threshold(11, 100),
            Err(Error::AbortThresholdExceeded {
                aborted: 11,
                trials: 100
            })
        ));
    }

    #[test]
    fn cli_declaration_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
