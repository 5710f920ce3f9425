use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lmar_core::experiments::{run_experiment_with_threads, theory_report, ExperimentConfig};
use lmar_core::gaussian_sim::sample_noise;
use lmar_core::{generate_x_path, generate_y_path, Ar1Model, CovarianceModel, LmarError, MomentContext, TruncationPolicy};
use serde_json::json;

use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE};
use crate::format::{write_json, write_path_csv, write_records_csv, AggregateFile};
use crate::manifest::{CensoringSummary, RunManifest};
use crate::plots::figures;

/// Caps the number of worker threads used by experiments.
pub const THREADS_ENV: &str = "LMAR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lmar", version, about = "AR(1) with long-memory Gaussian noise: simulation, theory, experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one simulated path as CSV with a JSON manifest.
    Simulate(SimulateArgs),
    /// Report f, f', sigma_H^2, v_n^2, C_H, the d_TV bound and phi(n).
    Theory(TheoryArgs),
    /// Run a Monte Carlo experiment described by a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PathArg {
    /// The driving noise alone.
    Noise,
    /// The AR(1) path started at zero.
    X,
    /// The stationary solution.
    Y,
}

impl PathArg {
    fn as_str(self) -> &'static str {
        match self {
            Self::Noise => "noise",
            Self::X => "x",
            Self::Y => "y",
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// fgn:H, arfima:d or white.
    #[arg(long, value_parser = parse_model)]
    model: CovarianceModel,
    /// Required for x and y paths.
    #[arg(long, value_parser = parse_theta)]
    theta: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "x")]
    kind: PathArg,
    /// CSV destination; the manifest goes next to it as `<stem>.manifest.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[arg(long, value_parser = parse_model)]
    model: CovarianceModel,
    #[arg(long, value_parser = parse_theta)]
    theta: f64,
    /// Comma-separated n values; defaults to 2^0..2^20.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    n_grid: Option<Vec<u64>>,
    /// Exponent slack in the rate curve, in (0, 0.1].
    #[arg(long, default_value_t = 0.01, value_parser = parse_epsilon)]
    epsilon: f64,
    /// JSON destination (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON config with `"schema": 1`.
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_model(s: &str) -> Result<CovarianceModel, String> {
    s.parse().map_err(|e: LmarError| e.to_string())
}

fn parse_theta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("theta must lie in (0, 1), got {v}"))
    }
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 0.1 {
        Ok(v)
    } else {
        Err(format!("epsilon must lie in (0, 0.1], got {v}"))
    }
}

/// Thread cap from `LMAR_THREADS`; `None` when unset.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be an integer >= 1, got `{v}`"))),
        },
        Err(e) => Err(CliError::Usage(format!("{THREADS_ENV}: {e}"))),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Theory(a) => theory(a),
        Command::Experiment(a) => experiment(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            e.exit_code()
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    let n = a.n as usize;
    let model_tag = a.model.tag();
    let path = match a.kind {
        PathArg::Noise => sample_noise(&a.model, n, a.seed)?,
        PathArg::X | PathArg::Y => {
            let theta = a
                .theta
                .ok_or_else(|| CliError::Usage(format!("--theta is required for --kind {}", a.kind.as_str())))?;
            let model = Ar1Model::new(theta, a.model)?;
            if matches!(a.kind, PathArg::X) {
                generate_x_path(&model, n, a.seed)?
            } else {
                generate_y_path(&model, n, a.seed)?
            }
        }
    };
    ensure_parent(&a.out)?;
    write_path_csv(&a.out, &path.values)?;
    let mut manifest = RunManifest::new(
        "simulate",
        json!({
            "model": model_tag,
            "theta": a.theta,
            "n": n,
            "seed": a.seed,
            "kind": a.kind.as_str(),
        }),
    );
    manifest.outputs = vec![file_name(&a.out)];
    manifest.runtime_seconds = start.elapsed().as_secs_f64();
    manifest.write(&manifest_path(&a.out))
}

fn theory(a: TheoryArgs) -> CliResult<()> {
    let start = Instant::now();
    let ns: Vec<usize> = match &a.n_grid {
        Some(v) => v.iter().map(|&n| n as usize).collect(),
        None => (0..=20).map(|j| 1usize << j).collect(),
    };
    let hurst = a.model.hurst();
    let ctx = MomentContext::new(Ar1Model::new(a.theta, a.model)?, TruncationPolicy::default())?;
    let report = theory_report(&ctx, &ns, a.epsilon)?;
    if report.sigma_h2.is_none() {
        return Err(LmarError::UnsupportedRegime {
            hurst: hurst.unwrap_or(f64::NAN),
        }
        .into());
    }
    match &a.out {
        Some(out) => {
            ensure_parent(out)?;
            write_json(out, &report)?;
            let mut manifest = RunManifest::new(
                "theory",
                json!({
                    "model": report.model,
                    "theta": a.theta,
                    "n_grid": ns,
                    "epsilon": a.epsilon,
                }),
            );
            manifest.outputs = vec![file_name(out)];
            manifest.runtime_seconds = start.elapsed().as_secs_f64();
            manifest.write(&manifest_path(out))
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Format(e.to_string()))?);
            Ok(())
        }
    }
}

fn experiment(a: ExperimentArgs) -> CliResult<()> {
    let start = Instant::now();
    let text = fs::read_to_string(&a.config)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", a.config.display())))?;
    let config = ExperimentConfig::from_json(&text)?;
    let threads = threads_from_env()?;
    let result = run_experiment_with_threads(&config, threads)?;

    let dir = &a.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut outputs = Vec::new();
    write_records_csv(&dir.join("records.csv"), &result.records)?;
    outputs.push("records.csv".to_string());
    write_json(&dir.join("aggregates.json"), &AggregateFile::from_result(&result))?;
    outputs.push("aggregates.json".to_string());
    for (name, fig) in figures(&result) {
        let path = dir.join(name);
        fs::write(&path, fig.render()).map_err(|e| CliError::io(&path, e))?;
        outputs.push(name.to_string());
    }

    let mut manifest = RunManifest::new(
        "experiment",
        serde_json::to_value(&config).map_err(|e| CliError::Format(e.to_string()))?,
    );
    manifest.threads = threads;
    manifest.outputs = outputs;
    manifest.censoring = Some(CensoringSummary {
        replicates: result.records.len(),
        censored: result.censored_count(),
        per_n: result
            .aggregates
            .per_n
            .iter()
            .map(|agg| (agg.n, agg.censored))
            .collect(),
    });
    manifest.runtime_seconds = start.elapsed().as_secs_f64();
    manifest.write(&dir.join("manifest.json"))?;
    println!(
        "{} experiment: {} records, {} censored, output in {}",
        config.experiment.as_str(),
        result.records.len(),
        result.censored_count(),
        dir.display()
    );
    Ok(())
}
