//! The `tbai` command line.
//!
//! Exit codes: `0` on completion (whatever the error rate), `2` for invalid
//! arguments or configuration, `3` for runtime failures.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::complexity::{corollary_bounds, theorem2_bound, ComplexityReport, DeltaAllocation, Tau};
use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::sim::{compare, run_batch, write_trials_csv, ComparisonRow, TrialBatchResult};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Output directory used when neither `--out` nor `[output] dir` is given.
pub const OUT_DIR_ENV: &str = "TBAI_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "tbai-out";

#[derive(Debug, Parser)]
#[command(name = "tbai", version, about = "Best-arm identification under additive transfer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo batch and write summary.json and trials.csv.
    Run(CommonArgs),
    /// Print the complexity report without running trials.
    Bounds(BoundsArgs),
    /// Run T-LUCB and Micro-LUCB on the same seeds and tabulate both.
    Compare(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces `experiment.base_seed`.
    #[arg(long)]
    pub seed_override: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Use the undivided `δ` in the boundary instead of `δ / (2n)`.
    #[arg(long)]
    pub raw_delta: bool,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli.command, stdout) {
        Ok(()) => 0,
        Err(Failure::Config(e)) => {
            eprint!("{e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(command: &Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Run(args) => cmd_run(args, stdout),
        Command::Bounds(args) => cmd_bounds(args, stdout),
        Command::Compare(args) => cmd_compare(args, stdout),
    }
}

fn load(args: &CommonArgs) -> Result<(Experiment, PathBuf), Failure> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed_override {
        cfg.experiment.base_seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.experiment.n_trials = trials;
    }
    if let Some(p) = args.parallelism {
        cfg.experiment.parallelism = p;
    }
    let exp = cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| exp.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok((exp, out))
}

/// Complexity report with the preset's closed forms attached.
pub fn complexity_report(exp: &Experiment, allocation: DeltaAllocation) -> anyhow::Result<ComplexityReport> {
    let mu = exp.instance.source_means();
    let s = &exp.settings;
    let report = theorem2_bound(exp.instance.transfer(), mu, s.epsilon, s.delta, s.sigma, allocation)?;
    let mut bounds = Vec::new();
    for h in &exp.hardness {
        bounds.extend(corollary_bounds(h, mu)?);
    }
    Ok(report.with_closed_form(bounds))
}

#[derive(Serialize)]
struct SelectionCount<'a> {
    label: &'a str,
    count: u64,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    algorithm: &'a str,
    n_trials: u64,
    base_seed: u64,
    error_rate: f64,
    good_event_violation_rate: f64,
    bound_violation_rate: f64,
    mean_total_pulls: Option<f64>,
    theorem2_total: Tau,
    target_labels: &'a [String],
    selections: Vec<SelectionCount<'a>>,
    batch: &'a TrialBatchResult,
    complexity: &'a ComplexityReport,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(args: &CommonArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (exp, out) = load(args)?;
    let complexity = complexity_report(&exp, DeltaAllocation::PerArm)?;
    let batch = run_batch(
        &exp.instance,
        &exp.algorithm,
        &exp.settings,
        exp.n_trials,
        exp.base_seed,
        exp.parallelism,
    )
    .context("running batch")?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let tf = exp.instance.transfer();
    let selections = (0..tf.n_target())
        .map(|a| SelectionCount {
            label: tf.label(a),
            count: batch.trials.iter().filter(|t| t.selected == Some(a)).count() as u64,
        })
        .collect();
    let b = &batch.summary;
    let summary = RunSummary {
        algorithm: &b.algorithm,
        n_trials: b.n_trials,
        base_seed: b.base_seed,
        error_rate: b.error_rate(),
        good_event_violation_rate: b.good_event_violation_rate(),
        bound_violation_rate: b.bound_violation_rate(),
        mean_total_pulls: b.mean_total_pulls,
        theorem2_total: complexity.theorem2_total,
        target_labels: tf.labels(),
        selections,
        batch: b,
        complexity: &complexity,
    };
    write_json(&out.join("summary.json"), &summary)?;
    let csv_path = out.join("trials.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_trials_csv(file, tf, &batch.trials).context("writing trials.csv")?;

    writeln!(
        stdout,
        "{}: {} trials, error rate {:.4}, mean pulls {}, bound {} -> {}",
        b.algorithm,
        b.n_trials,
        b.error_rate(),
        b.mean_total_pulls.map_or("n/a".to_owned(), |m| format!("{m:.1}")),
        complexity.theorem2_total,
        out.display()
    )
    .context("writing to stdout")?;
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let exp = ExperimentConfig::load(&args.config)?.validate()?;
    let allocation = if args.raw_delta {
        DeltaAllocation::Raw
    } else {
        DeltaAllocation::PerArm
    };
    let report = complexity_report(&exp, allocation)?;
    let text = serde_json::to_string_pretty(&report).context("serializing report")?;
    writeln!(stdout, "{text}").context("writing to stdout")?;
    Ok(())
}

/// `{:.16e}`: 17 significant digits, round-trip exact.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub const COMPARE_COLUMNS: [&str; 10] = [
    "algorithm",
    "base_seed",
    "n_trials",
    "error_rate",
    "error_count",
    "empty_dtilde_count",
    "capped_count",
    "mean_total_pulls",
    "median_total_pulls",
    "p95_total_pulls",
];

fn write_compare_csv(path: &Path, rows: &[ComparisonRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(COMPARE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.base_seed.to_string(),
            r.n_trials.to_string(),
            format_float(r.error_rate),
            r.error_count.to_string(),
            r.empty_dtilde_count.to_string(),
            r.capped_count.to_string(),
            opt_float(r.mean_total_pulls),
            opt_float(r.median_total_pulls),
            opt_float(r.p95_total_pulls),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_compare(args: &CommonArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (exp, out) = load(args)?;
    let rows = compare(
        &exp.instance,
        exp.scale_shift.clone(),
        &exp.settings,
        exp.n_trials,
        exp.base_seed,
        exp.parallelism,
    )
    .context("running comparison")?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join("compare.json"), &rows)?;
    write_compare_csv(&out.join("compare.csv"), &rows)?;

    let fmt_opt = |x: Option<f64>| x.map_or("n/a".to_owned(), |v| format!("{v:.1}"));
    let mut table = format!(
        "{:<10} {:>10} {:>8} {:>10} {:>12} {:>8} {:>12} {:>10} {:>10}\n",
        "algorithm", "base_seed", "trials", "error_rate", "empty_dtilde", "capped", "mean_pulls", "median", "p95"
    );
    for r in &rows {
        table.push_str(&format!(
            "{:<10} {:>10} {:>8} {:>10.4} {:>12} {:>8} {:>12} {:>10} {:>10}\n",
            r.algorithm,
            r.base_seed,
            r.n_trials,
            r.error_rate,
            r.empty_dtilde_count,
            r.capped_count,
            fmt_opt(r.mean_total_pulls),
            fmt_opt(r.median_total_pulls),
            fmt_opt(r.p95_total_pulls)
        ));
    }
    stdout.write_all(table.as_bytes()).context("writing to stdout")?;
    Ok(())
}
