//! Seeded Monte Carlo batches.
//!
//! Trial `k` samples from a stream keyed by `trial_seed(base_seed, k)`, so a
//! batch is a pure function of its inputs whatever the thread count.
//! Algorithms only see a [`SampleSource`]; the true means stay on this side
//! and are used to judge correctness, the good event and the complexity
//! bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::{theorem2_bound, ComplexityError, ComplexityReport, DeltaAllocation, Tau};
use crate::confidence::ArmConfidenceState;
use crate::env::{BanditEnv, EnvError};
use crate::extreal::{ExtReal, NegInf};
use crate::microlucb::{run_micro_lucb_with, MicroLucbConfig, MicroLucbError};
use crate::tlucb::{run_with, RunObserver, RunResult, TLucbConfig, TLucbError, DEFAULT_MAX_ROUNDS};
use crate::transfer::TransferFunction;

pub use crate::env::{bernoulli_sample, gaussian_sample, trial_seed, uniform_sample, SampleStream};

/// Absolute slack in the `ε`-optimality check, for roundoff in sums.
pub const CORRECTNESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
    #[error(transparent)]
    Run(#[from] TLucbError),
    #[error(transparent)]
    Micro(MicroLucbError),
    #[error("environment has {env} arms but the transfer function expects {transfer}")]
    ArmCount { env: usize, transfer: usize },
    #[error("n_trials must be at least 1")]
    NoTrials,
    #[error("parallelism must be at least 1")]
    NoThreads,
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

/// A source environment and transfer function.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    env: BanditEnv,
    tf: TransferFunction,
    mu: Vec<f64>,
    nu: Vec<ExtReal>,
}

impl Instance {
    pub fn new(env: BanditEnv, tf: TransferFunction) -> Result<Self, SimError> {
        if env.n_arms() != tf.n_source() {
            return Err(SimError::ArmCount {
                env: env.n_arms(),
                transfer: tf.n_source(),
            });
        }
        let mu = env.means();
        let nu = tf.evaluate(&mu).map_err(ComplexityError::from)?;
        Ok(Self { env, tf, mu, nu })
    }

    pub fn env(&self) -> &BanditEnv {
        &self.env
    }

    pub fn transfer(&self) -> &TransferFunction {
        &self.tf
    }

    pub fn source_means(&self) -> &[f64] {
        &self.mu
    }

    pub fn target_means(&self) -> &[ExtReal] {
        &self.nu
    }

    pub fn best_value(&self) -> ExtReal {
        self.nu.iter().copied().max().unwrap_or(NegInf)
    }

    /// `ν_a + ε + tolerance ≥ max ν`.
    pub fn is_eps_optimal(&self, a: usize, epsilon: f64) -> bool {
        self.nu[a].shift(epsilon + CORRECTNESS_TOLERANCE) >= self.best_value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Algorithm {
    Tlucb,
    Microlucb { scale_shift: Vec<(f64, f64)> },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Tlucb => "tlucb",
            Algorithm::Microlucb { .. } => "microlucb",
        }
    }
}

/// Per-run parameters shared by every trial of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub delta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub max_rounds: u64,
}

impl RunSettings {
    pub fn new(delta: f64, epsilon: f64, sigma: f64) -> Self {
        Self {
            delta,
            epsilon,
            sigma,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }

    fn tlucb(&self, seed: u64) -> TLucbConfig {
        TLucbConfig {
            delta: self.delta,
            epsilon: self.epsilon,
            sigma: self.sigma,
            max_rounds: self.max_rounds,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Stopped,
    Capped,
    EmptyDtilde,
}

/// One trial. `selected` is `None` only for `EmptyDtilde`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub selected: Option<usize>,
    pub correct: bool,
    pub rounds: u64,
    pub total_pulls: u64,
    pub per_arm_pulls: Vec<u64>,
    pub good_event_held: bool,
    pub bound_held: bool,
}

/// Aggregates over a batch. Pull statistics exclude `EmptyDtilde` trials
/// and are `None` when no trial remains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatchResult {
    pub algorithm: String,
    pub n_trials: u64,
    pub base_seed: u64,
    /// Stopped with a non-`ε`-optimal target, or hit the round cap.
    pub error_count: u64,
    pub capped_count: u64,
    pub empty_dtilde_count: u64,
    pub good_event_violations: u64,
    /// Trials with `Σ N_i > theorem2_total + n_source`.
    pub bound_violation_count: u64,
    pub theorem2_total: Tau,
    pub mean_total_pulls: Option<f64>,
    pub median_total_pulls: Option<f64>,
    pub p95_total_pulls: Option<f64>,
    pub mean_per_arm_pulls: Option<Vec<f64>>,
    pub mean_rounds: Option<f64>,
}

impl TrialBatchResult {
    pub fn error_rate(&self) -> f64 {
        self.error_count as f64 / self.n_trials as f64
    }

    pub fn good_event_violation_rate(&self) -> f64 {
        self.good_event_violations as f64 / self.n_trials as f64
    }

    pub fn bound_violation_rate(&self) -> f64 {
        self.bound_violation_count as f64 / self.n_trials as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub summary: TrialBatchResult,
    pub trials: Vec<TrialRecord>,
    pub complexity: ComplexityReport,
}

struct CoverageWatch<'a> {
    mu: &'a [f64],
    held: bool,
}

impl RunObserver for CoverageWatch<'_> {
    fn on_update(&mut self, arm: usize, state: &ArmConfidenceState) {
        if !state.interval().contains(ExtReal::from_f64(self.mu[arm])) {
            self.held = false;
        }
    }
}

fn run_trial(
    instance: &Instance,
    algorithm: &Algorithm,
    settings: &RunSettings,
    bound: Tau,
    trial_index: u64,
    seed: u64,
) -> Result<TrialRecord, SimError> {
    let mut sampler = instance.env.sampler(seed);
    let mut watch = CoverageWatch {
        mu: &instance.mu,
        held: true,
    };
    let cfg = settings.tlucb(seed);
    let result: Result<RunResult, Option<SimError>> = match algorithm {
        Algorithm::Tlucb => run_with(&mut sampler, &instance.tf, &cfg, &mut watch).map_err(|e| Some(e.into())),
        Algorithm::Microlucb { scale_shift } => {
            let mcfg = MicroLucbConfig::new(cfg, scale_shift.clone());
            run_micro_lucb_with(&mut sampler, &instance.tf, &mcfg, &mut watch).map_err(|e| match e {
                MicroLucbError::EmptyDtilde { .. } => None,
                other => Some(SimError::Micro(other)),
            })
        }
    };
    let n = instance.tf.n_source() as u64;
    Ok(match result {
        Ok(r) => {
            let outcome = if r.stopped_by_cap {
                TrialOutcome::Capped
            } else {
                TrialOutcome::Stopped
            };
            TrialRecord {
                trial_index,
                seed,
                outcome,
                selected: Some(r.selected),
                correct: !r.stopped_by_cap && instance.is_eps_optimal(r.selected, settings.epsilon),
                rounds: r.rounds,
                total_pulls: r.total_pulls,
                good_event_held: watch.held,
                bound_held: bound.finite().is_none_or(|b| r.total_pulls <= b.saturating_add(n)),
                per_arm_pulls: r.per_arm_pulls,
            }
        }
        Err(Some(e)) => return Err(e),
        Err(None) => TrialRecord {
            trial_index,
            seed,
            outcome: TrialOutcome::EmptyDtilde,
            selected: None,
            correct: false,
            rounds: 0,
            total_pulls: 0,
            per_arm_pulls: vec![0; instance.tf.n_source()],
            good_event_held: watch.held,
            bound_held: true,
        },
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median of sorted values.
fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
    }
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Folds trial records, in index order, into batch statistics.
pub fn summarize(algorithm: &Algorithm, base_seed: u64, theorem2_total: Tau, trials: &[TrialRecord]) -> TrialBatchResult {
    let count = |pred: &dyn Fn(&TrialRecord) -> bool| trials.iter().filter(|t| pred(t)).count() as u64;
    let ran: Vec<&TrialRecord> = trials.iter().filter(|t| t.outcome != TrialOutcome::EmptyDtilde).collect();
    let (mean_total, median_total, p95_total, per_arm, rounds) = if ran.is_empty() {
        (None, None, None, None, None)
    } else {
        let mut totals: Vec<f64> = ran.iter().map(|t| t.total_pulls as f64).collect();
        let mean_total = mean(&totals);
        totals.sort_by(f64::total_cmp);
        let n_arms = ran[0].per_arm_pulls.len();
        let per_arm: Vec<f64> = (0..n_arms)
            .map(|i| mean(&ran.iter().map(|t| t.per_arm_pulls[i] as f64).collect::<Vec<_>>()))
            .collect();
        let rounds = mean(&ran.iter().map(|t| t.rounds as f64).collect::<Vec<_>>());
        (
            Some(mean_total),
            Some(median(&totals)),
            Some(percentile(&totals, 0.95)),
            Some(per_arm),
            Some(rounds),
        )
    };
    TrialBatchResult {
        algorithm: algorithm.name().to_owned(),
        n_trials: trials.len() as u64,
        base_seed,
        error_count: count(&|t| t.outcome != TrialOutcome::EmptyDtilde && !t.correct),
        capped_count: count(&|t| t.outcome == TrialOutcome::Capped),
        empty_dtilde_count: count(&|t| t.outcome == TrialOutcome::EmptyDtilde),
        good_event_violations: count(&|t| !t.good_event_held),
        bound_violation_count: count(&|t| !t.bound_held),
        theorem2_total,
        mean_total_pulls: mean_total,
        median_total_pulls: median_total,
        p95_total_pulls: p95_total,
        mean_per_arm_pulls: per_arm,
        mean_rounds: rounds,
    }
}

/// Runs `n_trials` independent trials on `parallelism` threads.
pub fn run_batch(
    instance: &Instance,
    algorithm: &Algorithm,
    settings: &RunSettings,
    n_trials: u64,
    base_seed: u64,
    parallelism: usize,
) -> Result<BatchOutput, SimError> {
    if n_trials == 0 {
        return Err(SimError::NoTrials);
    }
    if parallelism == 0 {
        return Err(SimError::NoThreads);
    }
    instance.env.check_sub_gaussian(settings.sigma)?;
    let complexity = theorem2_bound(
        &instance.tf,
        &instance.mu,
        settings.epsilon,
        settings.delta,
        settings.sigma,
        DeltaAllocation::PerArm,
    )?;
    let bound = complexity.theorem2_total;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    let trials: Vec<TrialRecord> = pool.install(|| {
        (0..n_trials)
            .into_par_iter()
            .map(|k| run_trial(instance, algorithm, settings, bound, k, trial_seed(base_seed, k)))
            .collect::<Result<_, _>>()
    })?;
    let summary = summarize(algorithm, base_seed, bound, &trials);
    Ok(BatchOutput {
        summary,
        trials,
        complexity,
    })
}

/// Fixed CSV header for `n` source arms.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["trial_index", "seed", "selected", "correct", "rounds", "total_pulls"]
        .map(String::from)
        .to_vec();
    h.extend((1..=n).map(|i| format!("N_{i}")));
    h.extend(["good_event_held", "bound_held"].map(String::from));
    h
}

/// Writes trial rows as CSV. `selected` is the target label, empty when
/// the run had no valid sampling choice.
pub fn write_trials_csv<W: std::io::Write>(out: W, tf: &TransferFunction, trials: &[TrialRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(tf.n_source()))?;
    for t in trials {
        let mut row = vec![
            t.trial_index.to_string(),
            t.seed.to_string(),
            t.selected.map(|a| tf.label(a).to_owned()).unwrap_or_default(),
            t.correct.to_string(),
            t.rounds.to_string(),
            t.total_pulls.to_string(),
        ];
        row.extend(t.per_arm_pulls.iter().map(u64::to_string));
        row.extend([t.good_event_held.to_string(), t.bound_held.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a side-by-side algorithm comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub base_seed: u64,
    pub n_trials: u64,
    pub error_rate: f64,
    pub error_count: u64,
    pub empty_dtilde_count: u64,
    pub capped_count: u64,
    pub mean_total_pulls: Option<f64>,
    pub median_total_pulls: Option<f64>,
    pub p95_total_pulls: Option<f64>,
}

impl From<&TrialBatchResult> for ComparisonRow {
    fn from(b: &TrialBatchResult) -> Self {
        Self {
            algorithm: b.algorithm.clone(),
            base_seed: b.base_seed,
            n_trials: b.n_trials,
            error_rate: b.error_rate(),
            error_count: b.error_count,
            empty_dtilde_count: b.empty_dtilde_count,
            capped_count: b.capped_count,
            mean_total_pulls: b.mean_total_pulls,
            median_total_pulls: b.median_total_pulls,
            p95_total_pulls: b.p95_total_pulls,
        }
    }
}

/// Runs T-LUCB and Micro-LUCB on the same seeds.
pub fn compare(
    instance: &Instance,
    scale_shift: Vec<(f64, f64)>,
    settings: &RunSettings,
    n_trials: u64,
    base_seed: u64,
    parallelism: usize,
) -> Result<Vec<ComparisonRow>, SimError> {
    [Algorithm::Tlucb, Algorithm::Microlucb { scale_shift }]
        .iter()
        .map(|alg| run_batch(instance, alg, settings, n_trials, base_seed, parallelism).map(|b| ComparisonRow::from(&b.summary)))
        .collect()
}
