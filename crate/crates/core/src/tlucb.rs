//! Additive Transfer LUCB.
//!
//! After one pull of every source arm, each round
//!
//! 1. builds target intervals from the source confidence sequences,
//! 2. picks the leader `B` (largest target LCB) and challenger `C`
//!    (largest UCB among the other targets),
//! 3. stops and returns `B` when `LCB(B) + ε ≥ UCB(C)`,
//! 4. otherwise pulls the source arm contributing the most width to `B`
//!    and the one contributing most to `C` (possibly the same arm twice).
//!
//! Every argmax breaks ties toward the lowest index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidence::{ArmConfidenceState, BoundaryParams, ConfidenceError, SourceConfidence};
use crate::env::{BanditEnv, SampleSource};
use crate::extreal::{ExtInterval, ExtReal};
use crate::transfer::{TransferError, TransferFunction};

pub const DEFAULT_MAX_ROUNDS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TLucbError {
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("need at least two target arms, got {0}")]
    TooFewTargets(usize),
    #[error("epsilon must be finite and non-negative, got {0}")]
    Epsilon(f64),
    #[error("sampler has {sampler} arms but the transfer function expects {transfer}")]
    ArmCount { sampler: usize, transfer: usize },
    #[error("max_rounds must be positive")]
    ZeroRounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TLucbConfig {
    pub delta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub max_rounds: u64,
    pub seed: u64,
}

impl TLucbConfig {
    pub fn new(delta: f64, epsilon: f64, sigma: f64) -> Self {
        Self {
            delta,
            epsilon,
            sigma,
            max_rounds: DEFAULT_MAX_ROUNDS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub(crate) fn validate(&self, tf: &TransferFunction) -> Result<BoundaryParams, TLucbError> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(TLucbError::Epsilon(self.epsilon));
        }
        if self.max_rounds == 0 {
            return Err(TLucbError::ZeroRounds);
        }
        if tf.n_target() < 2 {
            return Err(TLucbError::TooFewTargets(tf.n_target()));
        }
        Ok(BoundaryParams::new(self.sigma, self.delta, tf.n_source())?)
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    /// Loop iterations after the initial pulls.
    pub rounds: u64,
    pub total_pulls: u64,
    pub per_arm_pulls: Vec<u64>,
    /// Target index returned (the current leader when capped).
    pub selected: usize,
    pub stopped_by_cap: bool,
}

/// Per-round decisions, reported to a [`RunObserver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundTrace {
    pub round: u64,
    pub leader: usize,
    pub challenger: usize,
    pub leader_source: usize,
    pub challenger_source: usize,
}

/// Hooks for instrumentation. The harness uses them to check the good
/// event, which needs the true means the algorithm never sees.
pub trait RunObserver {
    fn on_update(&mut self, _arm: usize, _state: &ArmConfidenceState) {}
    fn on_round(&mut self, _trace: &RoundTrace) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl RunObserver for NoObserver {}

fn argmax_lowest<I: IntoIterator<Item = (usize, ExtReal)>>(items: I) -> Option<usize> {
    let mut best: Option<(usize, ExtReal)> = None;
    for (k, v) in items {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// Leader `B` (max LCB) and challenger `C` (max UCB over targets ≠ B).
pub fn select_candidates(target_cis: &[ExtInterval]) -> Result<(usize, usize), TLucbError> {
    if target_cis.len() < 2 {
        return Err(TLucbError::TooFewTargets(target_cis.len()));
    }
    let leader = argmax_lowest(target_cis.iter().map(ExtInterval::lo).enumerate()).expect("non-empty");
    let challenger =
        argmax_lowest(target_cis.iter().map(ExtInterval::hi).enumerate().filter(|&(a, _)| a != leader)).expect("at least two targets");
    Ok((leader, challenger))
}

/// `LCB(B) + ε ≥ UCB(C)`, with `−∞ + ε = −∞`.
pub fn should_stop(target_cis: &[ExtInterval], leader: usize, challenger: usize, epsilon: f64) -> bool {
    target_cis[leader].lo().shift(epsilon) >= target_cis[challenger].hi()
}

/// Source arm with the largest uncertainty length for target `a`.
pub fn widest_source(tf: &TransferFunction, a: usize, source_cis: &[ExtInterval]) -> usize {
    argmax_lowest(tf.row(a).iter().zip(source_cis).map(|(f, ci)| f.image_length(ci)).enumerate()).expect("at least one source")
}

/// `(I, J)`: widest sources for the leader and the challenger.
pub fn select_sources(tf: &TransferFunction, leader: usize, challenger: usize, source_cis: &[ExtInterval]) -> (usize, usize) {
    (widest_source(tf, leader, source_cis), widest_source(tf, challenger, source_cis))
}

/// Runs on a seeded sampler of `env`.
pub fn run(env: &BanditEnv, tf: &TransferFunction, cfg: &TLucbConfig) -> Result<RunResult, TLucbError> {
    run_with(&mut env.sampler(cfg.seed), tf, cfg, &mut NoObserver)
}

pub(crate) fn pull<S: SampleSource, O: RunObserver>(
    source: &mut S,
    cs: &mut SourceConfidence,
    arm: usize,
    observer: &mut O,
) -> Result<(), TLucbError> {
    let x = source.sample(arm);
    cs.update(arm, x)?;
    observer.on_update(arm, cs.arm(arm));
    Ok(())
}

pub(crate) fn finish(cs: &SourceConfidence, rounds: u64, selected: usize, stopped_by_cap: bool) -> RunResult {
    let per_arm_pulls = cs.pulls();
    RunResult {
        rounds,
        total_pulls: per_arm_pulls.iter().sum(),
        per_arm_pulls,
        selected,
        stopped_by_cap,
    }
}

/// Runs against any sample source, reporting to `observer`.
pub fn run_with<S: SampleSource, O: RunObserver>(
    source: &mut S,
    tf: &TransferFunction,
    cfg: &TLucbConfig,
    observer: &mut O,
) -> Result<RunResult, TLucbError> {
    let params = cfg.validate(tf)?;
    if source.n_arms() != tf.n_source() {
        return Err(TLucbError::ArmCount {
            sampler: source.n_arms(),
            transfer: tf.n_source(),
        });
    }
    let mut cs = SourceConfidence::new(&params);
    for arm in 0..tf.n_source() {
        pull(source, &mut cs, arm, observer)?;
    }

    let mut rounds = 0u64;
    loop {
        let source_cis = cs.intervals();
        let target_cis = tf.target_bounds(&source_cis)?;
        let (leader, challenger) = select_candidates(&target_cis)?;
        if should_stop(&target_cis, leader, challenger, cfg.epsilon) {
            return Ok(finish(&cs, rounds, leader, false));
        }
        if rounds == cfg.max_rounds {
            return Ok(finish(&cs, rounds, leader, true));
        }
        let (i, j) = select_sources(tf, leader, challenger, &source_cis);
        rounds += 1;
        observer.on_round(&RoundTrace {
            round: rounds,
            leader,
            challenger,
            leader_source: i,
            challenger_source: j,
        });
        pull(source, &mut cs, i, observer)?;
        pull(source, &mut cs, j, observer)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extreal::{NegInf, PosInf};
    use crate::transfer::{ComponentFunction, PropertySet};

    fn fin(x: f64) -> ExtReal {
        ExtReal::from_f64(x)
    }

    fn identity(n: usize) -> TransferFunction {
        let m: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|i| f64::from(u8::from(a == i))).collect()).collect();
        TransferFunction::from_matrix(&m).unwrap()
    }

    #[test]
    fn candidates_strict_dominance() {
        let cis = [ExtInterval::finite(0.8, 0.9), ExtInterval::finite(0.1, 0.3)];
        assert_eq!(select_candidates(&cis).unwrap(), (0, 1));
    }

    #[test]
    fn candidates_tie_breaks() {
        let cis = [
            ExtInterval::new(NegInf, fin(2.0)).unwrap(),
            ExtInterval::new(NegInf, fin(2.0)).unwrap(),
            ExtInterval::finite(0.0, 1.0),
        ];
        assert_eq!(select_candidates(&cis).unwrap(), (2, 0));
        let same = [ExtInterval::finite(0.0, 1.0); 4];
        assert_eq!(select_candidates(&same).unwrap(), (0, 1));
        assert_eq!(select_candidates(&same[..1]), Err(TLucbError::TooFewTargets(1)));
    }

    #[test]
    fn stopping_rule() {
        let cis = [ExtInterval::finite(0.8, 1.0), ExtInterval::finite(0.0, 0.3)];
        assert!(should_stop(&cis, 0, 1, 0.0));
        let close = [ExtInterval::finite(0.2, 1.0), ExtInterval::finite(0.0, 0.5)];
        assert!(should_stop(&close, 0, 1, 0.3));
        assert!(!should_stop(&close, 0, 1, 0.29));
        let open = [ExtInterval::new(NegInf, fin(1.0)).unwrap(), ExtInterval::finite(-5.0, -4.0)];
        assert!(!should_stop(&open, 0, 1, 1e9));
    }

    #[test]
    fn source_selection() {
        let tf = TransferFunction::from_matrix(&[vec![1.0, 10.0], vec![1.0, 0.0]]).unwrap();
        let cis = [ExtInterval::finite(0.0, 0.5), ExtInterval::finite(1.0, 1.5)];
        assert_eq!(select_sources(&tf, 0, 1, &cis), (1, 0));

        let ind = || ComponentFunction::indicator(PropertySet::above(0.0));
        let tf = TransferFunction::new(vec![
            vec![ind(), ind(), ind()],
            vec![ComponentFunction::Zero, ComponentFunction::Zero, ComponentFunction::Zero],
        ])
        .unwrap();
        let cis = [
            ExtInterval::finite(0.2, 0.4),
            ExtInterval::finite(-0.4, -0.2),
            ExtInterval::finite(-0.1, 0.1),
        ];
        assert_eq!(widest_source(&tf, 0, &cis), 2);
        assert_eq!(widest_source(&tf, 1, &cis), 0);
        assert_eq!(tf.uncertainty_length(0, 2, &cis[2]).unwrap(), PosInf);
    }

    #[test]
    fn rejects_single_target_and_bad_epsilon() {
        let env = BanditEnv::gaussian(&[0.0, 1.0], 1.0).unwrap();
        let one = TransferFunction::from_matrix(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(run(&env, &one, &TLucbConfig::new(0.1, 0.0, 1.0)), Err(TLucbError::TooFewTargets(1)));
        assert_eq!(
            run(&env, &identity(2), &TLucbConfig::new(0.1, -1.0, 1.0)),
            Err(TLucbError::Epsilon(-1.0))
        );
        assert!(matches!(
            run(&env, &identity(2), &TLucbConfig::new(1.5, 0.0, 1.0)),
            Err(TLucbError::Confidence(_))
        ));
        assert!(matches!(
            run(&env, &identity(3), &TLucbConfig::new(0.1, 0.0, 1.0)),
            Err(TLucbError::ArmCount { .. })
        ));
    }

    #[test]
    fn pull_accounting_and_determinism() {
        let env = BanditEnv::gaussian(&[1.0, 0.0, 0.2], 1.0).unwrap();
        let cfg = TLucbConfig::new(0.1, 0.0, 1.0).with_seed(99);
        let r = run(&env, &identity(3), &cfg).unwrap();
        assert!(!r.stopped_by_cap);
        assert_eq!(r.total_pulls, 3 + 2 * r.rounds);
        assert_eq!(r.per_arm_pulls.iter().sum::<u64>(), r.total_pulls);
        assert_eq!(r, run(&env, &identity(3), &cfg).unwrap());
    }

    #[test]
    fn equal_means_with_slack_stop() {
        let env = BanditEnv::gaussian(&[0.5, 0.5], 1.0).unwrap();
        let tf = TransferFunction::from_matrix(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let r = run(&env, &tf, &TLucbConfig::new(0.1, 0.5, 1.0).with_seed(3)).unwrap();
        assert!(!r.stopped_by_cap);
        assert!(r.selected < 2);
    }

    #[test]
    fn cap_is_reported() {
        // identical rows with ε = 0 never separate
        let env = BanditEnv::gaussian(&[0.5, 0.5], 1.0).unwrap();
        let tf = TransferFunction::from_matrix(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let r = run(&env, &tf, &TLucbConfig::new(0.1, 0.0, 1.0).with_max_rounds(50)).unwrap();
        assert!(r.stopped_by_cap);
        assert_eq!(r.rounds, 50);
        assert_eq!(r.total_pulls, 2 + 100);
    }

    struct Trace(Vec<RoundTrace>);

    impl RunObserver for Trace {
        fn on_round(&mut self, t: &RoundTrace) {
            self.0.push(*t);
        }
    }

    #[test]
    fn identity_transfer_pulls_leader_and_challenger() {
        let env = BanditEnv::gaussian(&[1.0, 0.6, 0.4, 0.0], 1.0).unwrap();
        for seed in 0..20 {
            let mut trace = Trace(Vec::new());
            let cfg = TLucbConfig::new(0.1, 0.0, 1.0).with_seed(seed);
            run_with(&mut env.sampler(seed), &identity(4), &cfg, &mut trace).unwrap();
            for t in &trace.0 {
                assert_eq!(t.leader_source, t.leader);
                assert_eq!(t.challenger_source, t.challenger);
            }
        }
    }
}
