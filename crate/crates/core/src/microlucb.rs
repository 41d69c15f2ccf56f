//! Modified Micro-LUCB, the baseline for linear transfer.
//!
//! Sampling is restricted to the set `D̃(a, u, v)` of source arms whose
//! scaled and shifted interval `[a_i·u_i + b_i, a_i·v_i + b_i]` contains the
//! image of the source box `[u, v]` under target `a`. When that set is empty
//! the sampling rule is undefined and the run fails with
//! [`MicroLucbError::EmptyDtilde`]. Only transfers with at most one nonzero
//! coefficient per row avoid this in general.
//!
//! Unlike T-LUCB, the stopping rule is checked after the round's samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{BanditEnv, SampleSource};
use crate::extreal::{ExtInterval, ExtReal};
use crate::tlucb::{finish, pull, select_candidates, NoObserver, RoundTrace, RunObserver, RunResult, TLucbConfig, TLucbError};
use crate::transfer::{component_interval_image, TransferFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MicroLucbError {
    #[error(transparent)]
    Run(#[from] TLucbError),
    /// Rounds are 1-based; `target` is 0-based.
    #[error("sampling set is empty for target {target} in round {round}")]
    EmptyDtilde { round: u64, target: usize },
    #[error("expected {expected} scale/shift pairs, got {got}")]
    ScaleShiftCount { expected: usize, got: usize },
    #[error("scale a_{index} must be positive and finite, got {value}")]
    Scale { index: usize, value: f64 },
    #[error("shift b_{index} must be finite, got {value}")]
    Shift { index: usize, value: f64 },
    #[error("source box must be finite with lcb <= ucb")]
    BadBox,
    #[error("matrix entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroLucbConfig {
    #[serde(flatten)]
    pub base: TLucbConfig,
    /// `(a_i, b_i)` per source arm.
    pub scale_shift: Vec<(f64, f64)>,
}

impl MicroLucbConfig {
    pub fn new(base: TLucbConfig, scale_shift: Vec<(f64, f64)>) -> Self {
        Self { base, scale_shift }
    }

    /// `a_i = 1, b_i = 0` for every source.
    pub fn unit(base: TLucbConfig, n_source: usize) -> Self {
        Self::new(base, vec![(1.0, 0.0); n_source])
    }

    pub fn validate_scale_shift(&self, n_source: usize) -> Result<(), MicroLucbError> {
        validate_scale_shift(&self.scale_shift, n_source)
    }
}

pub fn validate_scale_shift(scale_shift: &[(f64, f64)], n_source: usize) -> Result<(), MicroLucbError> {
    if scale_shift.len() != n_source {
        return Err(MicroLucbError::ScaleShiftCount {
            expected: n_source,
            got: scale_shift.len(),
        });
    }
    for (index, &(a, b)) in scale_shift.iter().enumerate() {
        if !(a > 0.0 && a.is_finite()) {
            return Err(MicroLucbError::Scale { index, value: a });
        }
        if !b.is_finite() {
            return Err(MicroLucbError::Shift { index, value: b });
        }
    }
    Ok(())
}

/// Image of the box `[lcb, ucb]` under target `a`: sums of component minima
/// and maxima.
fn box_image(tf: &TransferFunction, a: usize, boxes: &[ExtInterval]) -> ExtInterval {
    let (lo, hi) = tf
        .row(a)
        .iter()
        .zip(boxes)
        .fold((ExtReal::ZERO, ExtReal::ZERO), |(lo, hi), (f, b)| {
            let img = component_interval_image(f, b).expect("finite box");
            (lo.add_lower(img.lo()), hi.add_upper(img.hi()))
        });
    ExtInterval::new(lo, hi).expect("ordered")
}

/// Source indices `i` with `image_a([u, v]) ⊆ [a_i·u_i + b_i, a_i·v_i + b_i]`,
/// in increasing order.
pub fn dtilde_set(
    tf: &TransferFunction,
    a: usize,
    lcb: &[f64],
    ucb: &[f64],
    scale_shift: &[(f64, f64)],
) -> Result<Vec<usize>, MicroLucbError> {
    let n = tf.n_source();
    validate_scale_shift(scale_shift, n)?;
    if lcb.len() != n || ucb.len() != n {
        return Err(MicroLucbError::BadBox);
    }
    if lcb.iter().zip(ucb).any(|(&u, &v)| !(u.is_finite() && v.is_finite() && u <= v)) {
        return Err(MicroLucbError::BadBox);
    }
    let boxes: Vec<ExtInterval> = lcb.iter().zip(ucb).map(|(&u, &v)| ExtInterval::finite(u, v)).collect();
    Ok(dtilde_from_boxes(tf, a, &boxes, scale_shift))
}

fn dtilde_from_boxes(tf: &TransferFunction, a: usize, boxes: &[ExtInterval], scale_shift: &[(f64, f64)]) -> Vec<usize> {
    let image = box_image(tf, a, boxes);
    boxes
        .iter()
        .zip(scale_shift)
        .enumerate()
        .filter(|(_, (b, &(scale, shift)))| {
            let lo = b.lo().scale(scale).shift(shift);
            let hi = b.hi().scale(scale).shift(shift);
            image.is_subset_of(&ExtInterval::new(lo, hi).expect("positive scale keeps order"))
        })
        .map(|(i, _)| i)
        .collect()
}

/// True iff every row has at most one nonzero entry. Negative entries are
/// rejected.
pub fn check_linear_applicability(matrix: &[Vec<f64>]) -> Result<bool, MicroLucbError> {
    for (row, r) in matrix.iter().enumerate() {
        if let Some((col, &value)) = r.iter().enumerate().find(|(_, &v)| v < 0.0 || v.is_nan()) {
            return Err(MicroLucbError::NegativeEntry { row, col, value });
        }
    }
    Ok(matrix.iter().all(|r| r.iter().filter(|&&v| v != 0.0).count() <= 1))
}

pub fn run_micro_lucb(env: &BanditEnv, tf: &TransferFunction, cfg: &MicroLucbConfig) -> Result<RunResult, MicroLucbError> {
    run_micro_lucb_with(&mut env.sampler(cfg.base.seed), tf, cfg, &mut NoObserver)
}

pub fn run_micro_lucb_with<S: SampleSource, O: RunObserver>(
    source: &mut S,
    tf: &TransferFunction,
    cfg: &MicroLucbConfig,
    observer: &mut O,
) -> Result<RunResult, MicroLucbError> {
    let params = cfg.base.validate(tf)?;
    cfg.validate_scale_shift(tf.n_source())?;
    if source.n_arms() != tf.n_source() {
        return Err(TLucbError::ArmCount {
            sampler: source.n_arms(),
            transfer: tf.n_source(),
        }
        .into());
    }
    let mut cs = crate::confidence::SourceConfidence::new(&params);
    for arm in 0..tf.n_source() {
        pull(source, &mut cs, arm, observer)?;
    }

    let mut rounds = 0u64;
    let mut leader = 0;
    while rounds < cfg.base.max_rounds {
        let boxes = cs.intervals();
        let target_cis = tf.target_bounds(&boxes).map_err(TLucbError::from)?;
        let (b, c) = select_candidates(&target_cis)?;
        leader = b;
        rounds += 1;
        let pick = |target: usize| {
            dtilde_from_boxes(tf, target, &boxes, &cfg.scale_shift)
                .first()
                .copied()
                .ok_or(MicroLucbError::EmptyDtilde { round: rounds, target })
        };
        let i = pick(b)?;
        let j = pick(c)?;
        observer.on_round(&RoundTrace {
            round: rounds,
            leader: b,
            challenger: c,
            leader_source: i,
            challenger_source: j,
        });
        pull(source, &mut cs, i, observer)?;
        pull(source, &mut cs, j, observer)?;

        let after = tf.target_bounds(&cs.intervals()).map_err(TLucbError::from)?;
        if after[b].lo().shift(cfg.base.epsilon) >= after[c].hi() {
            return Ok(finish(&cs, rounds, b, false));
        }
    }
    Ok(finish(&cs, rounds, leader, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> TransferFunction {
        let m: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|i| f64::from(u8::from(a == i))).collect()).collect();
        TransferFunction::from_matrix(&m).unwrap()
    }

    #[test]
    fn identity_contains_own_source() {
        let tf = identity(3);
        let unit = vec![(1.0, 0.0); 3];
        for a in 0..3 {
            let d = dtilde_set(&tf, a, &[0.0, -1.0, 2.0], &[1.0, 0.5, 2.5], &unit).unwrap();
            assert!(d.contains(&a));
        }
    }

    #[test]
    fn exact_scale_match() {
        let tf = TransferFunction::from_matrix(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = dtilde_set(&tf, 0, &[0.1, 0.0], &[0.4, 0.1], &[(2.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(d, vec![0]);
    }

    #[test]
    fn two_nonzeros_give_empty_set() {
        let tf = TransferFunction::from_matrix(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let d = dtilde_set(&tf, 0, &[0.0, 0.0], &[1.0, 1.0], &[(1.0, 0.0); 2]).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn input_validation() {
        let tf = identity(2);
        assert!(matches!(
            dtilde_set(&tf, 0, &[0.0, 0.0], &[1.0, 1.0], &[(0.0, 0.0); 2]),
            Err(MicroLucbError::Scale { index: 0, .. })
        ));
        assert!(matches!(
            dtilde_set(&tf, 0, &[0.0], &[1.0], &[(1.0, 0.0); 2]),
            Err(MicroLucbError::BadBox)
        ));
        assert!(matches!(
            dtilde_set(&tf, 0, &[1.0, 0.0], &[0.0, 1.0], &[(1.0, 0.0); 2]),
            Err(MicroLucbError::BadBox)
        ));
        assert!(matches!(
            dtilde_set(&tf, 0, &[0.0, 0.0], &[1.0, 1.0], &[(1.0, 0.0)]),
            Err(MicroLucbError::ScaleShiftCount { .. })
        ));
    }

    #[test]
    fn applicability() {
        assert!(check_linear_applicability(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap());
        assert!(!check_linear_applicability(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap());
        assert!(check_linear_applicability(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap());
        assert!(matches!(
            check_linear_applicability(&[vec![1.0, -1.0]]),
            Err(MicroLucbError::NegativeEntry { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn non_diagonal_fails_in_first_round() {
        let env = BanditEnv::gaussian(&[1.0, 0.0], 1.0).unwrap();
        let tf = TransferFunction::from_matrix(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        for seed in 0..10 {
            let cfg = MicroLucbConfig::unit(TLucbConfig::new(0.1, 0.0, 1.0).with_seed(seed), 2);
            assert!(matches!(
                run_micro_lucb(&env, &tf, &cfg),
                Err(MicroLucbError::EmptyDtilde { round: 1, target: 0 })
            ));
        }
    }

    #[test]
    fn diagonal_runs_and_counts_pulls() {
        let env = BanditEnv::gaussian(&[1.0, 0.0], 1.0).unwrap();
        let cfg = MicroLucbConfig::unit(TLucbConfig::new(0.1, 0.0, 1.0).with_seed(5), 2);
        let r = run_micro_lucb(&env, &identity(2), &cfg).unwrap();
        assert!(!r.stopped_by_cap);
        assert_eq!(r.selected, 0);
        assert_eq!(r.total_pulls, 2 + 2 * r.rounds);
        assert_eq!(r, run_micro_lucb(&env, &identity(2), &cfg).unwrap());
    }

    #[test]
    fn agrees_with_tlucb_on_diagonal() {
        let env = BanditEnv::gaussian(&[1.0, 0.0, 0.3], 1.0).unwrap();
        for seed in 0..10 {
            let base = TLucbConfig::new(0.1, 0.0, 1.0).with_seed(seed);
            let t = crate::tlucb::run(&env, &identity(3), &base).unwrap();
            let m = run_micro_lucb(&env, &identity(3), &MicroLucbConfig::unit(base, 3)).unwrap();
            assert_eq!(t.selected, m.selected);
        }
    }

    #[test]
    fn cap_is_reported() {
        let env = BanditEnv::gaussian(&[0.5, 0.5], 1.0).unwrap();
        let cfg = MicroLucbConfig::unit(TLucbConfig::new(0.1, 0.0, 1.0).with_max_rounds(20), 2);
        let r = run_micro_lucb(&env, &identity(2), &cfg).unwrap();
        assert!(r.stopped_by_cap);
        assert_eq!(r.rounds, 20);
    }
}
