//! Standard pure-exploration problems written as additive transfers.
//!
//! Subsets are 0-based source indices here; labels print them 1-based,
//! e.g. `{1,3}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::Hardness;
use crate::transfer::{ComponentFunction, PropertySet, TransferError, TransferFunction};

/// Largest number of targets `make_topk` will enumerate.
pub const TOPK_CAP: u64 = 10_000;

/// Largest `n` for power-set presets (`2ⁿ` targets).
pub const POWER_SET_MAX_N: usize = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PresetError {
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("need at least two source arms, got {0}")]
    TooFewArms(usize),
    #[error("top-k needs 1 <= k < n, got k = {k}, n = {n}")]
    BadK { k: usize, n: usize },
    #[error("C({n}, {k}) targets exceed the cap of {cap}")]
    TooManyTargets { n: usize, k: usize, cap: u64 },
    #[error("power-set presets allow n <= {max}, got {n}")]
    PowerSetTooLarge { n: usize, max: usize },
    #[error("threshold must be finite, got {0}")]
    Theta(f64),
    #[error("need at least two sets, got {0}")]
    TooFewSets(usize),
    #[error("set {set} contains source index {index}, but there are {n} sources")]
    IndexOutOfRange { set: usize, index: usize, n: usize },
    #[error("set {set} repeats source index {index}")]
    RepeatedIndex { set: usize, index: usize },
    #[error("sets {first} and {second} are identical")]
    DuplicateSet { first: usize, second: usize },
    #[error("no property sets given")]
    NoPropertySets,
    #[error("this preset requires epsilon = 0, got {0}")]
    NonZeroEpsilon(f64),
}

/// `{1,3}` style label for a 0-based subset.
pub fn subset_label(set: &[usize]) -> String {
    let inner: Vec<String> = set.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

fn binomial(n: usize, k: usize) -> Option<u64> {
    let k = k.min(n - k);
    (0..k).try_fold(1u64, |acc, j| acc.checked_mul((n - j) as u64).map(|x| x / (j as u64 + 1)))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&p| cur[p] < n - k + p) else {
            return out;
        };
        cur[pos] += 1;
        for q in pos + 1..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
}

/// All subsets of `0..n`, ordered by bitmask (`∅, {1}, {2}, {1,2}, …`).
pub fn power_set(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
        .collect()
}

fn check_subsets(sets: &[Vec<usize>], n: usize) -> Result<Vec<Vec<usize>>, PresetError> {
    let mut normalized = Vec::with_capacity(sets.len());
    for (set, s) in sets.iter().enumerate() {
        let mut sorted = s.clone();
        sorted.sort_unstable();
        if let Some(&index) = sorted.iter().find(|&&i| i >= n) {
            return Err(PresetError::IndexOutOfRange { set, index, n });
        }
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(PresetError::RepeatedIndex { set, index: w[0] });
        }
        if let Some(first) = normalized.iter().position(|m| *m == sorted) {
            return Err(PresetError::DuplicateSet { first, second: set });
        }
        normalized.push(sorted);
    }
    Ok(normalized)
}

fn subset_rows(n: usize, sets: &[Vec<usize>], on: impl Fn(usize) -> ComponentFunction) -> Result<TransferFunction, PresetError> {
    let rows = sets
        .iter()
        .map(|m| {
            (0..n)
                .map(|i| if m.contains(&i) { on(i) } else { ComponentFunction::Zero })
                .collect()
        })
        .collect();
    let labels = sets.iter().map(|m| subset_label(m)).collect();
    Ok(TransferFunction::new(rows)?.with_labels(labels)?)
}

/// Target `a` is source `a`.
pub fn make_bai(n: usize) -> Result<TransferFunction, PresetError> {
    if n < 2 {
        return Err(PresetError::TooFewArms(n));
    }
    let sets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let tf = subset_rows(n, &sets, |_| ComponentFunction::linear(1.0))?;
    Ok(tf.with_labels((1..=n).map(|a| a.to_string()).collect())?)
}

/// One target per `k`-subset, with mean the subset sum.
pub fn make_topk(n: usize, k: usize) -> Result<TransferFunction, PresetError> {
    if k == 0 || k >= n {
        return Err(PresetError::BadK { k, n });
    }
    match binomial(n, k) {
        Some(c) if c <= TOPK_CAP => {}
        _ => return Err(PresetError::TooManyTargets { n, k, cap: TOPK_CAP }),
    }
    subset_rows(n, &k_subsets(n, k), |_| ComponentFunction::linear(1.0))
}

/// Power-set property testing with `C_i = (θ, ∞)`.
pub fn make_thresholding(n: usize, theta: f64) -> Result<TransferFunction, PresetError> {
    if !theta.is_finite() {
        return Err(PresetError::Theta(theta));
    }
    if n == 0 {
        return Err(PresetError::TooFewArms(n));
    }
    if n > POWER_SET_MAX_N {
        return Err(PresetError::PowerSetTooLarge { n, max: POWER_SET_MAX_N });
    }
    make_property_testing(&vec![PropertySet::above(theta); n], &power_set(n))
}

/// One target per set in the class, with mean the subset sum.
pub fn make_cpe(n: usize, decision_class: &[Vec<usize>]) -> Result<TransferFunction, PresetError> {
    if decision_class.len() < 2 {
        return Err(PresetError::TooFewSets(decision_class.len()));
    }
    let sets = check_subsets(decision_class, n)?;
    subset_rows(n, &sets, |_| ComponentFunction::linear(1.0))
}

/// `ν_M = Σ_{i ∈ M} 𝕀_{C_i}(μ_i)`, with the indicator `1` on `C_i` and `−∞`
/// off it.
pub fn make_property_testing(property_sets: &[PropertySet], membership_sets: &[Vec<usize>]) -> Result<TransferFunction, PresetError> {
    if property_sets.is_empty() {
        return Err(PresetError::NoPropertySets);
    }
    if membership_sets.len() < 2 {
        return Err(PresetError::TooFewSets(membership_sets.len()));
    }
    let sets = check_subsets(membership_sets, property_sets.len())?;
    subset_rows(property_sets.len(), &sets, |i| {
        ComponentFunction::indicator(property_sets[i].clone())
    })
}

/// A preset together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum PresetSpec {
    Bai {
        n: usize,
    },
    TopK {
        n: usize,
        k: usize,
    },
    Thresholding {
        n: usize,
        theta: f64,
    },
    Cpe {
        n: usize,
        decision_class: Vec<Vec<usize>>,
    },
    PropertyTesting {
        property_sets: Vec<PropertySet>,
        membership_sets: Vec<Vec<usize>>,
    },
}

impl PresetSpec {
    pub fn build(&self) -> Result<TransferFunction, PresetError> {
        match self {
            PresetSpec::Bai { n } => make_bai(*n),
            PresetSpec::TopK { n, k } => make_topk(*n, *k),
            PresetSpec::Thresholding { n, theta } => make_thresholding(*n, *theta),
            PresetSpec::Cpe { n, decision_class } => make_cpe(*n, decision_class),
            PresetSpec::PropertyTesting {
                property_sets,
                membership_sets,
            } => make_property_testing(property_sets, membership_sets),
        }
    }

    /// Indicator-valued presets only make sense with `ε = 0`.
    pub fn requires_zero_epsilon(&self) -> bool {
        matches!(self, PresetSpec::Thresholding { .. } | PresetSpec::PropertyTesting { .. })
    }

    pub fn check_epsilon(&self, epsilon: f64) -> Result<(), PresetError> {
        if self.requires_zero_epsilon() && epsilon != 0.0 {
            Err(PresetError::NonZeroEpsilon(epsilon))
        } else {
            Ok(())
        }
    }

    /// Closed-form hardness families that apply to this preset.
    pub fn hardness(&self, tf: &TransferFunction, epsilon: f64) -> Vec<Hardness> {
        let linear = || Hardness::Linear {
            matrix: linear_matrix(tf).expect("linear preset"),
            epsilon,
        };
        match self {
            PresetSpec::Bai { .. } => vec![Hardness::Bai, linear()],
            PresetSpec::TopK { k, .. } => vec![Hardness::TopK { k: *k }, linear()],
            PresetSpec::Cpe { .. } => vec![linear()],
            PresetSpec::Thresholding { n, theta } => vec![
                Hardness::Thresholding { theta: *theta },
                Hardness::PropertyTesting {
                    sets: vec![PropertySet::above(*theta); *n],
                },
            ],
            PresetSpec::PropertyTesting { property_sets, .. } => {
                vec![Hardness::PropertyTesting {
                    sets: property_sets.clone(),
                }]
            }
        }
    }
}

/// Coefficient matrix when every component is zero or linear.
pub fn linear_matrix(tf: &TransferFunction) -> Option<Vec<Vec<f64>>> {
    tf.rows()
        .map(|row| {
            row.iter()
                .map(|f| match f {
                    ComponentFunction::Zero => Some(0.0),
                    ComponentFunction::Linear { coeff } => Some(*coeff),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extreal::{ExtInterval, ExtReal, NegInf};

    fn fin(x: f64) -> ExtReal {
        ExtReal::from_f64(x)
    }

    #[test]
    fn bai_is_identity() {
        let tf = make_bai(2).unwrap();
        assert_eq!(tf, TransferFunction::from_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        let cis = [ExtInterval::finite(0.0, 0.3), ExtInterval::finite(-1.0, 2.0)];
        assert_eq!(tf.target_bounds(&cis).unwrap(), cis.to_vec());
        let tf = make_bai(5).unwrap();
        assert!((0..5).all(|a| tf.sparsity(a).unwrap() == 1));
        assert_eq!(make_bai(1), Err(PresetError::TooFewArms(1)));
    }

    #[test]
    fn topk_enumeration() {
        let tf = make_topk(3, 2).unwrap();
        assert_eq!(tf.labels(), ["{1,2}", "{1,3}", "{2,3}"]);
        let nu = tf.evaluate(&[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(nu, vec![fin(5.0), fin(4.0), fin(3.0)]);
        assert!((0..3).all(|a| tf.sparsity(a).unwrap() == 2));
        assert_eq!(make_topk(3, 3), Err(PresetError::BadK { k: 3, n: 3 }));
        assert!(matches!(make_topk(30, 15), Err(PresetError::TooManyTargets { .. })));
        assert_eq!(make_topk(20, 4).unwrap().n_target(), 4845);
    }

    #[test]
    fn topk_one_matches_bai_bounds() {
        let a = make_topk(4, 1).unwrap();
        let b = make_bai(4).unwrap();
        let cis: Vec<ExtInterval> = (0..4).map(|i| ExtInterval::finite(i as f64 * 0.1, 1.0 + i as f64)).collect();
        assert_eq!(a.target_bounds(&cis).unwrap(), b.target_bounds(&cis).unwrap());
    }

    #[test]
    fn thresholding_power_set() {
        let tf = make_thresholding(2, 0.5).unwrap();
        assert_eq!(tf.labels(), ["{}", "{1}", "{2}", "{1,2}"]);
        let nu = tf.evaluate(&[0.8, 0.2]).unwrap();
        assert_eq!(nu, vec![fin(0.0), fin(1.0), NegInf, NegInf]);
        assert!(matches!(make_thresholding(16, 0.0), Err(PresetError::PowerSetTooLarge { .. })));
        assert!(make_thresholding(2, f64::NAN).is_err());
        let spec = PresetSpec::Thresholding { n: 2, theta: 0.5 };
        assert_eq!(spec.check_epsilon(0.1), Err(PresetError::NonZeroEpsilon(0.1)));
        assert!(spec.check_epsilon(0.0).is_ok());
    }

    #[test]
    fn cpe_cases() {
        assert_eq!(make_cpe(4, &k_subsets(4, 2)).unwrap(), make_topk(4, 2).unwrap());
        let tf = make_cpe(3, &[vec![0], vec![1, 2]]).unwrap();
        let nu = tf.evaluate(&[1.0, 0.4, 0.4]).unwrap();
        assert!(nu[0] > nu[1]);
        assert_eq!(
            make_cpe(2, &[vec![0], vec![0]]),
            Err(PresetError::DuplicateSet { first: 0, second: 1 })
        );
        assert_eq!(make_cpe(2, &[vec![0]]), Err(PresetError::TooFewSets(1)));
        assert!(matches!(
            make_cpe(2, &[vec![0], vec![2]]),
            Err(PresetError::IndexOutOfRange { index: 2, .. })
        ));
        assert!(matches!(
            make_cpe(2, &[vec![0, 0], vec![1]]),
            Err(PresetError::RepeatedIndex { index: 0, .. })
        ));
    }

    #[test]
    fn property_testing_values() {
        let sets = vec![
            PropertySet::above(0.0),
            "[1, 2]"
                .parse::<crate::transfer::RealInterval>()
                .map(|p| PropertySet::new([p]))
                .unwrap(),
        ];
        let tf = make_property_testing(&sets, &[vec![0, 1], vec![1]]).unwrap();
        assert_eq!(tf.evaluate(&[0.3, 1.5]).unwrap(), vec![fin(2.0), fin(1.0)]);
        assert_eq!(tf.evaluate(&[0.3, 2.5]).unwrap(), vec![NegInf, NegInf]);
        assert!(make_property_testing(&[], &[vec![], vec![]]).is_err());
        assert!(make_property_testing(&sets, &[]).is_err());
    }

    #[test]
    fn subset_helpers() {
        assert_eq!(k_subsets(4, 2).len(), 6);
        assert_eq!(k_subsets(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(power_set(3).len(), 8);
        assert_eq!(binomial(52, 5), Some(2_598_960));
        assert_eq!(subset_label(&[]), "{}");
    }

    #[test]
    fn spec_round_trip() {
        let s = PresetSpec::PropertyTesting {
            property_sets: vec![PropertySet::above(0.0)],
            membership_sets: vec![vec![], vec![0]],
        };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<PresetSpec>(&j).unwrap(), s);
        assert!(linear_matrix(&s.build().unwrap()).is_none());
        assert_eq!(linear_matrix(&make_bai(2).unwrap()).unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }
}
