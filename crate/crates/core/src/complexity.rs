//! Instance-dependent sample-complexity quantities.
//!
//! For target `a` and source `i`, `τ_{a,i}` is the smallest `t` with
//!
//! ```text
//! sup_{x ∈ [μ_i − 2β(t), μ_i]} L(i, a, t, x)  <  max(|ν̄ − ν_a|, ε/2) / s_a
//! ```
//!
//! where `L(i, a, t, x)` is the width of `f_{a,i}` over `[x, x + 2β(t)]`,
//! `ν̄` is the midpoint of the two largest true target means and `s_a` the
//! number of non-constant components in row `a`. The stopping time of
//! T-LUCB is then at most `Σ_i max_a τ_{a,i}` on the good event.
//!
//! These use true means, so they are diagnostics for the harness, never
//! inputs to the algorithms.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::confidence::{ConfidenceError, StitchedBoundary};
use crate::extreal::{ExtInterval, ExtReal, NegInf};
use crate::transfer::{ComponentFunction, PropertySet, TransferError, TransferFunction};

/// Points in the x-grid used for components without an exact sup rule.
pub const X_GRID_POINTS: usize = 512;

/// The `t` search gives up (reporting [`Tau::Unbounded`]) past this.
pub const T_SEARCH_LIMIT: u64 = 1 << 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplexityError {
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
    #[error("need at least two target arms, got {0}")]
    TooFewTargets(usize),
    #[error("expected {expected} means, got {got}")]
    MeansLength { expected: usize, got: usize },
    #[error("means must be finite")]
    NonFiniteMean,
    #[error("epsilon must be finite and non-negative, got {0}")]
    Epsilon(f64),
    #[error("top-k needs 1 <= k < n, got k = {k}, n = {n}")]
    BadK { k: usize, n: usize },
    #[error("time must be at least 1")]
    ZeroTime,
}

/// A pull-count bound that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tau {
    Finite(u64),
    Unbounded,
}

impl Tau {
    pub fn finite(self) -> Option<u64> {
        match self {
            Tau::Finite(t) => Some(t),
            Tau::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        self == Tau::Unbounded
    }

    pub fn saturating_add(self, other: Tau) -> Tau {
        match (self, other) {
            (Tau::Finite(a), Tau::Finite(b)) => a.checked_add(b).map_or(Tau::Unbounded, Tau::Finite),
            _ => Tau::Unbounded,
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Finite(t) => write!(f, "{t}"),
            Tau::Unbounded => f.write_str("unbounded"),
        }
    }
}

const UNBOUNDED: &str = "unbounded";

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrMarker<T> {
    Number(T),
    Marker(String),
}

fn parse_marker<E: serde::de::Error>(s: &str) -> Result<(), E> {
    if s == UNBOUNDED {
        Ok(())
    } else {
        Err(E::custom(format!("expected a number or \"{UNBOUNDED}\", got \"{s}\"")))
    }
}

impl Serialize for Tau {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Tau::Finite(t) => s.serialize_u64(*t),
            Tau::Unbounded => s.serialize_str(UNBOUNDED),
        }
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrMarker::<u64>::deserialize(d)? {
            NumberOrMarker::Number(t) => Ok(Tau::Finite(t)),
            NumberOrMarker::Marker(s) => parse_marker(&s).map(|()| Tau::Unbounded),
        }
    }
}

/// A closed-form hardness value that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Finite(f64),
    Unbounded,
}

impl BoundValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            BoundValue::Finite(x) => Some(x),
            BoundValue::Unbounded => None,
        }
    }

    fn from_terms(terms: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut total = 0.0;
        for t in terms {
            match t {
                Some(x) => total += x,
                None => return BoundValue::Unbounded,
            }
        }
        BoundValue::Finite(total)
    }
}

impl Serialize for BoundValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BoundValue::Finite(x) => s.serialize_f64(*x),
            BoundValue::Unbounded => s.serialize_str(UNBOUNDED),
        }
    }
}

impl<'de> Deserialize<'de> for BoundValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrMarker::<f64>::deserialize(d)? {
            NumberOrMarker::Number(x) => Ok(BoundValue::Finite(x)),
            NumberOrMarker::Marker(s) => parse_marker(&s).map(|()| BoundValue::Unbounded),
        }
    }
}

/// Which `δ` the boundary in `τ` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaAllocation {
    /// `δ / (2 n_source)`, the per-arm risk the algorithms use.
    #[default]
    PerArm,
    /// `δ` itself.
    Raw,
}

impl DeltaAllocation {
    pub fn effective(self, delta: f64, n_source: usize) -> f64 {
        match self {
            DeltaAllocation::PerArm => delta / (2.0 * n_source as f64),
            DeltaAllocation::Raw => delta,
        }
    }
}

/// `(ν₍₁₎ + ν₍₂₎)/2` over the two largest entries.
pub fn nu_bar(nu: &[ExtReal]) -> Result<ExtReal, ComplexityError> {
    if nu.len() < 2 {
        return Err(ComplexityError::TooFewTargets(nu.len()));
    }
    let mut sorted = nu.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sorted[0].add_lower(sorted[1]) / 2.0)
}

/// `max(|ν̄ − ν_a|, ε/2) / s_a`, or the undivided value when `s_a = 0`.
pub fn gap_threshold(nu_bar: ExtReal, nu_a: ExtReal, epsilon: f64, sparsity: usize) -> ExtReal {
    let gap = (nu_bar - nu_a).abs().max(ExtReal::from_f64(epsilon / 2.0));
    if sparsity == 0 {
        gap
    } else {
        gap / sparsity as f64
    }
}

/// `L(i, a, t, x)`: width of `f` over `[x, x + 2β(t)]`.
pub fn complexity_length(f: &ComponentFunction, t: u64, x: f64, boundary: &StitchedBoundary) -> Result<ExtReal, ComplexityError> {
    if t == 0 {
        return Err(ComplexityError::ZeroTime);
    }
    if !x.is_finite() {
        return Err(ComplexityError::NonFiniteMean);
    }
    Ok(window_length(f, x, 2.0 * boundary.beta(t)))
}

fn window_length(f: &ComponentFunction, x: f64, w: f64) -> ExtReal {
    f.image(&ExtInterval::finite(x, x + w)).length()
}

/// `sup_{x ∈ [μ − w, μ]}` of the width of `f` over `[x, x + w]`.
///
/// Exact for zero, linear and indicator components: the width is constant
/// in `x` for linear ones, and an indicator window straddles the boundary
/// for some admissible `x` iff one of the two extreme windows does. Other
/// components are covered by a grid of `X_GRID_POINTS` windows, each widened
/// by one grid step so that every admissible window lies inside one of
/// them; the result is an upper bound on the sup.
pub fn sup_window_length(f: &ComponentFunction, mu: f64, w: f64) -> ExtReal {
    let lo = mu - w;
    match f {
        ComponentFunction::Zero | ComponentFunction::Linear { .. } | ComponentFunction::Indicator { .. } => {
            let mut xs = vec![lo, mu];
            for b in f.breakpoints() {
                xs.extend([b, b - w].into_iter().filter(|&x| (lo..=mu).contains(&x)));
            }
            xs.into_iter().map(|x| window_length(f, x, w)).max().expect("non-empty")
        }
        ComponentFunction::Piecewise(_) => {
            let steps = X_GRID_POINTS - 1;
            let h = w / steps as f64;
            (0..steps)
                .map(|k| {
                    let x0 = lo + k as f64 * h;
                    let x1 = if k + 1 == steps { mu } else { lo + (k + 1) as f64 * h };
                    f.image(&ExtInterval::finite(x0, x1 + w)).length()
                })
                .max()
                .expect("non-empty grid")
        }
    }
}

/// `τ` by direct search over `t`, for any component.
pub fn tau_generic(f: &ComponentFunction, mu: f64, threshold: ExtReal, boundary: &StitchedBoundary) -> Tau {
    if threshold <= ExtReal::ZERO {
        return Tau::Unbounded;
    }
    let pred = |t: u64| sup_window_length(f, mu, 2.0 * boundary.beta(t)) < threshold;
    boundary.try_first_time(pred, T_SEARCH_LIMIT).map_or(Tau::Unbounded, Tau::Finite)
}

/// `τ` in closed form where one exists (`None` for piecewise components).
///
/// Linear `c`: the width is `2|c|β(t)`, so `τ` is the first `t` with
/// `β(t) < threshold / (2|c|)`. Indicator: the width is `0` or `+∞`, and it
/// is `0` for every admissible window iff `2β(t)` is within the margin of
/// `μ` to the set boundary.
pub fn tau_closed_form(f: &ComponentFunction, mu: f64, threshold: ExtReal, boundary: &StitchedBoundary) -> Option<Tau> {
    if threshold <= ExtReal::ZERO {
        return Some(Tau::Unbounded);
    }
    if f.is_constant() {
        return Some(Tau::Finite(1));
    }
    match f {
        ComponentFunction::Linear { coeff } => Some(match threshold {
            ExtReal::Finite(thr) => {
                let w = thr / (2.0 * coeff.abs());
                Tau::Finite(boundary.first_time(|t| boundary.beta(t) < w))
            }
            _ => Tau::Finite(1),
        }),
        ComponentFunction::Indicator { set } => Some(indicator_tau(set, mu, boundary)),
        _ => None,
    }
}

fn indicator_tau(set: &PropertySet, mu: f64, boundary: &StitchedBoundary) -> Tau {
    let m = set.margin(mu);
    if m.distance == 0.0 {
        return Tau::Unbounded;
    }
    let t = if m.strict {
        boundary.first_time(|t| 2.0 * boundary.beta(t) < m.distance)
    } else {
        boundary.first_time(|t| 2.0 * boundary.beta(t) <= m.distance)
    };
    Tau::Finite(t)
}

/// `τ` for one component: closed form when available, search otherwise.
pub fn tau_component(f: &ComponentFunction, mu: f64, threshold: ExtReal, boundary: &StitchedBoundary) -> Tau {
    tau_closed_form(f, mu, threshold, boundary).unwrap_or_else(|| tau_generic(f, mu, threshold, boundary))
}

fn check_means(tf: &TransferFunction, mu: &[f64]) -> Result<(), ComplexityError> {
    if mu.len() != tf.n_source() {
        return Err(ComplexityError::MeansLength {
            expected: tf.n_source(),
            got: mu.len(),
        });
    }
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(ComplexityError::NonFiniteMean);
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<(), ComplexityError> {
    if epsilon >= 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(ComplexityError::Epsilon(epsilon))
    }
}

/// `τ_{a,i}` given true source and target means.
pub fn tau_target_source(
    tf: &TransferFunction,
    a: usize,
    i: usize,
    mu: &[f64],
    nu: &[ExtReal],
    epsilon: f64,
    boundary: &StitchedBoundary,
) -> Result<Tau, ComplexityError> {
    check_means(tf, mu)?;
    check_epsilon(epsilon)?;
    if nu.len() != tf.n_target() {
        return Err(ComplexityError::MeansLength {
            expected: tf.n_target(),
            got: nu.len(),
        });
    }
    let thr = gap_threshold(nu_bar(nu)?, nu[a], epsilon, tf.sparsity(a)?);
    if i >= tf.n_source() {
        return Err(TransferError::SourceIndex {
            index: i,
            n: tf.n_source(),
        }
        .into());
    }
    Ok(tau_component(tf.component(a, i), mu[i], thr, boundary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedBound {
    pub name: String,
    pub value: BoundValue,
    /// Multiplicative factor relative to the matching single-arm form
    /// (`K²` for top-k).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

impl NamedBound {
    fn new(name: &str, value: BoundValue) -> Self {
        Self {
            name: name.to_owned(),
            value,
            factor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub nu: Vec<ExtReal>,
    pub nu_bar: ExtReal,
    pub delta_effective: f64,
    pub delta_allocation: DeltaAllocation,
    /// `[a][i]`
    pub tau_matrix: Vec<Vec<Tau>>,
    pub tau_per_source: Vec<Tau>,
    pub theorem2_total: Tau,
    pub unbounded: bool,
    pub closed_form: Vec<NamedBound>,
}

impl ComplexityReport {
    pub fn with_closed_form(mut self, bounds: Vec<NamedBound>) -> Self {
        self.closed_form = bounds;
        self
    }
}

/// The full `τ` table and its aggregate `Σ_i max_a τ_{a,i}`.
pub fn theorem2_bound(
    tf: &TransferFunction,
    mu: &[f64],
    epsilon: f64,
    delta: f64,
    sigma: f64,
    allocation: DeltaAllocation,
) -> Result<ComplexityReport, ComplexityError> {
    check_means(tf, mu)?;
    check_epsilon(epsilon)?;
    let delta_effective = allocation.effective(delta, tf.n_source());
    let boundary = StitchedBoundary::new(delta_effective, sigma)?;
    let nu = tf.evaluate(mu)?;
    let nu_bar = nu_bar(&nu)?;
    let tau_matrix: Vec<Vec<Tau>> = (0..tf.n_target())
        .map(|a| {
            let thr = gap_threshold(nu_bar, nu[a], epsilon, tf.sparsity(a).expect("in range"));
            tf.row(a)
                .iter()
                .zip(mu)
                .map(|(f, &m)| tau_component(f, m, thr, &boundary))
                .collect()
        })
        .collect();
    let tau_per_source: Vec<Tau> = (0..tf.n_source())
        .map(|i| tau_matrix.iter().map(|row| row[i]).max().expect("at least one target"))
        .collect();
    let theorem2_total = tau_per_source.iter().fold(Tau::Finite(0), |acc, &t| acc.saturating_add(t));
    Ok(ComplexityReport {
        nu,
        nu_bar,
        delta_effective,
        delta_allocation: allocation,
        unbounded: theorem2_total.is_unbounded(),
        tau_matrix,
        tau_per_source,
        theorem2_total,
        closed_form: Vec::new(),
    })
}

/// Problem families with a closed-form hardness quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum Hardness {
    /// `Σ_i 2 / Δ_i²`, `Δ_i` the margin of `μ_i` to the boundary of `C_i`.
    PropertyTesting { sets: Vec<PropertySet> },
    /// `Σ_i max_a s_a² A_{a,i}² / max(|ν̄ − ν_a|, ε/2)²`.
    Linear { matrix: Vec<Vec<f64>>, epsilon: f64 },
    /// `Σ_i 1 / (μ̄ − μ_i)²`, `μ̄` the midpoint of the top two means.
    Bai,
    /// `Σ_i 1 / (μ_i − θ)²`.
    Thresholding { theta: f64 },
    /// `Σ_i K² / (μ_i − μ̄)²`, `μ̄` the midpoint of the `K`-th and
    /// `(K+1)`-th largest means.
    TopK { k: usize },
}

fn inv_square(num: f64, gap: f64) -> Option<f64> {
    if num == 0.0 {
        Some(0.0)
    } else if gap == 0.0 {
        None
    } else {
        Some(num / (gap * gap))
    }
}

fn sorted_desc(mu: &[f64]) -> Vec<f64> {
    let mut s = mu.to_vec();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    s
}

/// Closed-form hardness values for the given family.
pub fn corollary_bounds(kind: &Hardness, mu: &[f64]) -> Result<Vec<NamedBound>, ComplexityError> {
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(ComplexityError::NonFiniteMean);
    }
    let n = mu.len();
    Ok(match kind {
        Hardness::PropertyTesting { sets } => {
            if sets.len() != n {
                return Err(ComplexityError::MeansLength {
                    expected: sets.len(),
                    got: n,
                });
            }
            let terms = sets.iter().zip(mu).map(|(c, &m)| inv_square(2.0, c.margin(m).distance));
            vec![NamedBound::new("property_testing_h", BoundValue::from_terms(terms))]
        }
        Hardness::Linear { matrix, epsilon } => vec![NamedBound::new("linear_h", linear_h(matrix, mu, *epsilon)?)],
        Hardness::Bai => {
            if n < 2 {
                return Err(ComplexityError::TooFewTargets(n));
            }
            let s = sorted_desc(mu);
            let bar = (s[0] + s[1]) / 2.0;
            vec![NamedBound::new(
                "bai",
                BoundValue::from_terms(mu.iter().map(|&m| inv_square(1.0, bar - m))),
            )]
        }
        Hardness::Thresholding { theta } => {
            let terms = mu.iter().map(|&m| inv_square(1.0, m - theta));
            vec![NamedBound::new("thresholding", BoundValue::from_terms(terms))]
        }
        Hardness::TopK { k } => {
            if *k == 0 || *k >= n {
                return Err(ComplexityError::BadK { k: *k, n });
            }
            let s = sorted_desc(mu);
            let bar = (s[k - 1] + s[*k]) / 2.0;
            let k2 = (k * k) as f64;
            let terms = mu.iter().map(|&m| inv_square(k2, m - bar));
            vec![NamedBound {
                name: "top_k".to_owned(),
                value: BoundValue::from_terms(terms),
                factor: Some(k2),
            }]
        }
    })
}

fn linear_h(matrix: &[Vec<f64>], mu: &[f64], epsilon: f64) -> Result<BoundValue, ComplexityError> {
    check_epsilon(epsilon)?;
    let tf = TransferFunction::from_matrix(matrix)?;
    check_means(&tf, mu)?;
    let nu = tf.evaluate(mu)?;
    let bar = nu_bar(&nu)?;
    let denom: Vec<(f64, f64)> = matrix
        .iter()
        .zip(&nu)
        .map(|(row, &v)| {
            let s = row.iter().filter(|&&c| c != 0.0).count() as f64;
            let gap = (bar - v).abs().max(ExtReal::from_f64(epsilon / 2.0));
            (s, gap.to_f64())
        })
        .collect();
    let terms = (0..tf.n_source()).map(|i| {
        matrix.iter().zip(&denom).try_fold(0.0f64, |acc, (row, &(s, gap))| {
            let c = row[i];
            inv_square(s * s * c * c, gap).map(|x| acc.max(x))
        })
    });
    Ok(BoundValue::from_terms(terms))
}

/// Largest true target mean.
pub fn best_target_value(nu: &[ExtReal]) -> ExtReal {
    nu.iter().copied().max().unwrap_or(NegInf)
}
