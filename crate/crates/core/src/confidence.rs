//! Anytime confidence sequences for sub-Gaussian source arms.
//!
//! The width function is the polynomial stitched boundary
//!
//! ```text
//! β(t, δ) = 1.7 · sqrt( (σ² · ln ln(max(2tσ², e)) + 0.72 · ln(5.2/δ)) / t )
//! ```
//!
//! The `max(·, e)` clamp keeps the iterated logarithm defined and
//! non-negative for every `t ≥ 1`; it can only widen the boundary.
//! Each source arm keeps a running intersection of the per-step intervals
//! `μ̂ ± β(N, δ/(2n))`, so its lower bound never decreases and its upper
//! bound never increases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extreal::{ExtInterval, ExtReal, NegInf, PosInf};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfidenceError {
    #[error("time index must be at least 1")]
    ZeroTime,
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("number of source arms must be at least 1")]
    NoArms,
    #[error("observation must be finite, got {0}")]
    NonFiniteSample(f64),
}

fn check_delta(delta: f64) -> Result<(), ConfidenceError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(ConfidenceError::Delta(delta))
    }
}

fn check_sigma(sigma: f64) -> Result<(), ConfidenceError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(ConfidenceError::Sigma(sigma))
    }
}

/// Evaluates the stitched boundary at time `t`.
pub fn stitched_beta(t: u64, delta: f64, sigma: f64) -> Result<f64, ConfidenceError> {
    if t == 0 {
        return Err(ConfidenceError::ZeroTime);
    }
    Ok(StitchedBoundary::new(delta, sigma)?.beta(t))
}

/// Smallest `t ≥ 1` with `β(t, δ, σ) ≤ width`.
pub fn invert_beta(width: f64, delta: f64, sigma: f64) -> Result<u64, ConfidenceError> {
    Ok(StitchedBoundary::new(delta, sigma)?.invert(width))
}

/// The stitched boundary with `δ` and `σ` fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StitchedBoundary {
    delta: f64,
    sigma: f64,
    // 0.72 · ln(5.2/δ), cached
    log_term: f64,
}

impl StitchedBoundary {
    pub fn new(delta: f64, sigma: f64) -> Result<Self, ConfidenceError> {
        check_delta(delta)?;
        check_sigma(sigma)?;
        Ok(Self {
            delta,
            sigma,
            log_term: 0.72 * (5.2 / delta).ln(),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `β(t)`. Panics on `t = 0`.
    pub fn beta(&self, t: u64) -> f64 {
        assert!(t >= 1, "stitched boundary is defined for t >= 1");
        self.beta_at(t as f64)
    }

    fn beta_at(&self, t: f64) -> f64 {
        let var = self.sigma * self.sigma;
        let loglog = (2.0 * t * var).max(std::f64::consts::E).ln().ln();
        1.7 * ((var * loglog + self.log_term) / t).sqrt()
    }

    /// First integer `T₀` such that `β` is nonincreasing on `[T₀, ∞)`.
    ///
    /// With `u = 2tσ²`, `β²` is proportional to `h(t) = (σ² lnln u + c)/t`.
    /// Below the clamp `h = c/t` decreases. Above it, `h' ≤ 0` iff
    /// `σ²/ln u ≤ σ² lnln u + c`; the left side falls and the right side
    /// grows in `t`, so once the condition holds it holds for good.
    pub fn monotone_from(&self) -> u64 {
        let var = self.sigma * self.sigma;
        let holds = |t: f64| {
            let u = 2.0 * t * var;
            u <= std::f64::consts::E || var / u.ln() <= var * u.ln().ln() + self.log_term
        };
        // Left of the clamp crossing the condition is vacuous, so for such
        // t it must be checked just right of the crossing instead. It holds
        // for every u ≥ 5.8 (where 1/ln u ≤ lnln u), so the loop ends.
        let clamp_t = std::f64::consts::E / (2.0 * var);
        (1u64..)
            .find(|&t| holds((t as f64).max(clamp_t * (1.0 + 1e-12))))
            .expect("condition holds eventually")
    }

    /// Smallest `t ≥ 1` with `β(t) ≤ width`.
    ///
    /// Scans the (short) non-monotone head linearly, then brackets
    /// exponentially and bisects over the monotone tail.
    pub fn invert(&self, width: f64) -> u64 {
        self.first_time(|t| self.beta(t) <= width)
    }

    /// Smallest `t ≥ 1` with `β(t) < width`.
    pub fn invert_strict(&self, width: f64) -> u64 {
        self.first_time(|t| self.beta(t) < width)
    }

    /// Smallest `t ≥ 1` satisfying `pred`, assuming `pred` is monotone
    /// (false, then true) over the monotone tail of `β`.
    pub(crate) fn first_time(&self, pred: impl Fn(u64) -> bool) -> u64 {
        self.try_first_time(pred, u64::MAX / 4)
            .expect("boundary tends to zero so the search terminates")
    }

    /// As [`first_time`](Self::first_time) but gives up past `limit`.
    pub(crate) fn try_first_time(&self, pred: impl Fn(u64) -> bool, limit: u64) -> Option<u64> {
        let tail = self.monotone_from();
        for t in 1..tail {
            if pred(t) {
                return Some(t);
            }
        }
        if pred(tail) {
            return Some(tail);
        }
        let mut lo = tail; // pred(lo) false
        let mut hi = tail.saturating_mul(2).max(tail + 1);
        while !pred(hi) {
            if hi >= limit {
                return None;
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(limit);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pred(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Parameters shared by every source-arm confidence sequence in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub sigma: f64,
    pub delta_total: f64,
    pub n_source: usize,
}

impl BoundaryParams {
    pub fn new(sigma: f64, delta_total: f64, n_source: usize) -> Result<Self, ConfidenceError> {
        check_sigma(sigma)?;
        check_delta(delta_total)?;
        if n_source == 0 {
            return Err(ConfidenceError::NoArms);
        }
        Ok(Self {
            sigma,
            delta_total,
            n_source,
        })
    }

    /// Per-arm risk `δ/(2n)`.
    pub fn per_arm_delta(&self) -> f64 {
        self.delta_total / (2.0 * self.n_source as f64)
    }

    /// The boundary each arm's sequence uses.
    pub fn per_arm_boundary(&self) -> StitchedBoundary {
        StitchedBoundary::new(self.per_arm_delta(), self.sigma).expect("validated parameters give a valid boundary")
    }
}

/// Running confidence sequence of one source arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmConfidenceState {
    pub pulls: u64,
    pub sum: f64,
    pub lcb: ExtReal,
    pub ucb: ExtReal,
}

impl Default for ArmConfidenceState {
    fn default() -> Self {
        Self {
            pulls: 0,
            sum: 0.0,
            lcb: NegInf,
            ucb: PosInf,
        }
    }
}

impl ArmConfidenceState {
    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.sum / self.pulls as f64)
    }

    pub fn interval(&self) -> ExtInterval {
        ExtInterval::new(self.lcb, self.ucb).expect("lcb <= ucb is maintained by update")
    }

    /// Folds one observation into the sequence.
    ///
    /// If the fresh interval misses the running one entirely the
    /// intersection would be empty; the state then collapses onto the
    /// point of the running interval nearest the empirical mean, which
    /// keeps both bounds monotone and `lcb ≤ ucb`.
    pub fn update(&mut self, sample: f64, boundary: &StitchedBoundary) -> Result<(), ConfidenceError> {
        if !sample.is_finite() {
            return Err(ConfidenceError::NonFiniteSample(sample));
        }
        self.pulls += 1;
        self.sum += sample;
        let mean = self.sum / self.pulls as f64;
        let width = boundary.beta(self.pulls);
        let lcb = self.lcb.max(ExtReal::from_f64(mean - width));
        let ucb = self.ucb.min(ExtReal::from_f64(mean + width));
        if lcb <= ucb {
            self.lcb = lcb;
            self.ucb = ucb;
        } else {
            let m = ExtReal::from_f64(mean).clamp(self.lcb, self.ucb);
            self.lcb = m;
            self.ucb = m;
        }
        Ok(())
    }

    /// Value-style form of [`update`](Self::update).
    pub fn updated(mut self, sample: f64, params: &BoundaryParams) -> Result<Self, ConfidenceError> {
        self.update(sample, &params.per_arm_boundary())?;
        Ok(self)
    }
}

/// Confidence sequences for all source arms of one run.
#[derive(Debug, Clone)]
pub struct SourceConfidence {
    boundary: StitchedBoundary,
    arms: Vec<ArmConfidenceState>,
}

impl SourceConfidence {
    pub fn new(params: &BoundaryParams) -> Self {
        Self {
            boundary: params.per_arm_boundary(),
            arms: vec![ArmConfidenceState::default(); params.n_source],
        }
    }

    pub fn update(&mut self, arm: usize, sample: f64) -> Result<(), ConfidenceError> {
        self.arms[arm].update(sample, &self.boundary)
    }

    pub fn arm(&self, arm: usize) -> &ArmConfidenceState {
        &self.arms[arm]
    }

    pub fn arms(&self) -> &[ArmConfidenceState] {
        &self.arms
    }

    pub fn intervals(&self) -> Vec<ExtInterval> {
        self.arms.iter().map(ArmConfidenceState::interval).collect()
    }

    pub fn pulls(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.pulls).collect()
    }
}
