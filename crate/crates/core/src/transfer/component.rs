//! Component functions `f_{a,i}` with exact interval images.

use serde::{Deserialize, Serialize};

use super::sets::PropertySet;
use super::TransferError;
use crate::extreal::{ExtInterval, ExtReal, NegInf, PosInf};

/// One monotone piece of a [`PiecewiseMonotone`] function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Piece {
    /// `slope · x + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `scale · exp(rate · x) + offset`
    Exponential { scale: f64, rate: f64, offset: f64 },
}

impl Piece {
    fn params(&self) -> [f64; 3] {
        match *self {
            Piece::Affine { slope, intercept } => [slope, intercept, 0.0],
            Piece::Exponential { scale, rate, offset } => [scale, rate, offset],
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match *self {
            Piece::Affine { slope: 0.0, intercept } => Some(intercept),
            Piece::Exponential { scale: 0.0, offset, .. } => Some(offset),
            Piece::Exponential { scale, rate: 0.0, offset } => Some(scale + offset),
            _ => None,
        }
    }

    /// Value at `x`, or the limit when `x` is infinite.
    pub fn value(&self, x: ExtReal) -> ExtReal {
        if let Some(c) = self.constant_value() {
            return ExtReal::from_f64(c);
        }
        match (*self, x) {
            (Piece::Affine { slope, intercept }, ExtReal::Finite(x)) => ExtReal::from_f64(slope * x + intercept),
            (Piece::Affine { slope, .. }, inf) => {
                if (slope > 0.0) == (inf == PosInf) {
                    PosInf
                } else {
                    NegInf
                }
            }
            (Piece::Exponential { scale, rate, offset }, ExtReal::Finite(x)) => {
                let e = (rate * x).exp();
                if e.is_infinite() {
                    if scale > 0.0 {
                        PosInf
                    } else {
                        NegInf
                    }
                } else {
                    ExtReal::from_f64(scale * e + offset)
                }
            }
            (Piece::Exponential { scale, rate, offset }, inf) => {
                let grows = (rate > 0.0) == (inf == PosInf);
                match (grows, scale > 0.0) {
                    (false, _) => ExtReal::from_f64(offset),
                    (true, true) => PosInf,
                    (true, false) => NegInf,
                }
            }
        }
    }

    /// Bound on `|f'|` over `[l, u]` (finite).
    pub fn lipschitz(&self, l: f64, u: f64) -> f64 {
        match *self {
            Piece::Affine { slope, .. } => slope.abs(),
            Piece::Exponential { scale, rate, .. } => (scale * rate).abs() * (rate * l).max(rate * u).exp(),
        }
    }
}

/// A function that is monotone and continuous between consecutive
/// breakpoints. Piece `k` owns `[b_{k−1}, b_k)`; the value at a
/// breakpoint belongs to the piece on its right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseRepr", into = "PiecewiseRepr")]
pub struct PiecewiseMonotone {
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
}

#[derive(Serialize, Deserialize)]
struct PiecewiseRepr {
    #[serde(default)]
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
}

impl TryFrom<PiecewiseRepr> for PiecewiseMonotone {
    type Error = TransferError;

    fn try_from(r: PiecewiseRepr) -> Result<Self, Self::Error> {
        PiecewiseMonotone::new(r.breakpoints, r.pieces)
    }
}

impl From<PiecewiseMonotone> for PiecewiseRepr {
    fn from(p: PiecewiseMonotone) -> Self {
        PiecewiseRepr {
            breakpoints: p.breakpoints,
            pieces: p.pieces,
        }
    }
}

impl PiecewiseMonotone {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Piece>) -> Result<Self, TransferError> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(TransferError::BadComponent(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TransferError::BadComponent(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if pieces.iter().flat_map(Piece::params).any(|x| !x.is_finite()) {
            return Err(TransferError::BadComponent("piece parameters must be finite".into()));
        }
        Ok(Self { breakpoints, pieces })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_domain(&self, k: usize) -> (ExtReal, ExtReal) {
        let lo = if k == 0 {
            NegInf
        } else {
            ExtReal::from_f64(self.breakpoints[k - 1])
        };
        let hi = self.breakpoints.get(k).map_or(PosInf, |&b| ExtReal::from_f64(b));
        (lo, hi)
    }

    pub fn evaluate(&self, x: f64) -> ExtReal {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.pieces[k].value(ExtReal::from_f64(x))
    }

    fn is_constant(&self) -> bool {
        let mut values = self.pieces.iter().map(Piece::constant_value);
        match values.next().flatten() {
            Some(first) => values.all(|v| v == Some(first)),
            None => false,
        }
    }

    /// Infimum and supremum over `[l, u]`, one-sided limits included.
    fn image(&self, interval: &ExtInterval) -> ExtInterval {
        let (l, u) = (interval.lo(), interval.hi());
        let mut lo = PosInf;
        let mut hi = NegInf;
        for (k, piece) in self.pieces.iter().enumerate() {
            let (d_lo, d_hi) = self.piece_domain(k);
            let s = l.max(d_lo);
            let e = u.min(d_hi);
            if s > e || (s == e && s >= d_hi) {
                continue;
            }
            for v in [piece.value(s), piece.value(e)] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        ExtInterval::new(lo, hi).expect("non-empty interval meets at least one piece")
    }

    /// Bound on `|f'|` over `[l, u]` (finite), ignoring jumps.
    pub fn lipschitz(&self, l: f64, u: f64) -> f64 {
        self.pieces.iter().map(|p| p.lipschitz(l, u)).fold(0.0, f64::max)
    }
}

/// One component `f_{a,i}` of an additive transfer function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentFunction {
    Zero,
    Linear {
        coeff: f64,
    },
    /// `1` on the set, `−∞` off it.
    Indicator {
        set: PropertySet,
    },
    Piecewise(PiecewiseMonotone),
}

impl ComponentFunction {
    pub fn linear(coeff: f64) -> Self {
        if coeff == 0.0 {
            ComponentFunction::Zero
        } else {
            ComponentFunction::Linear { coeff }
        }
    }

    pub fn indicator(set: PropertySet) -> Self {
        ComponentFunction::Indicator { set }
    }

    pub fn validate(&self) -> Result<(), TransferError> {
        match self {
            ComponentFunction::Linear { coeff } if !coeff.is_finite() => Err(TransferError::BadComponent(format!(
                "linear coefficient must be finite, got {coeff}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, x: f64) -> ExtReal {
        match self {
            ComponentFunction::Zero => ExtReal::ZERO,
            ComponentFunction::Linear { coeff } => ExtReal::from_f64(coeff * x),
            ComponentFunction::Indicator { set } => {
                if set.contains(x) {
                    ExtReal::ONE
                } else {
                    NegInf
                }
            }
            ComponentFunction::Piecewise(p) => p.evaluate(x),
        }
    }

    /// Whether the function takes a single value on all of ℝ.
    pub fn is_constant(&self) -> bool {
        match self {
            ComponentFunction::Zero => true,
            ComponentFunction::Linear { coeff } => *coeff == 0.0,
            ComponentFunction::Indicator { set } => set.is_empty() || set.is_everything(),
            ComponentFunction::Piecewise(p) => p.is_constant(),
        }
    }

    /// Finite points where the function changes regime.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ComponentFunction::Zero | ComponentFunction::Linear { .. } => Vec::new(),
            ComponentFunction::Indicator { set } => set.boundary_points(),
            ComponentFunction::Piecewise(p) => p.breakpoints().to_vec(),
        }
    }

    /// `[inf f, sup f]` over `interval`; infinite endpoints mean the
    /// interval is unbounded on that side.
    pub fn image(&self, interval: &ExtInterval) -> ExtInterval {
        match self {
            ComponentFunction::Zero => ExtInterval::point(ExtReal::ZERO),
            ComponentFunction::Linear { coeff } => {
                let (a, b) = (scale(interval.lo(), *coeff), scale(interval.hi(), *coeff));
                ExtInterval::new(a.min(b), a.max(b)).expect("ordered")
            }
            ComponentFunction::Indicator { set } => {
                let (l, u) = (interval.lo().to_f64(), interval.hi().to_f64());
                let lo = if set.covers(l, u) { ExtReal::ONE } else { NegInf };
                let hi = if set.intersects(l, u) { ExtReal::ONE } else { NegInf };
                ExtInterval::new(lo, hi).expect("covering implies intersecting")
            }
            ComponentFunction::Piecewise(p) => p.image(interval),
        }
    }

    /// `max − min` of the image, with `∞ − ∞ = 0`.
    pub fn image_length(&self, interval: &ExtInterval) -> ExtReal {
        self.image(interval).length()
    }
}

fn scale(x: ExtReal, coeff: f64) -> ExtReal {
    if coeff >= 0.0 {
        x.scale(coeff)
    } else {
        -x.scale(-coeff)
    }
}

/// Exact image of a component over a finite interval.
pub fn component_interval_image(f: &ComponentFunction, interval: &ExtInterval) -> Result<ExtInterval, TransferError> {
    if !interval.has_finite_endpoints() {
        return Err(TransferError::InfiniteEndpoint);
    }
    Ok(f.image(interval))
}
