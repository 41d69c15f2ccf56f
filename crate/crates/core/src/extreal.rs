//! Extended-real scalars and closed intervals.
//!
//! `ExtReal` is `ℝ ∪ {−∞, +∞}` with the subtraction convention `∞ − ∞ = 0`
//! (and likewise for `−∞`). NaN never enters: constructors reject it, and
//! every operation defined here is total on valid inputs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtRealError {
    #[error("NaN is not an extended real")]
    NaN,
    #[error("cannot parse {0:?} as an extended real (expected \"inf\", \"-inf\" or a decimal)")]
    Parse(String),
    #[error("interval lower bound {lo} exceeds upper bound {hi}")]
    Inverted { lo: ExtReal, hi: ExtReal },
}

/// An element of the extended real line.
///
/// Variant order gives the total order `NegInf < Finite(_) < PosInf`.
/// Finite payloads are never NaN and never `-0.0`.
#[derive(Debug, Clone, Copy)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtReal::{NegInf, PosInf};

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);
    pub const ONE: ExtReal = ExtReal::Finite(1.0);

    /// Maps `±inf` to the infinite variants and rejects NaN.
    pub fn new(x: f64) -> Result<Self, ExtRealError> {
        if x.is_nan() {
            Err(ExtRealError::NaN)
        } else if x == f64::INFINITY {
            Ok(PosInf)
        } else if x == f64::NEG_INFINITY {
            Ok(NegInf)
        } else {
            // normalise -0.0 so that equality and bit equality coincide
            Ok(ExtReal::Finite(x + 0.0))
        }
    }

    /// Like [`ExtReal::new`] but panics on NaN. For values produced by
    /// arithmetic that cannot yield NaN.
    pub fn from_f64(x: f64) -> Self {
        Self::new(x).expect("NaN reached extended-real arithmetic")
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// The value as an `f64`, with infinities mapped to `±f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            PosInf => f64::INFINITY,
        }
    }

    pub fn abs(self) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x.abs()),
            _ => PosInf,
        }
    }

    /// Addition where `−∞` absorbs everything, including `+∞`.
    /// This is the sum used for lower confidence bounds.
    pub fn add_lower(self, other: Self) -> Self {
        match (self, other) {
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::from_f64(x + y),
        }
    }

    /// Addition where `+∞` absorbs everything, including `−∞`.
    /// This is the sum used for upper confidence bounds.
    pub fn add_upper(self, other: Self) -> Self {
        match (self, other) {
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
            (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::from_f64(x + y),
        }
    }

    /// Adds a finite shift; infinities are unchanged.
    pub fn shift(self, by: f64) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(x + by),
            inf => inf,
        }
    }

    /// Multiplies by a finite non-negative factor. `0 · ±∞ = 0`.
    pub fn scale(self, factor: f64) -> Self {
        debug_assert!(factor >= 0.0 && factor.is_finite());
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(x * factor),
            _ if factor == 0.0 => ExtReal::ZERO,
            inf => inf,
        }
    }
}

impl std::ops::Neg for ExtReal {
    type Output = Self;

    fn neg(self) -> Self {
        match self {
            NegInf => PosInf,
            ExtReal::Finite(x) => ExtReal::from_f64(-x),
            PosInf => NegInf,
        }
    }
}

/// `x − y` with `∞ − ∞ = 0` and `(−∞) − (−∞) = 0`.
impl std::ops::Sub for ExtReal {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        match (self, other) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::from_f64(x - y),
            (PosInf, PosInf) | (NegInf, NegInf) => ExtReal::ZERO,
            (PosInf, _) | (_, NegInf) => PosInf,
            (NegInf, _) | (_, PosInf) => NegInf,
        }
    }
}

/// Division by a finite positive divisor.
impl std::ops::Div<f64> for ExtReal {
    type Output = Self;

    fn div(self, divisor: f64) -> Self {
        debug_assert!(divisor > 0.0 && divisor.is_finite());
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(x / divisor),
            inf => inf,
        }
    }
}

/// Free-function form of `x - y`.
pub fn ext_sub(x: ExtReal, y: ExtReal) -> ExtReal {
    x - y
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        fn rank(x: &ExtReal) -> u8 {
            match x {
                NegInf => 0,
                ExtReal::Finite(_) => 1,
                PosInf => 2,
            }
        }
        match (self, other) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => x.total_cmp(y),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl std::hash::Hash for ExtReal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            NegInf => state.write_u8(0),
            ExtReal::Finite(x) => {
                state.write_u8(1);
                state.write_u64(x.to_bits());
            }
            PosInf => state.write_u8(2),
        }
    }
}

impl From<u32> for ExtReal {
    fn from(x: u32) -> Self {
        ExtReal::Finite(f64::from(x))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => f.write_str("-inf"),
            PosInf => f.write_str("inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = ExtRealError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(PosInf),
            "-inf" | "-infinity" => Ok(NegInf),
            t => {
                // only plain decimal literals; f64::from_str would also take "nan"
                let ok = !t.is_empty() && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
                if !ok {
                    return Err(ExtRealError::Parse(s.to_owned()));
                }
                let x: f64 = t.parse().map_err(|_| ExtRealError::Parse(s.to_owned()))?;
                ExtReal::new(x)
            }
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            inf => serializer.serialize_str(&inf.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtRealVisitor;

        impl Visitor<'_> for ExtRealVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                ExtReal::new(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExtRealVisitor)
    }
}

/// A closed interval `[lo, hi]` over the extended reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtInterval {
    lo: ExtReal,
    hi: ExtReal,
}

impl ExtInterval {
    pub const EVERYTHING: ExtInterval = ExtInterval { lo: NegInf, hi: PosInf };

    pub fn new(lo: ExtReal, hi: ExtReal) -> Result<Self, ExtRealError> {
        if lo > hi {
            return Err(ExtRealError::Inverted { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Finite interval constructor; panics on NaN or inverted bounds.
    pub fn finite(lo: f64, hi: f64) -> Self {
        Self::new(ExtReal::from_f64(lo), ExtReal::from_f64(hi)).expect("invalid interval")
    }

    pub fn point(x: ExtReal) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn lo(&self) -> ExtReal {
        self.lo
    }

    pub fn hi(&self) -> ExtReal {
        self.hi
    }

    /// `hi − lo` under the extended-real subtraction convention.
    pub fn length(&self) -> ExtReal {
        self.hi - self.lo
    }

    pub fn contains(&self, x: ExtReal) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &ExtInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn has_finite_endpoints(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

impl fmt::Display for ExtInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Free-function form of [`ExtInterval::length`].
pub fn interval_length(interval: &ExtInterval) -> ExtReal {
    interval.length()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fin(x: f64) -> ExtReal {
        ExtReal::from_f64(x)
    }

    #[test]
    fn subtraction_convention() {
        assert_eq!(ext_sub(PosInf, PosInf), ExtReal::ZERO);
        assert_eq!(ext_sub(NegInf, NegInf), ExtReal::ZERO);
        assert_eq!(ext_sub(fin(3.0), fin(1.0)), fin(2.0));
        assert_eq!(ext_sub(fin(1.0), NegInf), PosInf);
        assert_eq!(ext_sub(PosInf, fin(7.0)), PosInf);
        assert_eq!(ext_sub(NegInf, PosInf), NegInf);
    }

    #[test]
    fn lengths() {
        assert_eq!(ExtInterval::finite(0.2, 0.8).length(), fin(0.8 - 0.2));
        assert_eq!(ExtInterval::point(NegInf).length(), ExtReal::ZERO);
        assert_eq!(ExtInterval::new(NegInf, fin(1.0)).unwrap().length(), PosInf);
        assert_eq!(ExtInterval::EVERYTHING.length(), PosInf);
    }

    #[test]
    fn rejects_nan_and_inversion() {
        assert_eq!(ExtReal::new(f64::NAN), Err(ExtRealError::NaN));
        assert!("nan".parse::<ExtReal>().is_err());
        assert!("NaN".parse::<ExtReal>().is_err());
        assert!(ExtInterval::new(fin(1.0), fin(0.0)).is_err());
        assert!(ExtInterval::new(PosInf, NegInf).is_err());
    }

    #[test]
    fn negative_zero_is_zero() {
        let z = ExtReal::new(-0.0).unwrap();
        assert_eq!(z.finite().unwrap().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("inf".parse::<ExtReal>().unwrap(), PosInf);
        assert_eq!("-inf".parse::<ExtReal>().unwrap(), NegInf);
        assert_eq!(" 0.25 ".parse::<ExtReal>().unwrap(), fin(0.25));
        assert_eq!("-1e3".parse::<ExtReal>().unwrap(), fin(-1000.0));
        assert!("abc".parse::<ExtReal>().is_err());
        assert_eq!(PosInf.to_string(), "inf");
        assert_eq!(NegInf.to_string(), "-inf");
    }

    #[test]
    fn absorbing_sums() {
        assert_eq!(NegInf.add_lower(PosInf), NegInf);
        assert_eq!(NegInf.add_upper(PosInf), PosInf);
        assert_eq!(fin(1.0).add_lower(fin(2.0)), fin(3.0));
        assert_eq!(NegInf.shift(0.5), NegInf);
    }

    #[test]
    fn json_round_trip() {
        let xs = vec![NegInf, fin(0.5), PosInf];
        let s = serde_json::to_string(&xs).unwrap();
        assert_eq!(s, r#"["-inf",0.5,"inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, xs);
    }

    fn any_ext() -> impl Strategy<Value = ExtReal> {
        prop_oneof![
            1 => Just(NegInf),
            1 => Just(PosInf),
            8 => (-1e6f64..1e6).prop_map(fin),
        ]
    }

    proptest! {
        #[test]
        fn self_difference_is_zero(x in any_ext()) {
            prop_assert_eq!(x - x, ExtReal::ZERO);
        }

        #[test]
        fn finite_subtraction_is_antisymmetric(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            prop_assert_eq!(fin(x) - fin(y), -(fin(y) - fin(x)));
        }

        #[test]
        fn length_is_monotone_under_containment(mut v in proptest::collection::vec(any_ext(), 4)) {
            v.sort();
            let outer = ExtInterval::new(v[0], v[3]).unwrap();
            let inner = ExtInterval::new(v[1], v[2]).unwrap();
            prop_assert!(inner.is_subset_of(&outer));
            prop_assert!(inner.length() <= outer.length());
            prop_assert!(inner.length() >= ExtReal::ZERO);
        }

        #[test]
        fn sorting_is_deterministic(v in proptest::collection::vec(any_ext(), 0..20)) {
            let mut a = v.clone();
            let mut b = v.into_iter().rev().collect::<Vec<_>>();
            a.sort();
            b.sort();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn text_round_trip(x in any_ext()) {
            let back: ExtReal = x.to_string().parse().unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
