//! Finite unions of real intervals with explicit open/closed endpoints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TransferError;
use crate::extreal::ExtReal;

/// One real interval. Infinite endpoints are always open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealInterval {
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
}

impl RealInterval {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Result<Self, TransferError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(TransferError::BadSet("NaN endpoint".into()));
        }
        let lo_closed = lo_closed && lo.is_finite();
        let hi_closed = hi_closed && hi.is_finite();
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(TransferError::BadSet(format!("empty interval with endpoints {lo}, {hi}")));
        }
        if lo > hi || (lo == hi && !(lo_closed && hi_closed)) {
            return Err(TransferError::BadSet(format!("empty interval with endpoints {lo}, {hi}")));
        }
        Ok(Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, false, hi, false).expect("valid open interval")
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, true, hi, true).expect("valid closed interval")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = self.lo < x || (self.lo_closed && self.lo == x);
        let below = x < self.hi || (self.hi_closed && self.hi == x);
        above && below
    }

    /// Whether the closed extended interval `[l, u]` (infinite ends
    /// meaning unbounded) lies inside this interval.
    fn covers(&self, l: f64, u: f64) -> bool {
        let left = self.lo < l || (self.lo == l && (self.lo_closed || l.is_infinite()));
        let right = u < self.hi || (u == self.hi && (self.hi_closed || u.is_infinite()));
        left && right
    }

    fn intersects(&self, l: f64, u: f64) -> bool {
        let lower = self.lo.max(l);
        let upper = self.hi.min(u);
        if lower < upper {
            true
        } else if lower == upper && lower.is_finite() {
            self.contains(lower) && l <= lower && lower <= u
        } else {
            false
        }
    }
}

impl fmt::Display for RealInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        let close = if self.hi_closed { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", ExtReal::from_f64(self.lo), ExtReal::from_f64(self.hi))
    }
}

impl FromStr for RealInterval {
    type Err = TransferError;

    /// Parses `(a, b)`, `[a, b]`, `(a, b]` or `[a, b)`; `inf`/`-inf` allowed.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TransferError::BadSet(format!("cannot parse interval {s:?}"));
        let t = s.trim();
        let lo_closed = match t.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(bad()),
        };
        let hi_closed = match t.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(bad()),
        };
        let inner = &t[1..t.len() - 1];
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let lo: ExtReal = a.parse().map_err(|_| bad())?;
        let hi: ExtReal = b.parse().map_err(|_| bad())?;
        RealInterval::new(lo.to_f64(), lo_closed, hi.to_f64(), hi_closed)
    }
}

/// Distance from a point to the other side of a set's boundary, and
/// whether reaching that boundary point already crosses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub distance: f64,
    /// Every closed window of length `w` containing the point stays on its
    /// side iff `w < distance` when strict, `w ≤ distance` otherwise.
    pub strict: bool,
}

/// A finite union of intervals, kept sorted, disjoint and merged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PropertySet {
    parts: Vec<RealInterval>,
}

impl PropertySet {
    pub fn new(parts: impl IntoIterator<Item = RealInterval>) -> Self {
        let mut parts: Vec<RealInterval> = parts.into_iter().collect();
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<RealInterval> = Vec::with_capacity(parts.len());
        for p in parts {
            if let Some(last) = merged.last_mut() {
                let touches = p.lo < last.hi || (p.lo == last.hi && (last.hi_closed || p.lo_closed));
                if touches {
                    if p.hi > last.hi || (p.hi == last.hi && p.hi_closed) {
                        last.hi = p.hi;
                        last.hi_closed = p.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(p);
        }
        Self { parts: merged }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `(θ, ∞)`.
    pub fn above(theta: f64) -> Self {
        Self::new([RealInterval::open(theta, f64::INFINITY)])
    }

    pub fn parts(&self) -> &[RealInterval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_everything(&self) -> bool {
        matches!(self.parts.as_slice(), [p] if p.lo == f64::NEG_INFINITY && p.hi == f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    /// `[l, u] ⊆ C`; infinite ends of `[l, u]` mean unbounded.
    pub fn covers(&self, l: f64, u: f64) -> bool {
        self.parts.iter().any(|p| p.covers(l, u))
    }

    /// `[l, u] ∩ C ≠ ∅`.
    pub fn intersects(&self, l: f64, u: f64) -> bool {
        self.parts.iter().any(|p| p.intersects(l, u))
    }

    /// Finite endpoints of the parts, ascending.
    pub fn boundary_points(&self) -> Vec<f64> {
        self.parts.iter().flat_map(|p| [p.lo, p.hi]).filter(|x| x.is_finite()).collect()
    }

    /// Distance from `mu` to the nearest point on the other side of the
    /// boundary, i.e. to `Cᶜ` when `mu ∈ C` and to `C` otherwise.
    pub fn margin(&self, mu: f64) -> Margin {
        // each side is (distance, strict)
        let mut sides: Vec<(f64, bool)> = Vec::with_capacity(2);
        if let Some(p) = self.parts.iter().find(|p| p.contains(mu)) {
            if p.lo.is_finite() {
                sides.push((mu - p.lo, !p.lo_closed));
            }
            if p.hi.is_finite() {
                sides.push((p.hi - mu, !p.hi_closed));
            }
        } else {
            // mu sits in a gap of the complement; the neighbouring parts
            // bound it, and a closed neighbour endpoint belongs to C
            if let Some(left) = self.parts.iter().rev().find(|p| p.hi <= mu) {
                sides.push((mu - left.hi, left.hi_closed));
            }
            if let Some(right) = self.parts.iter().find(|p| p.lo >= mu) {
                sides.push((right.lo - mu, right.lo_closed));
            }
        }
        let distance = sides.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let strict = sides.iter().any(|&(d, s)| d == distance && s);
        Margin { distance, strict }
    }
}

impl fmt::Display for PropertySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("{}");
        }
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                f.write_str(" U ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<String>> for PropertySet {
    type Error = TransferError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        let parts = v.iter().map(|s| s.parse()).collect::<Result<Vec<RealInterval>, _>>()?;
        Ok(PropertySet::new(parts))
    }
}

impl From<PropertySet> for Vec<String> {
    fn from(s: PropertySet) -> Self {
        s.parts.iter().map(ToString::to_string).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let i: RealInterval = "(0, inf)".parse().unwrap();
        assert_eq!(i, RealInterval::open(0.0, f64::INFINITY));
        assert_eq!(i.to_string(), "(0, inf)");
        let j: RealInterval = "[-1.5, 2)".parse().unwrap();
        assert!(j.contains(-1.5) && !j.contains(2.0));
        // infinite ends are forced open
        let k: RealInterval = "[-inf, 0]".parse().unwrap();
        assert_eq!(k.to_string(), "(-inf, 0]");
        assert!("[1, 0]".parse::<RealInterval>().is_err());
        assert!("(1, 1]".parse::<RealInterval>().is_err());
        assert!("1, 2".parse::<RealInterval>().is_err());
        assert!("[nan, 2]".parse::<RealInterval>().is_err());
    }

    #[test]
    fn merging() {
        let s = PropertySet::new([RealInterval::new(1.0, false, 2.0, true).unwrap(), RealInterval::open(0.0, 1.0)]);
        // 1 itself is excluded from both, so they stay apart
        assert_eq!(s.parts().len(), 2);
        let t = PropertySet::new([RealInterval::new(0.0, false, 1.0, true).unwrap(), RealInterval::open(1.0, 2.0)]);
        assert_eq!(t.parts(), &[RealInterval::open(0.0, 2.0)]);
        let u = PropertySet::new([RealInterval::closed(0.0, 3.0), RealInterval::open(1.0, 2.0)]);
        assert_eq!(u.parts(), &[RealInterval::closed(0.0, 3.0)]);
    }

    #[test]
    fn cover_and_intersect() {
        let c = PropertySet::above(0.0);
        assert!(c.covers(0.5, 1.0));
        assert!(!c.covers(0.0, 1.0));
        assert!(c.covers(0.5, f64::INFINITY));
        assert!(c.intersects(-1.0, 1.0));
        assert!(!c.intersects(-1.0, 0.0));
        let closed = PropertySet::new([RealInterval::new(0.0, true, f64::INFINITY, false).unwrap()]);
        assert!(closed.intersects(-1.0, 0.0));
        assert!(closed.covers(0.0, 1.0));
        assert!(PropertySet::new([RealInterval::open(f64::NEG_INFINITY, f64::INFINITY)]).is_everything());
    }

    #[test]
    fn margins() {
        let c = PropertySet::above(0.0);
        assert_eq!(
            c.margin(0.5),
            Margin {
                distance: 0.5,
                strict: true
            }
        );
        assert_eq!(
            c.margin(-0.5),
            Margin {
                distance: 0.5,
                strict: false
            }
        );
        assert_eq!(c.margin(0.0).distance, 0.0);
        let band = PropertySet::new([RealInterval::new(0.0, true, 1.0, false).unwrap()]);
        assert_eq!(
            band.margin(0.25),
            Margin {
                distance: 0.25,
                strict: false
            }
        );
        assert_eq!(
            band.margin(0.75),
            Margin {
                distance: 0.25,
                strict: true
            }
        );
        assert_eq!(
            band.margin(0.5),
            Margin {
                distance: 0.5,
                strict: true
            }
        );
        assert_eq!(
            band.margin(3.0),
            Margin {
                distance: 2.0,
                strict: false
            }
        );
        assert_eq!(PropertySet::empty().margin(1.0).distance, f64::INFINITY);
    }

    #[test]
    fn serde_as_strings() {
        let s: PropertySet = serde_json::from_str(r#"["(0, inf)", "[-2, -1]"]"#).unwrap();
        assert_eq!(s.to_string(), "[-2, -1] U (0, inf)");
        let back: PropertySet = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
