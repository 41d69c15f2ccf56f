//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's image or bound code: components are
//! evaluated pointwise from their own formulas and interval images come from
//! dense grids.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use transfer_bai::extreal::{ExtReal, NegInf};
use transfer_bai::transfer::{ComponentFunction, Piece, PiecewiseMonotone, PropertySet, RealInterval};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `δ + 3·sqrt(δ(1−δ)/N)`: the largest failure frequency consistent with a
/// true failure probability of `δ`, at three binomial standard deviations.
pub fn binomial_ceiling(delta: f64, n: u64) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / n as f64).sqrt()
}

/// A union of disjoint, non-touching intervals `(lo, lo_closed, hi, hi_closed)`.
#[derive(Debug, Clone)]
pub struct OracleSet {
    pub parts: Vec<(f64, bool, f64, bool)>,
}

impl OracleSet {
    pub fn contains(&self, x: f64) -> bool {
        self.parts
            .iter()
            .any(|&(lo, lc, hi, hc)| (lo < x || (lc && lo == x)) && (x < hi || (hc && x == hi)))
    }

    pub fn to_property_set(&self) -> PropertySet {
        let text = |x: f64| {
            if x == f64::INFINITY {
                "inf".to_owned()
            } else if x == f64::NEG_INFINITY {
                "-inf".to_owned()
            } else {
                format!("{x:?}")
            }
        };
        PropertySet::new(self.parts.iter().map(|&(lo, lc, hi, hc)| {
            let s = format!(
                "{}{}, {}{}",
                if lc { '[' } else { '(' },
                text(lo),
                text(hi),
                if hc { ']' } else { ')' }
            );
            s.parse::<RealInterval>().expect("valid interval text")
        }))
    }

    pub fn indicator(&self, x: f64) -> ExtReal {
        if self.contains(x) {
            ExtReal::ONE
        } else {
            NegInf
        }
    }
}

/// Random set with breakpoints on the `1/8` lattice in `[-4, 4]`.
pub fn random_lattice_set(r: &mut ChaCha8Rng) -> OracleSet {
    let n_parts = r.gen_range(1..=3);
    let mut pts: Vec<i32> = Vec::new();
    while pts.len() < 2 * n_parts {
        let p = r.gen_range(-32..=32);
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts.sort_unstable();
    // distinct sorted breakpoints, so consecutive parts never touch
    let mut parts: Vec<(f64, bool, f64, bool)> = pts
        .chunks(2)
        .map(|c| (f64::from(c[0]) / 8.0, r.gen_bool(0.5), f64::from(c[1]) / 8.0, r.gen_bool(0.5)))
        .collect();
    if r.gen_bool(0.2) {
        parts[0].0 = f64::NEG_INFINITY;
        parts[0].1 = false;
    }
    if r.gen_bool(0.2) {
        let last = parts.len() - 1;
        parts[last].2 = f64::INFINITY;
        parts[last].3 = false;
    }
    OracleSet { parts }
}

/// `[l, u]` on the `1/8` lattice in `[-5, 5]`, occasionally a single point.
pub fn random_lattice_interval(r: &mut ChaCha8Rng) -> (f64, f64) {
    let a = r.gen_range(-40..=40);
    let b = if r.gen_bool(0.05) { a } else { r.gen_range(-40..=40) };
    (f64::from(a.min(b)) / 8.0, f64::from(a.max(b)) / 8.0)
}

/// Grid over `[l, u]` with at least `min_points` points, hitting every
/// `1/8`-lattice point exactly when `l` and `u` are on that lattice.
pub fn lattice_grid(l: f64, u: f64, min_points: usize) -> Vec<f64> {
    let m = ((u - l) * 8.0).round() as usize;
    if m == 0 {
        return vec![l];
    }
    let c = min_points.div_ceil(m);
    let denom = (8 * c) as f64;
    (0..=m * c).map(|k| l + k as f64 / denom).collect()
}

/// Uniform grid over `[l, u]` including both ends.
pub fn uniform_grid(l: f64, u: f64, points: usize) -> Vec<f64> {
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|k| if k == steps { u } else { l + (u - l) * k as f64 / steps as f64 })
        .collect()
}

/// `(min, max)` of `f` over the grid.
pub fn grid_image(f: impl Fn(f64) -> ExtReal, grid: &[f64]) -> (ExtReal, ExtReal) {
    grid.iter()
        .map(|&x| f(x))
        .fold((ExtReal::from_f64(f64::INFINITY), NegInf), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// A piecewise function described independently of the library.
#[derive(Debug, Clone)]
pub struct OraclePiecewise {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Piece>,
}

impl OraclePiecewise {
    fn eval_piece(&self, k: usize, x: f64) -> f64 {
        match self.pieces[k] {
            Piece::Affine { slope, intercept } => slope * x + intercept,
            Piece::Exponential { scale, rate, offset } => scale * (rate * x).exp() + offset,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_piece(self.breakpoints.iter().filter(|&&b| b <= x).count(), x)
    }

    /// `(inf, sup)` over `grid`, adding both one-sided values at every
    /// breakpoint inside `(grid[0], grid[last]]`.
    pub fn grid_image(&self, grid: &[f64]) -> (f64, f64) {
        let (l, u) = (grid[0], grid[grid.len() - 1]);
        let mut values: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        for (k, &b) in self.breakpoints.iter().enumerate() {
            if l < b && b <= u {
                values.push(self.eval_piece(k, b));
                values.push(self.eval_piece(k + 1, b));
            }
        }
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Bound on `|f'|` over `[l, u]`.
    pub fn slope_bound(&self, l: f64, u: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| match *p {
                Piece::Affine { slope, .. } => slope.abs(),
                Piece::Exponential { scale, rate, .. } => (scale * rate).abs() * (rate * l).exp().max((rate * u).exp()),
            })
            .fold(0.0, f64::max)
    }

    pub fn to_component(&self) -> ComponentFunction {
        ComponentFunction::Piecewise(PiecewiseMonotone::new(self.breakpoints.clone(), self.pieces.clone()).expect("valid piecewise"))
    }
}

pub fn random_piecewise(r: &mut ChaCha8Rng) -> OraclePiecewise {
    let n_breaks = r.gen_range(0..=3);
    let mut breakpoints: Vec<f64> = (0..n_breaks).map(|_| r.gen_range(-3.0..3.0)).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let pieces = (0..=breakpoints.len())
        .map(|_| {
            if r.gen_bool(0.5) {
                Piece::Affine {
                    slope: r.gen_range(-3.0..3.0),
                    intercept: r.gen_range(-2.0..2.0),
                }
            } else {
                Piece::Exponential {
                    scale: r.gen_range(-2.0..2.0),
                    rate: r.gen_range(-1.0..1.0),
                    offset: r.gen_range(-1.0..1.0),
                }
            }
        })
        .collect();
    OraclePiecewise { breakpoints, pieces }
}

/// Random linear matrix with entries in `{-2, -1.5, …, 2}`, some zero.
pub fn random_matrix(r: &mut ChaCha8Rng, n_target: usize, n_source: usize) -> Vec<Vec<f64>> {
    (0..n_target)
        .map(|_| {
            (0..n_source)
                .map(|_| {
                    if r.gen_bool(0.3) {
                        0.0
                    } else {
                        f64::from(r.gen_range(-4..=4)) / 2.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Target means of a linear transfer, computed directly.
pub fn matrix_means(matrix: &[Vec<f64>], mu: &[f64]) -> Vec<f64> {
    matrix.iter().map(|row| row.iter().zip(mu).map(|(a, m)| a * m).sum()).collect()
}

/// Target means for property testing, computed directly: `−∞` unless every
/// member's mean lies in its set, in which case the member count.
pub fn property_means(sets: &[OracleSet], members: &[Vec<usize>], mu: &[f64]) -> Vec<ExtReal> {
    members
        .iter()
        .map(|m| {
            if m.iter().all(|&i| sets[i].contains(mu[i])) {
                ExtReal::from_f64(m.len() as f64)
            } else {
                NegInf
            }
        })
        .collect()
}
