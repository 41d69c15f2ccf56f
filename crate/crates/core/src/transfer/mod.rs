//! Additive transfer functions `ν_a = Σ_i f_{a,i}(μ_i)` and the target
//! confidence sequences they induce from source confidence intervals.

mod component;
mod sets;

pub use component::{component_interval_image, ComponentFunction, Piece, PiecewiseMonotone};
pub use sets::{Margin, PropertySet, RealInterval};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extreal::{ExtInterval, ExtReal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error("invalid property set: {0}")]
    BadSet(String),
    #[error("invalid component: {0}")]
    BadComponent(String),
    #[error("component image needs finite interval endpoints")]
    InfiniteEndpoint,
    #[error("expected {expected} source entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("target index {index} out of range (n_target = {n})")]
    TargetIndex { index: usize, n: usize },
    #[error("source index {index} out of range (n_source = {n})")]
    SourceIndex { index: usize, n: usize },
    #[error("transfer grid must have at least one source and one target")]
    EmptyGrid,
    #[error("row {row} has {got} components, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("{got} labels given for {n} targets")]
    LabelCount { n: usize, got: usize },
}

/// An `n_target × n_source` grid of component functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    n_source: usize,
    n_target: usize,
    // row-major: [a * n_source + i]
    components: Vec<ComponentFunction>,
    labels: Vec<String>,
}

impl TransferFunction {
    /// Builds from rows; labels default to `"1"`, `"2"`, ….
    pub fn new(rows: Vec<Vec<ComponentFunction>>) -> Result<Self, TransferError> {
        let n_target = rows.len();
        let n_source = rows.first().map_or(0, Vec::len);
        if n_target == 0 || n_source == 0 {
            return Err(TransferError::EmptyGrid);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n_source {
                return Err(TransferError::RaggedRow {
                    row,
                    expected: n_source,
                    got: r.len(),
                });
            }
            r.iter().try_for_each(ComponentFunction::validate)?;
        }
        let labels = (1..=n_target).map(|a| a.to_string()).collect();
        Ok(Self {
            n_source,
            n_target,
            components: rows.into_iter().flatten().collect(),
            labels,
        })
    }

    /// Linear transfer `ν = A μ`.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self, TransferError> {
        Self::new(
            matrix
                .iter()
                .map(|row| row.iter().map(|&c| ComponentFunction::linear(c)).collect())
                .collect(),
        )
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, TransferError> {
        if labels.len() != self.n_target {
            return Err(TransferError::LabelCount {
                n: self.n_target,
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    fn check_target(&self, a: usize) -> Result<(), TransferError> {
        if a < self.n_target {
            Ok(())
        } else {
            Err(TransferError::TargetIndex {
                index: a,
                n: self.n_target,
            })
        }
    }

    fn check_source(&self, i: usize) -> Result<(), TransferError> {
        if i < self.n_source {
            Ok(())
        } else {
            Err(TransferError::SourceIndex {
                index: i,
                n: self.n_source,
            })
        }
    }

    /// Panics on out-of-range indices.
    pub fn component(&self, a: usize, i: usize) -> &ComponentFunction {
        assert!(a < self.n_target && i < self.n_source);
        &self.components[a * self.n_source + i]
    }

    pub fn row(&self, a: usize) -> &[ComponentFunction] {
        &self.components[a * self.n_source..(a + 1) * self.n_source]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[ComponentFunction]> {
        self.components.chunks(self.n_source)
    }

    /// `ν_a` for every target, given source means.
    pub fn evaluate(&self, mu: &[f64]) -> Result<Vec<ExtReal>, TransferError> {
        self.check_len(mu.len())?;
        Ok(self
            .rows()
            .map(|row| row.iter().zip(mu).fold(ExtReal::ZERO, |acc, (f, &m)| acc.add_lower(f.evaluate(m))))
            .collect())
    }

    fn check_len(&self, got: usize) -> Result<(), TransferError> {
        if got == self.n_source {
            Ok(())
        } else {
            Err(TransferError::LengthMismatch {
                expected: self.n_source,
                got,
            })
        }
    }

    /// Target interval for row `a`: sum of component minima and maxima.
    pub fn target_bound(&self, a: usize, source_cis: &[ExtInterval]) -> ExtInterval {
        let (lo, hi) = self
            .row(a)
            .iter()
            .zip(source_cis)
            .fold((ExtReal::ZERO, ExtReal::ZERO), |(lo, hi), (f, ci)| {
                let img = f.image(ci);
                (lo.add_lower(img.lo()), hi.add_upper(img.hi()))
            });
        // lo ≤ hi holds termwise; the min/max only guards degenerate images
        ExtInterval::new(lo.min(hi), hi.max(lo)).expect("ordered")
    }

    /// Target confidence intervals from source confidence intervals.
    pub fn target_bounds(&self, source_cis: &[ExtInterval]) -> Result<Vec<ExtInterval>, TransferError> {
        self.check_len(source_cis.len())?;
        Ok((0..self.n_target).map(|a| self.target_bound(a, source_cis)).collect())
    }

    /// `L(i, a, t)`: width of component `(a, i)`'s image over `ci`.
    pub fn uncertainty_length(&self, a: usize, i: usize, ci: &ExtInterval) -> Result<ExtReal, TransferError> {
        self.check_target(a)?;
        self.check_source(i)?;
        Ok(self.component(a, i).image_length(ci))
    }

    /// Number of non-constant components in row `a`.
    pub fn sparsity(&self, a: usize) -> Result<usize, TransferError> {
        self.check_target(a)?;
        Ok(self.row(a).iter().filter(|f| !f.is_constant()).count())
    }
}

/// Free-function form of [`TransferFunction::target_bounds`].
pub fn target_bounds(tf: &TransferFunction, source_cis: &[ExtInterval]) -> Result<Vec<ExtInterval>, TransferError> {
    tf.target_bounds(source_cis)
}

/// Sum of two intervals under the lower/upper absorbing conventions.
pub fn interval_sum(x: &ExtInterval, y: &ExtInterval) -> ExtInterval {
    let lo = x.lo().add_lower(y.lo());
    let hi = x.hi().add_upper(y.hi());
    ExtInterval::new(lo.min(hi), hi.max(lo)).expect("ordered")
}
