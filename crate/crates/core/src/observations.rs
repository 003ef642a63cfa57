//! Sparse samples of a matrix: each observation reveals one entry.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Sample {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Self { row, col, value }
    }
}

/// Observations `(row, col, value)` of an `rows × cols` matrix. The same
/// entry may be observed several times.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    rows: usize,
    cols: usize,
    samples: Vec<Sample>,
}

impl ObservationSet {
    /// Validates dimensions and indices. An empty sample list is allowed
    /// (e.g. an empty test split); solvers reject it.
    pub fn new(rows: usize, cols: usize, samples: Vec<Sample>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if let Some(s) = samples.iter().find(|s| s.row >= rows || s.col >= cols) {
            return Err(invalid(format!(
                "sample ({}, {}) outside a {rows}x{cols} matrix",
                s.row, s.col
            )));
        }
        if let Some(s) = samples.iter().find(|s| !s.value.is_finite()) {
            return Err(invalid(format!("sample ({}, {}) has a non-finite value", s.row, s.col)));
        }
        Ok(Self { rows, cols, samples })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter()
    }

    /// Same grid, values replaced by `f(value)`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            samples: self
                .samples
                .iter()
                .map(|s| Sample::new(s.row, s.col, f(s.value)))
                .collect(),
        }
    }

    /// Samples at the given positions, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
        }
    }

    /// Predictions `M[row, col]` for every sample.
    pub fn predictions<'a>(&'a self, m: &'a DMatrix<f64>) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.samples.iter().map(move |s| (m[(s.row, s.col)], s.value))
    }

    /// Observations grouped by entry, in order of first appearance.
    pub(crate) fn group_by_entry(&self) -> Vec<EntryGroup> {
        let mut slot = vec![usize::MAX; self.rows * self.cols];
        let mut groups: Vec<EntryGroup> = Vec::new();
        for s in &self.samples {
            let idx = s.row + s.col * self.rows;
            if slot[idx] == usize::MAX {
                slot[idx] = groups.len();
                groups.push(EntryGroup {
                    row: s.row,
                    col: s.col,
                    labels: vec![s.value],
                });
            } else {
                groups[slot[idx]].labels.push(s.value);
            }
        }
        groups
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EntryGroup {
    pub row: usize,
    pub col: usize,
    pub labels: Vec<f64>,
}
