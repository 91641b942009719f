//! Observation panels and the canonical ordering of variable pairs.

use crate::error::{Error, Result};

/// A `T x p` block of observations, stored row-major, with one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    data: Vec<f64>,
    labels: Vec<String>,
    rows: usize,
    cols: usize,
}

impl Panel {
    /// Builds a panel from row-major data. Requires `T >= 3`, `p >= 2` and
    /// finite entries.
    pub fn new(data: Vec<f64>, rows: usize, cols: usize, labels: Vec<String>) -> Result<Self> {
        if rows < 3 {
            return Err(Error::InvalidPanel(format!(
                "need at least 3 rows, got {rows}"
            )));
        }
        if cols < 2 {
            return Err(Error::InvalidPanel(format!(
                "need at least 2 columns, got {cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidPanel(format!(
                "data length {} does not match {rows} x {cols}",
                data.len()
            )));
        }
        if labels.len() != cols {
            return Err(Error::InvalidPanel(format!(
                "{} labels for {cols} columns",
                labels.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel(format!(
                "non-finite value at row {}, column {}",
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(Self {
            data,
            labels,
            rows,
            cols,
        })
    }

    /// Builds a panel with default labels `X1..Xp`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidPanel(format!("row {} is ragged", bad + 1)));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(data, rows.len(), cols, default_labels(cols))
    }

    /// Builds a panel from column vectors with default labels.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidPanel("columns differ in length".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for t in 0..rows {
            data.extend(columns.iter().map(|c| c[t]));
        }
        Self::new(data, rows, cols, default_labels(cols))
    }

    /// Unchecked construction for resampled panels whose rows were copied from
    /// a valid panel. Only the length requirement is relaxed to `rows >= 1`.
    pub(crate) fn from_parts(
        data: Vec<f64>,
        rows: usize,
        cols: usize,
        labels: Vec<String>,
    ) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self {
            data,
            labels,
            rows,
            cols,
        }
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Number of variables `p`.
    pub fn dim(&self) -> usize {
        self.cols
    }

    /// Number of unordered pairs `p(p-1)/2`.
    pub fn n_pairs(&self) -> usize {
        self.cols * (self.cols - 1) / 2
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows `start..end` as a new panel (labels preserved). The slice must
    /// still satisfy the panel invariants.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.rows {
            return Err(Error::InvalidPanel(format!(
                "row range {start}..{end} out of bounds for {} rows",
                self.rows
            )));
        }
        Self::new(
            self.data[start * self.cols..end * self.cols].to_vec(),
            end - start,
            self.cols,
            self.labels.clone(),
        )
    }

    /// Applies `f(column, value)` to every entry.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % self.cols, v))
            .collect();
        Self::new(data, self.rows, self.cols, self.labels.clone())
    }
}

fn default_labels(cols: usize) -> Vec<String> {
    (1..=cols).map(|i| format!("X{i}")).collect()
}

/// Lexicographic enumeration of the unordered pairs `(i, j)`, `i < j`.
///
/// Indices are zero-based; position `m` in [`PairIndex::pairs`] is the
/// component of every pair-indexed vector in this crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    p: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn new(p: usize) -> Self {
        let pairs = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .collect();
        Self { p, pairs }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Position of the pair `{i, j}` (either order).
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b || b >= self.p {
            return None;
        }
        // Pairs starting with row r < a contribute (p - 1 - r) entries each.
        Some(a * (2 * self.p - a - 1) / 2 + (b - a - 1))
    }

    /// Labels of the form `A-B` for every pair.
    pub fn labels(&self, names: &[String]) -> Vec<String> {
        self.pairs
            .iter()
            .map(|&(i, j)| format!("{}-{}", names[i], names[j]))
            .collect()
    }
}
