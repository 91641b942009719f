//! Prefix correlation paths and the weighted fluctuation process built on them.
//!
//! For a panel of length `T`, the prefix correlation of pair `(i, j)` at
//! `k` is the Pearson correlation of the first `k` rows. The fluctuation
//! process compares every prefix vector with the full-sample vector:
//!
//! ```text
//! D(k) = (k / sqrt(T)) * || R (rho_k - rho_T) ||_1,   k = 2..T
//! ```
//!
//! where `R` is the identity for the raw statistic and an inverse square
//! root of the bootstrap covariance estimate for the standardized one.

use nalgebra::DMatrix;

use crate::bootstrap::EMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::{PairIndex, Panel};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `sqrt(a * b)`, exact for `a == b` unless the product overflows.
fn norm_product(a: f64, b: f64) -> f64 {
    let prod = (a * b).sqrt();
    if prod.is_finite() && prod > 0.0 {
        prod
    } else {
        a.sqrt() * b.sqrt()
    }
}

/// Prefix correlations for `k = 2..T`, one row per prefix length.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrPath {
    t: usize,
    pairs: PairIndex,
    rho: Vec<f64>,
    defined: Vec<bool>,
}

impl CorrPath {
    /// Sample size `T` of the underlying panel.
    pub fn sample_size(&self) -> usize {
        self.t
    }

    pub fn pairs(&self) -> &PairIndex {
        &self.pairs
    }

    /// Number of pairs `d`.
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Correlation vector of the first `k` rows, `2 <= k <= T`.
    pub fn at(&self, k: usize) -> &[f64] {
        let d = self.n_pairs();
        let r = k - 2;
        &self.rho[r * d..(r + 1) * d]
    }

    /// Definedness mask of the prefix of length `k`.
    pub fn defined_at(&self, k: usize) -> &[bool] {
        let d = self.n_pairs();
        let r = k - 2;
        &self.defined[r * d..(r + 1) * d]
    }

    /// Whether every pair has a defined correlation at prefix length `k`.
    pub fn row_defined(&self, k: usize) -> bool {
        self.defined_at(k).iter().all(|&b| b)
    }

    /// Full-sample correlations, `None` if any pair is undefined.
    pub fn full_sample(&self) -> Option<&[f64]> {
        self.row_defined(self.t).then(|| self.at(self.t))
    }
}

/// Computes every prefix correlation in one streaming pass.
///
/// Means and co-moments are updated with Welford recurrences; co-moment
/// increments go through compensated summation. Each column is shifted by its
/// first observation beforehand, which leaves correlations unchanged and keeps
/// the recurrences well conditioned for data far from zero. Prefixes where either
/// variable has zero sum of squares are marked undefined and stored as NaN.
pub fn prefix_correlations(panel: &Panel) -> CorrPath {
    let t = panel.len();
    let p = panel.dim();
    let pairs = PairIndex::new(p);
    let d = pairs.len();

    let mut mean = vec![0.0; p];
    let mut delta = vec![0.0; p];
    let mut resid = vec![0.0; p];
    let mut var = vec![CompensatedSum::default(); p];
    let mut cov = vec![CompensatedSum::default(); d];

    let origin = panel.row(0).to_vec();
    let mut rho = Vec::with_capacity((t - 1) * d);
    let mut defined = Vec::with_capacity((t - 1) * d);

    for (idx, row) in panel.rows().enumerate() {
        let k = (idx + 1) as f64;
        for i in 0..p {
            let x = row[i] - origin[i];
            delta[i] = x - mean[i];
            mean[i] += delta[i] / k;
            resid[i] = x - mean[i];
            var[i].add(delta[i] * resid[i]);
        }
        for (m, &(i, j)) in pairs.pairs().iter().enumerate() {
            cov[m].add(delta[i] * resid[j]);
        }
        if idx == 0 {
            continue;
        }
        for (m, &(i, j)) in pairs.pairs().iter().enumerate() {
            let (vi, vj) = (var[i].value(), var[j].value());
            if vi > 0.0 && vj > 0.0 {
                let r = cov[m].value() / norm_product(vi, vj);
                rho.push(r.clamp(-1.0, 1.0));
                defined.push(true);
            } else {
                rho.push(f64::NAN);
                defined.push(false);
            }
        }
    }

    CorrPath {
        t,
        pairs,
        rho,
        defined,
    }
}

/// Two-pass Pearson correlations of the full panel, `None` if any column is
/// constant.
pub fn full_sample_correlations(panel: &Panel) -> Option<Vec<f64>> {
    let p = panel.dim();
    let n = panel.len() as f64;
    let mut mean = vec![0.0; p];
    for row in panel.rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let pairs = PairIndex::new(p);
    let mut var = vec![0.0; p];
    let mut cov = vec![0.0; pairs.len()];
    let mut centered = vec![0.0; p];
    for row in panel.rows() {
        for i in 0..p {
            centered[i] = row[i] - mean[i];
            var[i] += centered[i] * centered[i];
        }
        for (c, &(i, j)) in cov.iter_mut().zip(pairs.pairs()) {
            *c += centered[i] * centered[j];
        }
    }
    if var.iter().any(|&v| v <= 0.0) {
        return None;
    }
    Some(
        pairs
            .pairs()
            .iter()
            .zip(&cov)
            .map(|(&(i, j), &c)| (c / norm_product(var[i], var[j])).clamp(-1.0, 1.0))
            .collect(),
    )
}

/// The weighted fluctuation process `D(k)` for `k = 2..T`.
///
/// Entries for prefixes with an undefined correlation are excluded from the
/// maximum; they are stored as `0.0` with `defined == false`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationProcess {
    values: Vec<f64>,
    defined: Vec<bool>,
    standardized: bool,
}

impl DeviationProcess {
    /// Builds a process from explicit values (index 0 is `k = 2`).
    pub fn from_values(values: Vec<f64>, standardized: bool) -> Self {
        let defined = vec![true; values.len()];
        Self {
            values,
            defined,
            standardized,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn defined(&self) -> &[bool] {
        &self.defined
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at prefix length `k`, `None` if that prefix was skipped.
    pub fn at(&self, k: usize) -> Option<f64> {
        let r = k.checked_sub(2)?;
        (*self.defined.get(r)?).then(|| self.values[r])
    }

    /// `(k, value)` pairs over defined prefixes.
    pub fn iter_defined(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.defined)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(|(r, (&v, _))| (r + 2, v))
    }

    /// Maximum over defined prefixes.
    pub fn max(&self) -> f64 {
        self.iter_defined()
            .map(|(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Forms `(k / sqrt(T)) * ||R (rho_k - rho_T)||_1` for every prefix.
///
/// `e_inv_sqrt`, when given, is the `d x d` standardizing matrix `R`.
pub fn deviation_process(
    corr: &CorrPath,
    e_inv_sqrt: Option<&DMatrix<f64>>,
) -> Result<DeviationProcess> {
    let d = corr.n_pairs();
    if let Some(m) = e_inv_sqrt {
        if m.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows(),
            });
        }
        if m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.ncols(),
            });
        }
    }
    let full = corr.full_sample().ok_or_else(|| {
        Error::DegenerateInput("a column is constant over the full sample".into())
    })?;

    let t = corr.sample_size();
    let scale = (t as f64).sqrt();
    let mut diff = vec![0.0; d];
    let mut values = Vec::with_capacity(t - 1);
    let mut defined = Vec::with_capacity(t - 1);

    for k in 2..=t {
        if !corr.row_defined(k) {
            values.push(0.0);
            defined.push(false);
            continue;
        }
        for ((dst, &r), &f) in diff.iter_mut().zip(corr.at(k)).zip(full) {
            *dst = r - f;
        }
        let norm: f64 = match e_inv_sqrt {
            None => diff.iter().map(|x| x.abs()).sum(),
            Some(m) => (0..d)
                .map(|a| (0..d).map(|b| m[(a, b)] * diff[b]).sum::<f64>().abs())
                .sum(),
        };
        values.push(k as f64 / scale * norm);
        defined.push(true);
    }

    Ok(DeviationProcess {
        values,
        defined,
        standardized: e_inv_sqrt.is_some(),
    })
}

/// The raw statistic `Q_T`, the maximum of the unstandardized process.
pub fn q_statistic(panel: &Panel) -> Result<f64> {
    let corr = prefix_correlations(panel);
    Ok(deviation_process(&corr, None)?.max())
}

/// Maximum of the process standardized by the inverse square root of `e_hat`.
pub fn standardized_statistic(panel: &Panel, e_hat: &EMatrix) -> Result<f64> {
    let corr = prefix_correlations(panel);
    let root = linalg::inv_sqrt(e_hat.matrix(), linalg::DEFAULT_RIDGE)?;
    Ok(deviation_process(&corr, Some(&root.matrix))?.max())
}

/// Smallest prefix length `k` at which the process attains its maximum.
///
/// Falls back to `k = 2` if no prefix is defined.
pub fn changepoint_estimate(process: &DeviationProcess) -> usize {
    let mut best = (2, f64::NEG_INFINITY);
    for (k, v) in process.iter_defined() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best.0
}
