use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::{PairIndex, Panel};

/// Innovations discarded before the first retained observation.
pub const BURN_IN: usize = 50;

const PD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationLaw {
    Normal,
    StudentT3,
}

impl std::fmt::Display for InnovationLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InnovationLaw::Normal => "N",
            InnovationLaw::StudentT3 => "t",
        })
    }
}

/// A stationary `p`-variate process with given correlations and variances,
/// optionally passed through an MA(1) filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub p: usize,
    pub law: InnovationLaw,
    pub ma_coefficient: f64,
    pub base_correlation: Vec<f64>,
    pub variances: Vec<f64>,
    pub t: usize,
    pub seed: u64,
}

impl DgpSpec {
    /// Uncorrelated, unit-variance, serially independent normal data.
    pub fn new(p: usize, t: usize) -> Self {
        Self {
            p,
            law: InnovationLaw::Normal,
            ma_coefficient: 0.0,
            base_correlation: vec![0.0; p * p.saturating_sub(1) / 2],
            variances: vec![1.0; p],
            t,
            seed: 0,
        }
    }

    pub fn with_law(mut self, law: InnovationLaw) -> Self {
        self.law = law;
        self
    }

    pub fn with_ma(mut self, theta: f64) -> Self {
        self.ma_coefficient = theta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_correlation(mut self, rho: Vec<f64>) -> Self {
        self.base_correlation = rho;
        self
    }

    pub fn with_variances(mut self, v: Vec<f64>) -> Self {
        self.variances = v;
        self
    }

    pub fn n_pairs(&self) -> usize {
        self.p * (self.p - 1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidConfig(format!(
                "p must be >= 2, got {}",
                self.p
            )));
        }
        if self.t < 3 {
            return Err(Error::InvalidConfig(format!(
                "T must be >= 3, got {}",
                self.t
            )));
        }
        if !(0.0..1.0).contains(&self.ma_coefficient) {
            return Err(Error::InvalidConfig(format!(
                "MA coefficient must lie in [0, 1), got {}",
                self.ma_coefficient
            )));
        }
        if self.base_correlation.len() != self.n_pairs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_pairs(),
                got: self.base_correlation.len(),
            });
        }
        if self.variances.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: self.variances.len(),
            });
        }
        if self.variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("variances must be positive".into()));
        }
        correlation_matrix(self.p, &self.base_correlation).map(|_| ())
    }
}

/// A shift of the pair correlations from the row after `floor(location * T)`
/// onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakSpec {
    pub delta_rho: Vec<f64>,
    pub location: f64,
}

impl BreakSpec {
    /// Shift only the correlation of the first two variables.
    pub fn first_pair(p: usize, delta: f64) -> Self {
        let mut delta_rho = vec![0.0; p * (p - 1) / 2];
        delta_rho[0] = delta;
        Self {
            delta_rho,
            location: 0.5,
        }
    }

    /// Shift every pair correlation by the same amount.
    pub fn all_pairs(p: usize, delta: f64) -> Self {
        Self {
            delta_rho: vec![delta; p * (p - 1) / 2],
            location: 0.5,
        }
    }

    pub fn at(mut self, location: f64) -> Self {
        self.location = location;
        self
    }

    /// First zero-based row that follows the break.
    pub fn break_row(&self, t: usize) -> usize {
        (self.location * t as f64).floor() as usize
    }
}

/// Unit-diagonal correlation matrix from pair-ordered off-diagonals; fails
/// unless it is positive definite.
pub fn correlation_matrix(p: usize, rho: &[f64]) -> Result<DMatrix<f64>> {
    let pairs = PairIndex::new(p);
    if rho.len() != pairs.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            got: rho.len(),
        });
    }
    let mut m = DMatrix::identity(p, p);
    for (&(i, j), &r) in pairs.pairs().iter().zip(rho) {
        m[(i, j)] = r;
        m[(j, i)] = r;
    }
    if !rho.iter().all(|r| r.is_finite()) || !linalg::is_positive_definite(&m, PD_TOL)? {
        let lo = linalg::symmetric_eigenvalues(&m)
            .first()
            .copied()
            .unwrap_or(f64::NAN);
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok(m)
}

pub(crate) fn cholesky_factor(p: usize, rho: &[f64]) -> Result<DMatrix<f64>> {
    let m = correlation_matrix(p, rho)?;
    let lo = linalg::symmetric_eigenvalues(&m)[0];
    Cholesky::new(m)
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: lo })
}

/// Correlation segment starting at a zero-based row.
pub(crate) struct Segment {
    pub start_row: usize,
    pub factor: DMatrix<f64>,
}

/// Draws a panel whose innovations switch correlation factor at each
/// segment start. Variances, means and the MA filter are constant.
pub(crate) fn generate_segments<R: Rng + ?Sized>(
    dgp: &DgpSpec,
    segments: &[Segment],
    rng: &mut R,
) -> Result<Panel> {
    let p = dgp.p;
    let t = dgp.t;
    let sd: Vec<f64> = dgp.variances.iter().map(|v| v.sqrt()).collect();
    let theta = dgp.ma_coefficient;
    let ma_norm = 1.0 / (1.0 + theta * theta).sqrt();
    let chi = ChiSquared::new(3.0).expect("3 degrees of freedom");

    let mut prev = DVector::<f64>::zeros(p);
    let mut current = DVector::<f64>::zeros(p);
    let mut z = DVector::<f64>::zeros(p);
    let mut data = Vec::with_capacity(t * p);
    let mut seg = 0;

    for step in 0..BURN_IN + t {
        let row = step.checked_sub(BURN_IN);
        if let Some(r) = row {
            while seg + 1 < segments.len() && segments[seg + 1].start_row <= r {
                seg += 1;
            }
        }
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        current.gemv(1.0, &segments[seg].factor, &z, 0.0);
        if dgp.law == InnovationLaw::StudentT3 {
            // z / sqrt(chi2_3) is a t3 draw divided by sqrt(3): unit variance.
            let w: f64 = chi.sample(rng);
            current *= 1.0 / w.sqrt();
        }
        if row.is_some() {
            for i in 0..p {
                let eps = current[i] + theta * prev[i];
                data.push(eps * ma_norm * sd[i]);
            }
        }
        std::mem::swap(&mut prev, &mut current);
    }
    Panel::new(data, t, p, (1..=p).map(|i| format!("X{i}")).collect())
}

/// Draws one panel from `dgp`, with an optional correlation break.
///
/// Innovations are `L z` for the Cholesky factor `L` of the target
/// correlation matrix; Student t3 innovations divide by `sqrt(chi2_3)` so the
/// population correlation is unchanged and the variance is one. When
/// `brk` is given the factor switches at zero-based row `floor(z0 * T)`.
pub fn generate<R: Rng + ?Sized>(
    dgp: &DgpSpec,
    brk: Option<&BreakSpec>,
    rng: &mut R,
) -> Result<Panel> {
    dgp.validate()?;
    let mut segments = vec![Segment {
        start_row: 0,
        factor: cholesky_factor(dgp.p, &dgp.base_correlation)?,
    }];
    if let Some(b) = brk {
        if b.delta_rho.len() != dgp.n_pairs() {
            return Err(Error::DimensionMismatch {
                expected: dgp.n_pairs(),
                got: b.delta_rho.len(),
            });
        }
        if !(b.location > 0.0 && b.location < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "break location must lie in (0, 1), got {}",
                b.location
            )));
        }
        let post: Vec<f64> = dgp
            .base_correlation
            .iter()
            .zip(&b.delta_rho)
            .map(|(r, dr)| r + dr)
            .collect();
        segments.push(Segment {
            start_row: b.break_row(dgp.t),
            factor: cholesky_factor(dgp.p, &post)?,
        });
    }
    generate_segments(dgp, &segments, rng)
}
