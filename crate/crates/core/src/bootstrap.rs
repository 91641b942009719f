//! Moving block bootstrap estimate of the covariance matrix of the scaled
//! full-sample correlation vector `sqrt(T) * rho_T`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuation::full_sample_correlations;
use crate::panel::Panel;

/// Number of bootstrap replications used when none is given.
pub const DEFAULT_REPLICATIONS: usize = 199;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BootstrapConfig {
    pub block_length: usize,
    pub replications: usize,
    pub seed: u64,
}

impl BootstrapConfig {
    /// Configuration with the default block length for a sample of size `t`.
    pub fn for_sample_size(t: usize, replications: usize, seed: u64) -> Self {
        Self {
            block_length: default_block_length(t),
            replications,
            seed,
        }
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if self.block_length == 0 || self.block_length >= t {
            return Err(Error::InvalidConfig(format!(
                "block length must satisfy 1 <= l < T = {t}, got {}",
                self.block_length
            )));
        }
        if self.replications < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 bootstrap replications, got {}",
                self.replications
            )));
        }
        Ok(())
    }
}

/// Bootstrap covariance estimate of `sqrt(T) * rho_T`, with the
/// configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EMatrix {
    m: DMatrix<f64>,
    config: Option<BootstrapConfig>,
}

impl EMatrix {
    /// Wraps an externally supplied matrix. It must be square and symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        crate::linalg::check_symmetric(&m, crate::linalg::SYMMETRY_TOL)?;
        Ok(Self { m, config: None })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn config(&self) -> Option<&BootstrapConfig> {
        self.config.as_ref()
    }

    /// Row-major nested representation, for reports.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// `floor(T^{1/4})`, at least 1.
pub fn default_block_length(t: usize) -> usize {
    let mut l = (t as f64).powf(0.25).floor() as usize;
    while (l + 1).pow(4) <= t {
        l += 1;
    }
    while l > 0 && l.pow(4) > t {
        l -= 1;
    }
    l.max(1)
}

/// Draws `floor(T / l)` of the `T - l + 1` overlapping length-`l` blocks
/// uniformly with replacement and concatenates them.
pub fn resample_panel<R: Rng + ?Sized>(
    panel: &Panel,
    block_length: usize,
    rng: &mut R,
) -> Result<Panel> {
    let t = panel.len();
    if block_length == 0 || block_length >= t {
        return Err(Error::InvalidConfig(format!(
            "block length must satisfy 1 <= l < T = {t}, got {block_length}"
        )));
    }
    let p = panel.dim();
    let n_blocks = t - block_length + 1;
    let draws = t / block_length;
    let src = panel.as_slice();
    let mut data = Vec::with_capacity(draws * block_length * p);
    for _ in 0..draws {
        let start = rng.random_range(0..n_blocks);
        data.extend_from_slice(&src[start * p..(start + block_length) * p]);
    }
    Ok(Panel::from_parts(
        data,
        draws * block_length,
        p,
        panel.labels().to_vec(),
    ))
}

/// Generator for bootstrap replicate `b`: an independent ChaCha stream keyed by
/// `(seed, b)`.
pub(crate) fn replicate_rng(seed: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b);
    rng
}

/// Bootstrap covariance matrix of `sqrt(T) * rho_T`.
///
/// Replicate `b` is drawn from its own stream, so the result does not
/// depend on how replicates are scheduled. A replicate containing a constant
/// column is redrawn from the same stream; more than `10 * B` redraws in
/// total is an error.
pub fn estimate_e(panel: &Panel, cfg: &BootstrapConfig) -> Result<EMatrix> {
    let t = panel.len();
    cfg.validate(t)?;
    let d = panel.n_pairs();
    let scale = (t as f64).sqrt();
    let budget = 10 * cfg.replications;

    let replicates: Vec<Option<(Vec<f64>, usize)>> = (0..cfg.replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(cfg.seed, b as u64);
            for redraws in 0..=budget {
                let sample = resample_panel(panel, cfg.block_length, &mut rng).ok()?;
                if let Some(rho) = full_sample_correlations(&sample) {
                    return Some((rho.into_iter().map(|r| r * scale).collect(), redraws));
                }
            }
            None
        })
        .collect();

    let mut total_redraws = 0;
    let mut vectors = Vec::with_capacity(cfg.replications);
    for rep in replicates {
        match rep {
            Some((v, r)) => {
                total_redraws += r;
                vectors.push(v);
            }
            None => return Err(Error::BootstrapExhausted { redraws: budget }),
        }
    }
    if total_redraws > budget {
        return Err(Error::BootstrapExhausted {
            redraws: total_redraws,
        });
    }

    // Welford accumulation in replicate order.
    let mut mean = vec![0.0; d];
    let mut m2 = DMatrix::<f64>::zeros(d, d);
    let mut delta = vec![0.0; d];
    for (n, v) in vectors.iter().enumerate() {
        let n = (n + 1) as f64;
        for a in 0..d {
            delta[a] = v[a] - mean[a];
            mean[a] += delta[a] / n;
        }
        for a in 0..d {
            let resid = v[a] - mean[a];
            for b in 0..d {
                m2[(b, a)] += delta[b] * resid;
            }
        }
    }
    let mut m = m2 / (cfg.replications as f64 - 1.0);
    // Welford's outer product is symmetric only up to rounding.
    m = (&m + m.transpose()) * 0.5;

    Ok(EMatrix {
        m,
        config: Some(*cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_panel(t: usize) -> Panel {
        let a: Vec<f64> = (0..t).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..t).map(|i| ((i * 7) % 11) as f64).collect();
        Panel::from_columns(&[a, b]).unwrap()
    }

    #[test]
    fn block_length_rule() {
        assert_eq!(default_block_length(200), 3);
        assert_eq!(default_block_length(500), 4);
        assert_eq!(default_block_length(1000), 5);
        assert_eq!(default_block_length(1414), 6);
        assert_eq!(default_block_length(3), 1);
        assert_eq!(default_block_length(16), 2);
        assert_eq!(default_block_length(15), 1);
        assert_eq!(default_block_length(81), 3);
    }

    #[test]
    fn unit_blocks_resample_rows() {
        let p = ramp_panel(12);
        let mut rng = replicate_rng(3, 0);
        let r = resample_panel(&p, 1, &mut rng).unwrap();
        assert_eq!(r.len(), 12);
        for row in r.rows() {
            let t = row[0] as usize;
            assert_eq!(row, p.row(t));
        }
    }

    #[test]
    fn longest_block_is_one_of_two() {
        let p = ramp_panel(10);
        let mut rng = replicate_rng(5, 1);
        for _ in 0..20 {
            let r = resample_panel(&p, 9, &mut rng).unwrap();
            assert_eq!(r.len(), 9);
            let start = r.row(0)[0] as usize;
            assert!(start <= 1);
            assert_eq!(r.as_slice(), &p.as_slice()[start * 2..(start + 9) * 2]);
        }
    }

    #[test]
    fn blocks_are_contiguous_triples() {
        let p = ramp_panel(10);
        let mut rng = replicate_rng(9, 2);
        let r = resample_panel(&p, 3, &mut rng).unwrap();
        assert_eq!(r.len(), 9);
        for block in r.as_slice().chunks_exact(6) {
            let start = block[0] as usize;
            assert!(start <= 7);
            assert_eq!(block, &p.as_slice()[start * 2..(start + 3) * 2]);
        }
    }

    #[test]
    fn invalid_block_lengths() {
        let p = ramp_panel(10);
        let mut rng = replicate_rng(0, 0);
        assert!(resample_panel(&p, 10, &mut rng).is_err());
        assert!(resample_panel(&p, 0, &mut rng).is_err());
        let cfg = BootstrapConfig {
            block_length: 2,
            replications: 1,
            seed: 0,
        };
        assert!(matches!(estimate_e(&p, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn identical_columns_give_zero_matrix() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 13) % 17) as f64 - 8.0).collect();
        let p = Panel::from_columns(&[x.clone(), x]).unwrap();
        let e = estimate_e(&p, &BootstrapConfig::for_sample_size(40, 50, 1)).unwrap();
        assert_eq!(e.matrix()[(0, 0)], 0.0);
    }

    #[test]
    fn estimate_is_deterministic_and_symmetric() {
        let p = Panel::from_columns(&[
            (0..30).map(|i| ((i * 7) % 13) as f64).collect(),
            (0..30).map(|i| ((i * 5) % 11) as f64).collect(),
            (0..30).map(|i| ((i * 3) % 7) as f64).collect(),
        ])
        .unwrap();
        let cfg = BootstrapConfig::for_sample_size(30, 64, 42);
        let a = estimate_e(&p, &cfg).unwrap();
        let b = estimate_e(&p, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matrix(), &a.matrix().transpose());
        assert!(crate::linalg::symmetric_eigenvalues(a.matrix())[0] > -1e-10 * a.matrix().amax());
    }

    #[test]
    fn degenerate_replicates_exhaust_budget() {
        // Only the first row varies and a single block of length 21 is drawn,
        // so 19 of the 20 candidate blocks are constant.
        let mut a = vec![0.0; 40];
        let mut b = vec![1.0; 40];
        a[0] = 1.0;
        b[0] = 0.0;
        let p = Panel::from_columns(&[a, b]).unwrap();
        let cfg = BootstrapConfig {
            block_length: 21,
            replications: 20,
            seed: 7,
        };
        assert!(matches!(
            estimate_e(&p, &cfg),
            Err(Error::BootstrapExhausted { .. })
        ));
    }
}
