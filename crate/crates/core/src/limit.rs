//! Monte Carlo tabulation of `sup_{0<=s<=1} sum_i |B_i(s)|` for `d`
//! independent Brownian bridges, the null limit of the standardized statistic.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 1000;
pub const DEFAULT_PATHS: usize = 100_000;
pub const MIN_PATHS: usize = 100;

/// `-zeta(1/2) / sqrt(2 pi)`: expected overshoot of a Brownian maximum past
/// its maximum on a grid of mesh `h`, in units of `sqrt(h)`.
pub const CONTINUITY_BETA: f64 = 0.582_597_157_939_010_6;

const CACHE_MAGIC: &[u8; 4] = b"CBQT";
const CACHE_VERSION: u32 = 2;
const CACHE_HEADER_LEN: usize = 4 + 4 + 4 * 8;

/// Sorted Monte Carlo draws of the supremum for a fixed `(d, grid, paths, seed)`.
///
/// `samples` are the raw grid maxima. Quantiles and p-values are taken on
/// `samples + correction()`, which removes the leading-order discretization
/// bias of a grid maximum: near its maximizer `sum_i |B_i|` moves like a
/// Brownian motion with variance `d` per unit time.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    d: usize,
    grid_n: usize,
    paths: usize,
    seed: u64,
    samples: Vec<f64>,
}

impl QuantileTable {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Raw grid maxima, ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Shift added to grid maxima, `CONTINUITY_BETA * sqrt(d / grid_n)`.
    pub fn correction(&self) -> f64 {
        CONTINUITY_BETA * (self.d as f64 / self.grid_n as f64).sqrt()
    }

    /// Lower empirical quantile of the corrected suprema:
    /// `samples[floor(level * (n - 1))] + correction()`, `level` in `[0, 1]`.
    pub fn quantile(&self, level: f64) -> f64 {
        let level = level.clamp(0.0, 1.0);
        let idx = (level * (self.samples.len() - 1) as f64).floor() as usize;
        self.samples[idx] + self.correction()
    }
}

/// Simulates `paths` suprema of the L1 norm of `d` independent bridges on the
/// grid `m / grid_n`.
///
/// Each bridge is `W(s) - s W(1)`. The Brownian path `W` is built by a Levy
/// midpoint construction: write `grid_n = base * 2^j` with `base` odd, draw
/// the `base` coarse Gaussian increments, then fill midpoints level by level
/// from their conditional law. Bridge `i` of path `k` consumes its own
/// ChaCha stream in that order, so
///
/// * the table does not depend on thread scheduling,
/// * doubling `grid_n` refines exactly the same Brownian paths, and
/// * the first `d` bridges of a `d + 1` table are the bridges of the `d` table.
pub fn simulate_sup_l1_bridges(
    d: usize,
    grid_n: usize,
    paths: usize,
    seed: u64,
) -> Result<QuantileTable> {
    if d == 0 {
        return Err(Error::InvalidConfig("bridge dimension must be >= 1".into()));
    }
    if grid_n < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid must have >= 2 steps, got {grid_n}"
        )));
    }
    if paths < MIN_PATHS {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_PATHS} paths, got {paths}"
        )));
    }

    let bridge_seeds: Vec<u64> = (0..d as u64).map(|i| seed ^ splitmix64(i)).collect();
    let mut samples: Vec<f64> = (0..paths)
        .into_par_iter()
        .map_init(
            || vec![0.0; d * (grid_n + 1)],
            |walk, k| {
                for (w, &s) in walk.chunks_exact_mut(grid_n + 1).zip(&bridge_seeds) {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    rng.set_stream(k as u64);
                    brownian_path(w, &mut rng);
                }
                sup_l1_bridge(walk, d, grid_n)
            },
        )
        .collect();
    samples.sort_by(f64::total_cmp);

    Ok(QuantileTable {
        d,
        grid_n,
        paths,
        seed,
        samples,
    })
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Fills `w[m] = W(m / n)`, `m = 0..=n`, for a standard Brownian motion.
fn brownian_path(w: &mut [f64], rng: &mut ChaCha8Rng) {
    let n = w.len() - 1;
    let levels = n.trailing_zeros();
    let base = n >> levels;
    let coarse = 1usize << levels;

    let coarse_sd = (coarse as f64 / n as f64).sqrt();
    w[0] = 0.0;
    for m in 1..=base {
        let z: f64 = StandardNormal.sample(rng);
        w[m * coarse] = w[(m - 1) * coarse] + coarse_sd * z;
    }
    // Midpoint of an interval of length h given its endpoints: mean of the
    // endpoints, variance h / 4.
    let mut step = coarse;
    while step > 1 {
        let half = step / 2;
        let sd = (step as f64 / (4 * n) as f64).sqrt();
        let mut m = half;
        while m < n {
            let z: f64 = StandardNormal.sample(rng);
            w[m] = 0.5 * (w[m - half] + w[m + half]) + sd * z;
            m += step;
        }
        step = half;
    }
}

fn sup_l1_bridge(walk: &[f64], d: usize, n: usize) -> f64 {
    let stride = n + 1;
    let mut best: f64 = 0.0;
    for m in 1..n {
        let s = m as f64 / n as f64;
        let mut norm = 0.0;
        for i in 0..d {
            let w = &walk[i * stride..(i + 1) * stride];
            norm += (w[m] - s * w[n]).abs();
        }
        best = best.max(norm);
    }
    best
}

/// Empirical `(1 - alpha)` quantile of the table.
pub fn critical_value(table: &QuantileTable, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(table.quantile(1.0 - alpha))
}

/// Fraction of corrected simulated suprema strictly greater than `stat`.
pub fn p_value(table: &QuantileTable, stat: f64) -> f64 {
    let shift = table.correction();
    let above = table.samples.len() - table.samples.partition_point(|&x| x + shift <= stat);
    above as f64 / table.samples.len() as f64
}

/// File name of the cached table for a parameter set.
pub fn cache_file_name(d: usize, grid_n: usize, paths: usize, seed: u64) -> String {
    format!("bridge-d{d}-g{grid_n}-n{paths}-s{seed}.bin")
}

/// Serializes the table: magic, version, `(d, grid, paths, seed)` and the
/// sorted samples, all little-endian.
pub fn encode_table(table: &QuantileTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(CACHE_HEADER_LEN + 8 * table.samples.len());
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    for v in [
        table.d as u64,
        table.grid_n as u64,
        table.paths as u64,
        table.seed,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in &table.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Parses a cached table, returning `None` for anything that does not match
/// the expected parameters exactly.
pub fn decode_table(
    bytes: &[u8],
    d: usize,
    grid_n: usize,
    paths: usize,
    seed: u64,
) -> Option<QuantileTable> {
    if bytes.len() != CACHE_HEADER_LEN + 8 * paths || &bytes[..4] != CACHE_MAGIC {
        return None;
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) != CACHE_VERSION {
        return None;
    }
    let header = [u64_at(8), u64_at(16), u64_at(24), u64_at(32)];
    if header != [d as u64, grid_n as u64, paths as u64, seed] {
        return None;
    }
    let samples: Vec<f64> = bytes[CACHE_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let valid = samples.iter().all(|s| s.is_finite() && *s >= 0.0)
        && samples.windows(2).all(|w| w[0] <= w[1]);
    valid.then_some(QuantileTable {
        d,
        grid_n,
        paths,
        seed,
        samples,
    })
}

/// Loads the table from `cache_dir` if a valid file exists, otherwise
/// simulates it and tries to store it. Cache I/O failures are ignored.
pub fn load_or_simulate(
    cache_dir: Option<&Path>,
    d: usize,
    grid_n: usize,
    paths: usize,
    seed: u64,
) -> Result<QuantileTable> {
    let path: Option<PathBuf> =
        cache_dir.map(|dir| dir.join(cache_file_name(d, grid_n, paths, seed)));
    if let Some(path) = &path {
        if let Some(table) = fs::read(path)
            .ok()
            .and_then(|bytes| decode_table(&bytes, d, grid_n, paths, seed))
        {
            return Ok(table);
        }
    }
    let table = simulate_sup_l1_bridges(d, grid_n, paths, seed)?;
    if let Some(path) = &path {
        let _ = write_atomically(path, &encode_table(&table));
    }
    Ok(table)
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_validation() {
        assert!(simulate_sup_l1_bridges(0, 100, 100, 1).is_err());
        assert!(simulate_sup_l1_bridges(1, 1, 100, 1).is_err());
        assert!(simulate_sup_l1_bridges(1, 100, 99, 1).is_err());
    }

    #[test]
    fn samples_sorted_and_nonnegative() {
        let t = simulate_sup_l1_bridges(2, 50, 500, 3).unwrap();
        assert_eq!(t.samples().len(), 500);
        assert!(t.samples().windows(2).all(|w| w[0] <= w[1]));
        assert!(t.samples()[0] > 0.0);
        assert!(t.quantile(0.0) >= 0.0);
        assert_eq!(t, simulate_sup_l1_bridges(2, 50, 500, 3).unwrap());
    }

    #[test]
    fn critical_value_bounds_and_order() {
        let t = simulate_sup_l1_bridges(1, 100, 2000, 11).unwrap();
        assert!(critical_value(&t, 0.0).is_err());
        assert!(critical_value(&t, 1.0).is_err());
        assert!(critical_value(&t, 0.01).unwrap() > critical_value(&t, 0.10).unwrap());
        let shift = CONTINUITY_BETA * 0.1;
        assert!((t.correction() - shift).abs() < 1e-15);
        assert_eq!(t.quantile(0.0), t.samples()[0] + t.correction());
        assert_eq!(
            t.quantile(1.0),
            *t.samples().last().unwrap() + t.correction()
        );
    }

    #[test]
    fn p_value_edges() {
        let t = simulate_sup_l1_bridges(1, 100, 1000, 5).unwrap();
        assert_eq!(p_value(&t, 0.0), 1.0);
        let top = t.samples()[999] + t.correction();
        assert_eq!(p_value(&t, top + 1.0), 0.0);
        assert_eq!(p_value(&t, top), 0.0);
        let cv = critical_value(&t, 0.05).unwrap();
        let pv = p_value(&t, cv);
        assert!(pv <= 0.05 && pv > 0.04, "{pv}");
    }

    #[test]
    fn cache_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_or_simulate(Some(dir.path()), 2, 20, 200, 9).unwrap();
        let file = dir.path().join(cache_file_name(2, 20, 200, 9));
        assert!(file.exists());
        let b = load_or_simulate(Some(dir.path()), 2, 20, 200, 9).unwrap();
        assert_eq!(a, b);

        let bytes = encode_table(&a);
        assert!(decode_table(&bytes, 2, 20, 200, 10).is_none());
        let mut bad = bytes.clone();
        bad[4] = 99;
        assert!(decode_table(&bad, 2, 20, 200, 9).is_none());
        assert!(decode_table(&bytes[..bytes.len() - 8], 2, 20, 200, 9).is_none());

        fs::write(&file, b"garbage").unwrap();
        let c = load_or_simulate(Some(dir.path()), 2, 20, 200, 9).unwrap();
        assert_eq!(a, c);
        assert_eq!(fs::read(&file).unwrap(), bytes);
    }
}
