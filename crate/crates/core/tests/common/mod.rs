#![allow(dead_code)]

use corrbreak::Panel;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-pass Pearson correlation of the first `k` entries of `x` and `y`,
/// `None` when either prefix is constant.
pub fn naive_corr(x: &[f64], y: &[f64], k: usize) -> Option<f64> {
    let n = k as f64;
    let mx: f64 = x[..k].iter().sum::<f64>() / n;
    let my: f64 = y[..k].iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for t in 0..k {
        sxx += (x[t] - mx) * (x[t] - mx);
        syy += (y[t] - my) * (y[t] - my);
        sxy += (x[t] - mx) * (y[t] - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// The raw fluctuation process for `k = 2..T` by a direct loop over
/// prefixes, pairs and observations. `None` marks a skipped prefix.
pub fn naive_process(cols: &[Vec<f64>]) -> Vec<Option<f64>> {
    let p = cols.len();
    let t = cols[0].len();
    let mut full = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            full.push(naive_corr(&cols[i], &cols[j], t).expect("full sample defined"));
        }
    }
    (2..=t)
        .map(|k| {
            let mut norm = 0.0;
            let mut m = 0;
            for i in 0..p {
                for j in i + 1..p {
                    norm += (naive_corr(&cols[i], &cols[j], k)? - full[m]).abs();
                    m += 1;
                }
            }
            Some(k as f64 / (t as f64).sqrt() * norm)
        })
        .collect()
}

pub fn naive_q(cols: &[Vec<f64>]) -> f64 {
    naive_process(cols)
        .into_iter()
        .flatten()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random panel with `3 <= T <= 20` and `2 <= p <= 4`, columns of mixed
/// scale and location.
pub fn random_columns(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let t = rng.random_range(3..=20);
    let p = rng.random_range(2..=4);
    (0..p)
        .map(|_| {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let shift = rng.random_range(-50.0..50.0);
            (0..t)
                .map(|_| shift + scale * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn panel(cols: &[Vec<f64>]) -> Panel {
    Panel::from_columns(cols).expect("valid panel")
}
