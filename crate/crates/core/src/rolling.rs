//! Pairwise correlations over a sliding window.

use crate::error::{Error, Result};
use crate::fluctuation::full_sample_correlations;
use crate::panel::Panel;

/// One row per window start `t = 0..=T - window`, holding the Pearson
/// correlations of rows `t..t + window` in pair order. Windows in which a
/// column is constant yield NaN for every pair.
pub fn rolling_correlations(panel: &Panel, window: usize) -> Result<Vec<Vec<f64>>> {
    let t = panel.len();
    if window < 2 || window > t {
        return Err(Error::InvalidConfig(format!(
            "window must satisfy 2 <= window <= T = {t}, got {window}"
        )));
    }
    let p = panel.dim();
    let d = panel.n_pairs();
    let data = panel.as_slice();
    Ok((0..=t - window)
        .map(|start| {
            let slice = Panel::from_parts(
                data[start * p..(start + window) * p].to_vec(),
                window,
                p,
                panel.labels().to_vec(),
            );
            full_sample_correlations(&slice).unwrap_or_else(|| vec![f64::NAN; d])
        })
        .collect())
}
