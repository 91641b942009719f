use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dgp::{cholesky_factor, generate, generate_segments, BreakSpec, DgpSpec, Segment};
use super::drift::StepFunctionG;
use crate::bootstrap::{estimate_e, BootstrapConfig};
use crate::error::{Error, Result};
use crate::fluctuation::{
    changepoint_estimate, deviation_process, prefix_correlations, DeviationProcess,
};
use crate::limit::{splitmix64, QuantileTable};
use crate::linalg;
use crate::panel::Panel;

/// Empirical rejection frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionRate {
    pub rejections: usize,
    pub reps: usize,
    pub rate: f64,
    pub std_error: f64,
}

impl RejectionRate {
    fn from_counts(rejections: usize, reps: usize) -> Self {
        let rate = rejections as f64 / reps as f64;
        Self {
            rejections,
            reps,
            rate,
            std_error: (rate * (1.0 - rate) / reps as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPowerOutcome {
    pub rejection: RejectionRate,
    /// `s = k / T` for `k = 2..=T`.
    pub grid: Vec<f64>,
    /// Monte Carlo mean of the standardized process at each grid point.
    pub mean_process: Vec<f64>,
}

fn data_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn rep_boot(boot: &BootstrapConfig, rep: usize) -> BootstrapConfig {
    BootstrapConfig {
        seed: splitmix64(boot.seed ^ splitmix64(rep as u64)),
        ..*boot
    }
}

fn check_study_args(mc_reps: usize, table: &QuantileTable, d: usize, alpha: f64) -> Result<f64> {
    if mc_reps == 0 {
        return Err(Error::InvalidConfig(
            "Monte Carlo repetitions must be >= 1".into(),
        ));
    }
    if table.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: table.d(),
        });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(table.quantile(1.0 - alpha))
}

fn standardized_process(panel: &Panel, boot: &BootstrapConfig) -> Result<DeviationProcess> {
    let corr = prefix_correlations(panel);
    let e = estimate_e(panel, boot)?;
    let root = linalg::inv_sqrt(e.matrix(), linalg::DEFAULT_RIDGE)?;
    deviation_process(&corr, Some(&root.matrix))
}

/// Fraction of `mc_reps` simulated panels on which the standardized statistic
/// exceeds the `(1 - alpha)` quantile of `table`.
///
/// Repetition `r` draws its data from stream `r` of `dgp.seed` and its
/// bootstrap from a seed derived from `(boot.seed, r)`, so the result is
/// reproducible and independent of thread scheduling. The block length in
/// `boot` is used as given.
pub fn rejection_study(
    dgp: &DgpSpec,
    brk: Option<&BreakSpec>,
    mc_reps: usize,
    boot: &BootstrapConfig,
    table: &QuantileTable,
    alpha: f64,
) -> Result<RejectionRate> {
    dgp.validate()?;
    boot.validate(dgp.t)?;
    let threshold = check_study_args(mc_reps, table, dgp.n_pairs(), alpha)?;
    // Surface non-PD break specifications before any simulation.
    generate(
        &DgpSpec {
            t: 3,
            ..dgp.clone()
        },
        brk,
        &mut data_rng(0, 0),
    )?;

    let outcomes: Vec<Result<bool>> = (0..mc_reps)
        .into_par_iter()
        .map(|r| {
            let panel = generate(dgp, brk, &mut data_rng(dgp.seed, r))?;
            Ok(standardized_process(&panel, &rep_boot(boot, r))?.max() > threshold)
        })
        .collect();
    let mut rejections = 0;
    for o in outcomes {
        rejections += usize::from(o?);
    }
    Ok(RejectionRate::from_counts(rejections, mc_reps))
}

/// Change-point estimates (argmax of the standardized process) over
/// `mc_reps` simulated panels, seeded as in [`rejection_study`].
pub fn changepoint_study(
    dgp: &DgpSpec,
    brk: Option<&BreakSpec>,
    mc_reps: usize,
    boot: &BootstrapConfig,
) -> Result<Vec<usize>> {
    dgp.validate()?;
    boot.validate(dgp.t)?;
    (0..mc_reps)
        .into_par_iter()
        .map(|r| {
            let panel = generate(dgp, brk, &mut data_rng(dgp.seed, r))?;
            Ok(changepoint_estimate(&standardized_process(
                &panel,
                &rep_boot(boot, r),
            )?))
        })
        .collect()
}

/// Builds the piecewise-constant correlation segments implied by
/// `base + (M / sqrt(T)) g(t / T) / sqrt(Var_i Var_j)`.
fn local_segments(g: &StepFunctionG, dgp: &DgpSpec) -> Result<Vec<Segment>> {
    let t = dgp.t as f64;
    let mut points: Vec<f64> = g
        .components
        .iter()
        .flat_map(|c| c.jumps.iter().map(|&(z, _)| z))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let scales = g.pair_scales();
    let shift = g.magnitude / t.sqrt();
    let mut bounds = vec![0.0];
    bounds.extend(&points);
    bounds.push(1.0);

    bounds
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let rho: Vec<f64> = dgp
                .base_correlation
                .iter()
                .zip(&g.components)
                .zip(&scales)
                .map(|((base, c), sc)| base + shift * c.value(mid) * sc)
                .collect();
            Ok(Segment {
                start_row: (w[0] * t).floor() as usize,
                factor: cholesky_factor(dgp.p, &rho)?,
            })
        })
        .collect()
}

/// Rejection rate and mean standardized process under the local alternative
/// whose pair cross moments follow `k + (M / sqrt(T)) g(t / T)`.
///
/// `g` must be a step function; its variances must equal those of `dgp`.
pub fn local_power_study(
    g: &StepFunctionG,
    dgp: &DgpSpec,
    mc_reps: usize,
    boot: &BootstrapConfig,
    table: &QuantileTable,
    alpha: f64,
) -> Result<LocalPowerOutcome> {
    g.validate()?;
    dgp.validate()?;
    boot.validate(dgp.t)?;
    if g.p() != dgp.p {
        return Err(Error::DimensionMismatch {
            expected: dgp.p,
            got: g.p(),
        });
    }
    if g.variances != dgp.variances {
        return Err(Error::InvalidConfig(
            "variances of g and of the data-generating process differ".into(),
        ));
    }
    let threshold = check_study_args(mc_reps, table, dgp.n_pairs(), alpha)?;
    let segments = local_segments(g, dgp)?;

    let runs: Vec<Result<DeviationProcess>> = (0..mc_reps)
        .into_par_iter()
        .map(|r| {
            let panel = generate_segments(dgp, &segments, &mut data_rng(dgp.seed, r))?;
            standardized_process(&panel, &rep_boot(boot, r))
        })
        .collect();

    let n = dgp.t - 1;
    let mut mean = vec![0.0; n];
    let mut rejections = 0;
    for run in runs {
        let process = run?;
        rejections += usize::from(process.max() > threshold);
        for (m, (&v, &ok)) in mean
            .iter_mut()
            .zip(process.values().iter().zip(process.defined()))
        {
            if ok {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= mc_reps as f64);

    Ok(LocalPowerOutcome {
        rejection: RejectionRate::from_counts(rejections, mc_reps),
        grid: (2..=dgp.t).map(|k| k as f64 / dgp.t as f64).collect(),
        mean_process: mean,
    })
}
