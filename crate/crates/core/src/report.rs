//! End-to-end test: bootstrap standardization, limit quantiles and the
//! change-point estimate combined into one report.

use serde::Serialize;

use crate::bootstrap::{estimate_e, BootstrapConfig, EMatrix};
use crate::error::{Error, Result};
use crate::fluctuation::{
    changepoint_estimate, deviation_process, prefix_correlations, DeviationProcess,
};
use crate::limit::{critical_value, p_value, QuantileTable};
use crate::linalg;
use crate::panel::{PairIndex, Panel};

/// Settings echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestConfig {
    pub block_length: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub alpha: f64,
    pub grid: usize,
    pub paths: usize,
}

/// Pipeline stage that failed, for error reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Statistic,
    Bootstrap,
    Standardize,
    Limit,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Statistic => "statistic",
            Stage::Bootstrap => "bootstrap",
            Stage::Standardize => "standardize",
            Stage::Limit => "limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub q_raw: f64,
    pub q_std: f64,
    pub d: usize,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub changepoint_k: usize,
    pub raw_process: DeviationProcess,
    pub process: DeviationProcess,
    pub e_hat: EMatrix,
    pub ridge_applied: f64,
    pub config: TestConfig,
}

/// A pair whose bootstrap correlation never varies (for example two identical
/// columns) cannot be standardized, ridge or not.
fn check_variances(e_hat: &EMatrix, panel: &Panel) -> Result<()> {
    let names = PairIndex::new(panel.dim()).labels(panel.labels());
    match (0..e_hat.dim()).find(|&i| e_hat.matrix()[(i, i)] <= 0.0) {
        Some(i) => Err(Error::DegenerateInput(format!(
            "bootstrap variance of the {} correlation is zero",
            names[i]
        ))),
        None => Ok(()),
    }
}

/// Runs the full test on `panel`.
///
/// `table` must have been simulated for `d = p(p-1)/2`; its grid and path
/// counts are echoed in the report.
pub fn run_test(
    panel: &Panel,
    boot: &BootstrapConfig,
    table: &QuantileTable,
    alpha: f64,
) -> std::result::Result<TestReport, StageError> {
    let d = panel.n_pairs();
    if table.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: table.d(),
        })
        .at(Stage::Limit);
    }
    let corr = prefix_correlations(panel);
    let raw_process = deviation_process(&corr, None).at(Stage::Statistic)?;
    let e_hat = estimate_e(panel, boot).at(Stage::Bootstrap)?;
    check_variances(&e_hat, panel).at(Stage::Bootstrap)?;
    let root = linalg::inv_sqrt(e_hat.matrix(), linalg::DEFAULT_RIDGE).at(Stage::Standardize)?;
    let process = deviation_process(&corr, Some(&root.matrix)).at(Stage::Standardize)?;
    let q_std = process.max();
    let cv = critical_value(table, alpha).at(Stage::Limit)?;

    Ok(TestReport {
        q_raw: raw_process.max(),
        q_std,
        d,
        critical_value: cv,
        p_value: p_value(table, q_std),
        reject: q_std > cv,
        changepoint_k: changepoint_estimate(&process),
        raw_process,
        process,
        e_hat,
        ridge_applied: root.ridge_applied,
        config: TestConfig {
            block_length: boot.block_length,
            bootstrap: boot.replications,
            seed: boot.seed,
            alpha,
            grid: table.grid_n(),
            paths: table.paths(),
        },
    })
}
