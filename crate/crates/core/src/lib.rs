//! Retrospective test for a change in the correlation matrix of a
//! multivariate time series at an unknown time.
//!
//! The statistic is the maximum over prefix lengths `k` of
//! `(k / sqrt(T)) * ||rho_k - rho_T||_1`, where `rho_k` collects the pairwise
//! Pearson correlations of the first `k` observations. Standardized by a
//! moving block bootstrap estimate of the covariance of `sqrt(T) * rho_T`, it
//! converges under the null to the supremum of the L1 norm of `d = p(p-1)/2`
//! independent Brownian bridges, whose quantiles are tabulated by simulation.

pub mod bootstrap;
pub mod error;
pub mod fluctuation;
pub mod limit;
pub mod linalg;
pub mod panel;
pub mod report;
pub mod rolling;
pub mod sim;

pub use bootstrap::{default_block_length, estimate_e, resample_panel, BootstrapConfig, EMatrix};
pub use error::{Error, Result};
pub use fluctuation::{
    changepoint_estimate, deviation_process, prefix_correlations, q_statistic,
    standardized_statistic, CorrPath, DeviationProcess,
};
pub use limit::{critical_value, p_value, simulate_sup_l1_bridges, QuantileTable};
pub use panel::{PairIndex, Panel};
pub use report::{run_test, Stage, StageError, TestConfig, TestReport};
