//! JSON and CSV writers.

use std::io::Write;

use corrbreak::{DeviationProcess, PairIndex, TestConfig, TestReport};
use serde::Serialize;

use crate::error::CliResult;

/// Serialized form of a [`TestReport`]. `process[i]` is the standardized
/// process at `k = i + 2`, `null` where a prefix correlation is undefined.
#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub q_raw: f64,
    pub q_std: f64,
    pub d: usize,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub changepoint_k: usize,
    pub process: Vec<Option<f64>>,
    pub e_hat: Vec<Vec<f64>>,
    pub config: TestConfig,
}

fn process_values(p: &DeviationProcess) -> Vec<Option<f64>> {
    p.values()
        .iter()
        .zip(p.defined())
        .map(|(&v, &ok)| ok.then_some(v))
        .collect()
}

impl From<&TestReport> for ReportJson {
    fn from(r: &TestReport) -> Self {
        Self {
            q_raw: r.q_raw,
            q_std: r.q_std,
            d: r.d,
            critical_value: r.critical_value,
            p_value: r.p_value,
            reject: r.reject,
            changepoint_k: r.changepoint_k,
            process: process_values(&r.process),
            e_hat: r.e_hat.to_rows(),
            config: r.config,
        }
    }
}

pub fn write_report<W: Write>(out: &mut W, report: &TestReport) -> CliResult<()> {
    let json = serde_json::to_string_pretty(&ReportJson::from(report))
        .map_err(|e| crate::error::CliError::Input(e.to_string()))?;
    writeln!(out, "{json}")?;
    Ok(())
}

fn csv_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        v.to_string()
    }
}

/// Rolling correlations as CSV: the window start (1-based, or the row label
/// of the first row in the window) followed by one column per pair.
pub fn write_rolling<W: Write>(
    out: &mut W,
    labels: &[String],
    row_labels: Option<&[String]>,
    rows: &[Vec<f64>],
) -> CliResult<()> {
    let pairs = PairIndex::new(labels.len());
    writeln!(out, "start,{}", pairs.labels(labels).join(","))?;
    for (t, row) in rows.iter().enumerate() {
        let start = row_labels.map_or_else(|| (t + 1).to_string(), |l| l[t].clone());
        let vals: Vec<String> = row.iter().map(|&v| csv_value(v)).collect();
        writeln!(out, "{start},{}", vals.join(","))?;
    }
    Ok(())
}
