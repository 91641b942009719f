//! Delimited-text ingestion into a [`Panel`].

use std::path::PathBuf;

use clap::ValueEnum;
use corrbreak::Panel;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Rows are used as given.
    Returns,
    /// Rows are strictly positive prices converted to log returns.
    Prices,
}

#[derive(Debug, Clone)]
pub struct InputSpec {
    pub path: PathBuf,
    pub mode: Mode,
    pub delimiter: u8,
    pub has_header: bool,
    /// Column labels or 1-based positions among the data columns; empty
    /// selects every data column.
    pub columns: Vec<String>,
}

/// A panel plus the optional row labels taken from a leading date column.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub panel: Panel,
    pub row_labels: Option<Vec<String>>,
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn ingest(spec: &InputSpec) -> CliResult<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(&spec.path)
        .map_err(|e| input_err(format!("{}: {e}", spec.path.display())))?;

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| input_err(format!("line {}: {e}", i + 1)))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((i + 1, rec));
    }

    let header = if spec.has_header && !records.is_empty() {
        Some(records.remove(0).1)
    } else {
        None
    };
    let (first_line, first) = records
        .first()
        .ok_or_else(|| input_err("input contains no data rows"))?;
    let width = first.len();
    let dated = first.get(0).is_some_and(|f| f.parse::<f64>().is_err());
    let offset = usize::from(dated);
    if width < offset + 2 {
        return Err(input_err(format!(
            "line {first_line}: need at least two numeric columns"
        )));
    }

    let labels: Vec<String> = match &header {
        Some(h) => {
            if h.len() != width {
                return Err(input_err(format!(
                    "header has {} fields but rows have {width}",
                    h.len()
                )));
            }
            h.iter().skip(offset).map(str::to_string).collect()
        }
        None => (1..=width - offset).map(|i| format!("X{i}")).collect(),
    };
    let selected = select_columns(&labels, &spec.columns)?;

    let mut values = Vec::with_capacity(records.len() * selected.len());
    let mut row_labels = Vec::new();
    let mut row = vec![0.0; width - offset];
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(input_err(format!(
                "line {line}: expected {width} fields, found {}",
                rec.len()
            )));
        }
        for (j, field) in rec.iter().skip(offset).enumerate() {
            row[j] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    input_err(format!(
                        "line {line}: cannot parse {field:?} as a finite number"
                    ))
                })?;
        }
        if dated {
            row_labels.push(rec[0].to_string());
        }
        values.extend(selected.iter().map(|&j| row[j]));
    }

    let p = selected.len();
    let mut t = records.len();
    if spec.mode == Mode::Prices {
        if let Some(pos) = values.iter().position(|&v| v <= 0.0) {
            return Err(input_err(format!(
                "line {}: prices must be strictly positive",
                records[pos / p].0
            )));
        }
        values = values
            .chunks_exact(p)
            .zip(values.chunks_exact(p).skip(1))
            .flat_map(|(prev, next)| prev.iter().zip(next).map(|(a, b)| (b / a).ln()))
            .collect();
        t = t.saturating_sub(1);
        if dated {
            row_labels.remove(0);
        }
    }
    if t < 3 {
        return Err(input_err(format!("need at least 3 usable rows, got {t}")));
    }

    let names = selected.iter().map(|&j| labels[j].clone()).collect();
    let panel = Panel::new(values, t, p, names)?;
    Ok(Ingested {
        panel,
        row_labels: dated.then_some(row_labels),
    })
}

fn select_columns(labels: &[String], wanted: &[String]) -> CliResult<Vec<usize>> {
    if wanted.is_empty() {
        return Ok((0..labels.len()).collect());
    }
    let mut out = Vec::with_capacity(wanted.len());
    for w in wanted {
        let idx = match labels.iter().position(|l| l == w) {
            Some(i) => i,
            None => match w.parse::<usize>() {
                Ok(n) if (1..=labels.len()).contains(&n) => n - 1,
                _ => return Err(input_err(format!("unknown column {w:?}"))),
            },
        };
        if out.contains(&idx) {
            return Err(input_err(format!("column {w:?} selected twice")));
        }
        out.push(idx);
    }
    if out.len() < 2 {
        return Err(input_err("select at least two columns"));
    }
    Ok(out)
}
