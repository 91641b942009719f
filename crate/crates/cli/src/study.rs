//! Size/power study driven by a TOML configuration file.

use std::io::Write;
use std::path::Path;

use corrbreak::limit::{self, QuantileTable};
use corrbreak::sim::{rejection_study, BreakSpec, DgpSpec, InnovationLaw};
use corrbreak::{default_block_length, BootstrapConfig, Error};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Only the correlation of the first two variables changes.
    FirstPair,
    /// Every pair correlation changes by the same amount.
    AllPairs,
}

impl Scope {
    fn as_str(self) -> &'static str {
        match self {
            Scope::FirstPair => "first_pair",
            Scope::AllPairs => "all_pairs",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyRow {
    pub p: usize,
    #[serde(default = "default_law")]
    pub distribution: InnovationLaw,
    #[serde(default)]
    pub ma: f64,
    #[serde(default)]
    pub delta_rho: f64,
    #[serde(default = "default_scope")]
    pub scope: Scope,
    #[serde(default = "default_location")]
    pub location: f64,
}

fn default_law() -> InnovationLaw {
    InnovationLaw::Normal
}

fn default_scope() -> Scope {
    Scope::FirstPair
}

fn default_location() -> f64 {
    0.5
}

fn default_bootstrap() -> usize {
    corrbreak::bootstrap::DEFAULT_REPLICATIONS
}

fn default_alpha() -> f64 {
    0.05
}

fn default_grid() -> usize {
    limit::DEFAULT_GRID
}

fn default_paths() -> usize {
    limit::DEFAULT_PATHS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub mc_reps: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Fixed block length; `floor(T^{1/4})` per sample size when absent.
    pub block_length: Option<usize>,
    pub sample_sizes: Vec<usize>,
    #[serde(rename = "row")]
    pub rows: Vec<StudyRow>,
}

impl StudyConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Input(format!("study config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Input(format!("study config: {m}")));
        if self.mc_reps == 0 {
            return bad("mc_reps must be >= 1".into());
        }
        if self.bootstrap < 2 {
            return bad("bootstrap must be >= 2".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&t| t < 3) {
            return bad("sample_sizes must be a nonempty list of values >= 3".into());
        }
        if self.rows.is_empty() {
            return bad("at least one [[row]] is required".into());
        }
        if let Some(r) = self.rows.iter().find(|r| r.p < 2) {
            return bad(format!("p must be >= 2, got {}", r.p));
        }
        Ok(())
    }
}

/// One output line of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyLine {
    pub ma: f64,
    pub distribution: InnovationLaw,
    pub delta_rho: f64,
    pub scope: Scope,
    pub p: usize,
    pub t: usize,
    /// `None` when the implied correlation matrix is not positive definite.
    pub rate: Option<(f64, f64)>,
}

fn cell_seed(seed: u64, row: usize, t: usize) -> u64 {
    seed ^ ((row as u64) << 40) ^ (t as u64).wrapping_mul(0x9E37_79B9)
}

pub fn run_study(cfg: &StudyConfig, cache_dir: Option<&Path>) -> CliResult<Vec<StudyLine>> {
    let mut tables: Vec<QuantileTable> = Vec::new();
    let mut lines = Vec::new();
    for (ri, row) in cfg.rows.iter().enumerate() {
        let d = row.p * (row.p - 1) / 2;
        if !tables.iter().any(|t| t.d() == d) {
            tables.push(limit::load_or_simulate(
                cache_dir, d, cfg.grid, cfg.paths, cfg.seed,
            )?);
        }
        let table = tables.iter().find(|t| t.d() == d).expect("table present");
        let brk = (row.delta_rho != 0.0).then(|| {
            match row.scope {
                Scope::FirstPair => BreakSpec::first_pair(row.p, row.delta_rho),
                Scope::AllPairs => BreakSpec::all_pairs(row.p, row.delta_rho),
            }
            .at(row.location)
        });
        for &t in &cfg.sample_sizes {
            let dgp = DgpSpec::new(row.p, t)
                .with_law(row.distribution)
                .with_ma(row.ma)
                .with_seed(cell_seed(cfg.seed, ri, t));
            let boot = BootstrapConfig {
                block_length: cfg.block_length.unwrap_or_else(|| default_block_length(t)),
                replications: cfg.bootstrap,
                seed: cell_seed(cfg.seed, ri, t).rotate_left(17),
            };
            let rate =
                match rejection_study(&dgp, brk.as_ref(), cfg.mc_reps, &boot, table, cfg.alpha) {
                    Ok(r) => Some((r.rate, r.std_error)),
                    Err(Error::NotPositiveDefinite { .. }) => None,
                    Err(e) => return Err(e.into()),
                };
            lines.push(StudyLine {
                ma: row.ma,
                distribution: row.distribution,
                delta_rho: row.delta_rho,
                scope: row.scope,
                p: row.p,
                t,
                rate,
            });
        }
    }
    Ok(lines)
}

pub fn write_study<W: Write>(out: &mut W, lines: &[StudyLine]) -> CliResult<()> {
    writeln!(out, "ma,distribution,delta_rho,scope,p,t,rate,mc_se")?;
    for l in lines {
        let (rate, se) = match l.rate {
            Some((r, s)) => (format!("{r:.4}"), format!("{s:.4}")),
            None => ("*".into(), "*".into()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{rate},{se}",
            l.ma,
            l.distribution,
            l.delta_rho,
            l.scope.as_str(),
            l.p,
            l.t
        )?;
    }
    Ok(())
}
