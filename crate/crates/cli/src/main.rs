//! `corrbreak`: test a multivariate return series for a change in its
//! correlation matrix.

mod error;
mod ingest;
mod output;
mod study;

use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrbreak::limit::{self, DEFAULT_GRID, DEFAULT_PATHS};
use corrbreak::{default_block_length, BootstrapConfig};

use crate::error::{CliError, CliResult};
use crate::ingest::{ingest, InputSpec, Mode};

/// Environment variable naming the limit-table cache directory.
const CACHE_ENV: &str = "CORRBREAK_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "corrbreak",
    version,
    about = "Fluctuation test for a change in a correlation matrix"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the test and print a JSON report.
    Test(TestArgs),
    /// Print rolling-window pairwise correlations as CSV.
    Rolling(RollingArgs),
    /// Print a critical value of the limit distribution.
    Critical(CriticalArgs),
    /// Run a size/power simulation study and print CSV.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Delimited text file, one observation per row.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "returns")]
    mode: Mode,
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Treat the first row as data rather than column labels.
    #[arg(long)]
    no_header: bool,
    /// Comma-separated column labels or 1-based column numbers.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
}

impl InputArgs {
    fn spec(&self) -> CliResult<InputSpec> {
        if !self.delimiter.is_ascii() {
            return Err(CliError::Input(
                "delimiter must be an ASCII character".into(),
            ));
        }
        Ok(InputSpec {
            path: self.input.clone(),
            mode: self.mode,
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
            columns: self.columns.clone(),
        })
    }
}

#[derive(Debug, Args)]
struct LimitArgs {
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_PATHS)]
    paths: usize,
    /// Directory for cached limit tables (overrides $CORRBREAK_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl LimitArgs {
    fn cache_dir(&self) -> Option<PathBuf> {
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
    }
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Bootstrap block length; floor(T^{1/4}) by default.
    #[arg(long)]
    block_length: Option<usize>,
    /// Number of bootstrap replications.
    #[arg(long = "bootstrap", default_value_t = 199)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    limit: LimitArgs,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RollingArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 120)]
    window: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CriticalArgs {
    /// Number of bridges, p(p-1)/2.
    d: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    limit: LimitArgs,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// TOML study configuration.
    config: PathBuf,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_test(args: &TestArgs) -> CliResult<()> {
    let data = ingest(&args.input.spec()?)?;
    let panel = &data.panel;
    let boot = BootstrapConfig {
        block_length: args
            .block_length
            .unwrap_or_else(|| default_block_length(panel.len())),
        replications: args.replications,
        seed: args.seed,
    };
    boot.validate(panel.len())?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Input(format!(
            "alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let table = limit::load_or_simulate(
        args.limit.cache_dir().as_deref(),
        panel.n_pairs(),
        args.limit.grid,
        args.limit.paths,
        args.seed,
    )?;
    let report = corrbreak::run_test(panel, &boot, &table, args.alpha)?;
    let mut out = sink(args.output.as_deref())?;
    output::write_report(&mut out, &report)?;
    out.flush()?;
    Ok(())
}

fn cmd_rolling(args: &RollingArgs) -> CliResult<()> {
    let data = ingest(&args.input.spec()?)?;
    let rows = corrbreak::rolling::rolling_correlations(&data.panel, args.window)?;
    let mut out = sink(args.output.as_deref())?;
    output::write_rolling(
        &mut out,
        data.panel.labels(),
        data.row_labels.as_deref(),
        &rows,
    )?;
    out.flush()?;
    Ok(())
}

fn cmd_critical(args: &CriticalArgs) -> CliResult<()> {
    let table = limit::load_or_simulate(
        args.limit.cache_dir().as_deref(),
        args.d,
        args.limit.grid,
        args.limit.paths,
        args.seed,
    )?;
    let cv = limit::critical_value(&table, args.alpha)?;
    println!("{cv}");
    Ok(())
}

fn cmd_study(args: &StudyArgs) -> CliResult<()> {
    let cfg = study::StudyConfig::load(&args.config)?;
    let cache = args
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    let lines = study::run_study(&cfg, cache.as_deref())?;
    let mut out = sink(args.output.as_deref())?;
    study::write_study(&mut out, &lines)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Rolling(a) => cmd_rolling(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Study(a) => cmd_study(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corrbreak: {e}");
            e.exit_code()
        }
    }
}
