//! Command-line front end for the `horseshoe` library.
//!
//! [`run`] parses arguments, resolves the configuration (flags over the
//! `--config` TOML file over defaults), executes one pipeline on a worker
//! pool and writes a JSON report plus an optional CSV table. Exit codes: 0 on
//! completion, including inconclusive verdicts; 2 on configuration errors;
//! 3 on numerical failures.

// NaN must fail validation, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

pub use commands::{
    BowenArgs, CertifyCommand, CloseArgs, CounterexampleArgs, HeteroArgs, PipelineArgs, PlissArgs, ScheduleArgs,
    TheoremAArgs, TheoremBArgs,
};
pub use config::{FileConfig, Mode, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "horseshoe", version, about = "Entropy, closing and horseshoe diagnostics for torus maps")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `cat`, `standard:K`, `translation:a,b`, or `+`-joined composites.
    #[arg(long, global = true)]
    pub map: Option<String>,
    #[arg(long, global = true)]
    pub theta0: Option<f64>,
    #[arg(long = "C", global = true)]
    pub c: Option<f64>,
    #[arg(long = "Cprime", global = true)]
    pub c_prime: Option<f64>,
    #[arg(long = "C0", global = true)]
    pub c0: Option<f64>,
    #[arg(long, global = true)]
    pub c1: Option<f64>,
    #[arg(long = "C2", global = true)]
    pub c2: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Decomposition mask resolution.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub seeds_per_level: Option<usize>,
    /// Report path; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV path for the tabular series.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub toy_q: Option<Vec<u64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub toy_l: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub toy_eta: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub toy_xi: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub toy_lambda: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub toy_required: Option<f64>,
    /// Worker threads; defaults to $HORSESHOE_WORKERS, then all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Add `runtime_ms` to the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parameter cascade for given A, h, eps.
    Schedule(ScheduleArgs),
    /// Bowen-ball covering numbers and their growth rate.
    Bowen(BowenArgs),
    /// Pliss-good indices of a sequence read from CSV.
    Pliss(PlissArgs),
    /// Harvest of hyperbolic periodic points by closing near-returns.
    Close(CloseArgs),
    /// Heteroclinic search among periodic points.
    Hetero(HeteroArgs),
    /// Full entropy pipelines.
    #[command(subcommand)]
    Certify(CertifyCommand),
    /// Zero-Lebesgue-entropy skew product with positive complexity growth.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<horseshoe::Error> for Failure {
    fn from(e: horseshoe::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

/// A CSV table; cells are preformatted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// CSV text led by a `# STAMP` comment line.
    fn render(&self, stamp: &str) -> Result<Vec<u8>, Failure> {
        let mut buf = format!("# {stamp}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| Failure::config(format!("writing CSV: {e}"));
            w.write_record(&self.header).map_err(io)?;
            for r in &self.rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| Failure::config(format!("writing CSV: {e}")))?;
        }
        Ok(buf)
    }
}

/// What a subcommand hands back for emission.
pub struct Outcome {
    pub params: Value,
    pub result: Value,
    pub table: Option<Table>,
    /// Tables with their own destination flags.
    pub extra_tables: Vec<(PathBuf, Table)>,
}

impl Outcome {
    pub fn new(params: impl Serialize, result: Value) -> Self {
        Self { params: serde_json::to_value(params).expect("params serialize"), result, table: None, extra_tables: Vec::new() }
    }

    pub fn with_table(mut self, t: Table) -> Self {
        self.table = Some(t);
        self
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Schedule(_) => "schedule",
            Command::Bowen(_) => "bowen",
            Command::Pliss(_) => "pliss",
            Command::Close(_) => "close",
            Command::Hetero(_) => "hetero",
            Command::Certify(CertifyCommand::TheoremA(_)) => "certify theorem-a",
            Command::Certify(CertifyCommand::TheoremB(_)) => "certify theorem-b",
            Command::Counterexample(_) => "counterexample",
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_CONFIG
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "horseshoe {}: {f}", cli.command.name());
            f.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let workers = config::workers(cli.global.workers, file.workers)?;
    let cfg = RunConfig::resolve(&cli.global, file)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::config(format!("worker pool: {e}")))?;

    let start = Instant::now();
    let outcome = pool.install(|| commands::dispatch(&cli.command, &cfg))?;
    let elapsed = start.elapsed();

    let stamp = cfg.mode.stamp();
    let mut report = json!({
        "stamp": stamp,
        "command": cli.command.name(),
        "config": cfg,
        "map": cfg.surface_map(),
        "params": outcome.params,
        "result": outcome.result,
    });
    if cli.global.timing {
        report["runtime_ms"] = json!(elapsed.as_millis() as u64);
    }
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::config(format!("report: {e}")))?;
    text.push('\n');
    match &cfg.output.report {
        Some(p) => write_file(p, text.as_bytes())?,
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::config(format!("writing report: {e}")))?,
    }
    if let (Some(t), Some(p)) = (&outcome.table, &cfg.output.table) {
        write_file(p, &t.render(stamp)?)?;
    }
    for (p, t) in &outcome.extra_tables {
        write_file(p, &t.render(stamp)?)?;
    }
    Ok(())
}

fn write_file(p: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(p, bytes).map_err(|e| Failure::config(format!("writing {}: {e}", p.display())))
}
