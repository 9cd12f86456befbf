//! `kwik` command line: `run`, `aggregate`, `list-domains`.
//!
//! Exit codes: 0 on success, 2 for usage and configuration errors (including
//! a missing config file), 1 for failures while running.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::config::{AlgorithmId, DomainId, ExperimentConfig};
use crate::harness::io::{read_log_csv, write_log, write_log_csv, write_summary, write_summary_csv};
use crate::harness::run::{run_experiment_with, Execution};
use crate::harness::stats::{aggregate, Field};

#[derive(Debug, Parser)]
#[command(name = "kwik", version, about = "KWIK linear-regression RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its per-step or per-episode log as CSV.
    Run(RunArgs),
    /// Summarize a run log: mean and 95% interval per index.
    Aggregate(AggregateArgs),
    /// Print the available domain ids.
    ListDomains,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<DomainId>,
    #[arg(long)]
    algorithm: Option<AlgorithmId>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run trials one after another instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
    /// Record wall-clock milliseconds (makes the output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Run log CSV written by `run`.
    #[arg(long)]
    input: PathBuf,
    /// metric | cumulative | bottom_count | policy_value
    #[arg(long, default_value = "metric")]
    field: Field,
    /// Trailing moving-average window.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl clap::ValueEnum for DomainId {
    fn value_variants<'a>() -> &'a [Self] {
        &DomainId::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

impl clap::ValueEnum for AlgorithmId {
    fn value_variants<'a>() -> &'a [Self] {
        &AlgorithmId::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.domain {
        cfg.domain = v;
        if args.algorithm.is_none() && !v.algorithms().contains(&cfg.algorithm) {
            cfg.algorithm = v.algorithms()[0];
        }
    }
    if let Some(v) = args.algorithm {
        cfg.algorithm = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.steps {
        cfg.steps = v;
    }
    if let Some(v) = args.episodes {
        cfg.episodes = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.alpha0 {
        cfg.alpha0 = Some(v);
    }
    if let Some(v) = args.r0 {
        cfg.r0 = v;
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    if args.timing {
        cfg.record_wall_time = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = build_config(&args)?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let log = run_experiment_with(&cfg, execution)?;
    match &cfg.out {
        Some(path) => write_log_csv(path, &log),
        None => write_log(stdout, &log),
    }
}

fn aggregate_cmd(args: AggregateArgs, stdout: &mut dyn Write) -> Result<()> {
    let log = read_log_csv(&args.input)?;
    let summary = aggregate(&log, args.field, args.window)?;
    match &args.out {
        Some(path) => write_summary_csv(path, &summary),
        None => write_summary(stdout, &summary),
    }
}

fn exit_code(err: &Error, config_stage: bool) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Io { .. } if config_stage => 2,
        _ => 1,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(args) => {
            if let Err(e) = build_config(&args) {
                let _ = writeln!(stderr, "error: {e}");
                return exit_code(&e, true);
            }
            run(args, stdout)
        }
        Command::Aggregate(args) => aggregate_cmd(args, stdout),
        Command::ListDomains => {
            for d in DomainId::ALL {
                let algs: Vec<&str> = d.algorithms().iter().map(|a| a.as_str()).collect();
                let _ = writeln!(stdout, "{}\t{}", d.as_str(), algs.join(","));
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e, false)
        }
    }
}
