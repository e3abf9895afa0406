use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sedkit_core::bench::MetricKind;

use sedkit_cli::error::Result;
use sedkit_cli::{demo, parse_config, report, runner};

#[derive(Parser)]
#[command(
    name = "sedkit",
    version,
    about = "Run, aggregate, and illustrate sequential experimental design benchmarks"
)]
struct Cli {
    /// Worker threads for dispatching independent runs (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every run described by a key = value config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
    },
    /// Summarize finished runs in a directory into a comparison table.
    Aggregate {
        /// Directory holding result CSVs from `run`.
        dir: PathBuf,
        /// Score to tabulate: GAP for maximization runs, fractional
        /// integration error for quadrature runs.
        #[arg(long, value_enum)]
        metric: MetricArg,
    },
    /// Dump 1-D acquisition curves for the two-endpoint demonstration.
    Demo1d {
        /// Output CSV path.
        out: PathBuf,
        /// Seed for the Monte Carlo draws and optimizer starts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Gap,
    Fracerr,
}

impl MetricArg {
    fn kind(self) -> MetricKind {
        match self {
            MetricArg::Gap => MetricKind::MeanGap,
            MetricArg::Fracerr => MetricKind::MedianFracErr,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            MetricArg::Gap => "gap",
            MetricArg::Fracerr => "fracerr",
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run { config } => {
            let text = fs::read_to_string(&config).map_err(|e| {
                sedkit_cli::CliError::io(format!("reading {}", config.display()), e)
            })?;
            let cfg = parse_config(&text)?;
            let (dir, outcomes) = runner::execute(&cfg, cli.jobs)?;
            let aborted: Vec<_> = outcomes.iter().filter(|o| o.abort.is_some()).collect();
            println!(
                "wrote {} runs to {}{}",
                outcomes.len(),
                dir.display(),
                if aborted.is_empty() {
                    String::new()
                } else {
                    format!(" ({} aborted)", aborted.len())
                }
            );
            for o in &aborted {
                eprintln!(
                    "aborted: {} / {} / repeat {}: {}",
                    o.function,
                    o.policy,
                    o.repeat,
                    o.abort.as_deref().unwrap_or("")
                );
            }
            Ok(if aborted.is_empty() { 0 } else { 1 })
        }
        Command::Aggregate { dir, metric } => {
            let text = report::cmd_aggregate(&dir, metric.kind(), metric.as_str())?;
            print!("{text}");
            Ok(0)
        }
        Command::Demo1d { out, seed } => {
            demo::cmd_demo1d(&out, seed)?;
            eprintln!("wrote {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
