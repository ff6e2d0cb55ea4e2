//! `qsoc`: runs verification suites from a JSON config and writes reports.
//!
//! Exit codes: 0 when every suite passes, 1 when a suite fails, 2 on any
//! configuration or runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsoc::config::{RunConfig, Suite};
use qsoc::suites::run_config_with_threads;

#[derive(Parser)]
#[command(
    name = "qsoc",
    version,
    about = "Discrete fermionic stochastic control: verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured suites and write the reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suite to run (repeatable); replaces `suites` in the config.
        #[arg(long = "suite", value_parser = parse_suite)]
        suites: Vec<Suite>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "QSOC_THREADS")]
        threads: Option<usize>,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite `{s}` (expected one of {})", names.join(", "))
    })
}

fn run(
    config: PathBuf,
    out: Option<PathBuf>,
    suites: Vec<Suite>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> qsoc::Result<bool> {
    let mut cfg = RunConfig::from_path(&config)?;
    if let Some(out) = out {
        cfg.output = out;
    }
    if !suites.is_empty() {
        cfg.suites = suites;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let (report, timings) = run_config_with_threads(&cfg, threads)?;
    report.write(&cfg.output)?;
    timings.write(&cfg.output)?;
    for s in &report.suites {
        let secs = timings.suites.get(&s.name).copied().unwrap_or(0.0);
        println!(
            "{:<13} {:<4} {secs:>8.3}s",
            s.name,
            if s.status.passed() { "pass" } else { "FAIL" }
        );
    }
    let ok = report.verdict.passed();
    println!(
        "verdict: {}  (reports in {})",
        if ok { "pass" } else { "fail" },
        cfg.output.display()
    );
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            suites,
            seed,
            threads,
        } => run(config, out, suites, seed, threads),
        Command::Validate { config } => RunConfig::from_path(&config).map(|cfg| {
            let names: Vec<_> = cfg.ordered_suites().iter().map(|s| s.name()).collect();
            println!(
                "config ok: problem `{}`, N = {}, suites {}",
                cfg.problem.name,
                cfg.grid.n,
                names.join(", ")
            );
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
