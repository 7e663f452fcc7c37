// SPDX-License-Identifier: Apache-2.0

//! `cfl <subcommand> --config <path> [--seed N --trials N --out DIR]`

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use cfl_cli::{run_experiment, CliError, Command, ExperimentConfig, RunOptions, SummaryRow, EXIT_CONFIG};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cfl", version, about = "Fail-stop attacks on multiparty coin-flipping protocols")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Honest executions of the configured protocol.
    Simulate(Common),
    /// The nugget-dispatched attack with its no-abort coupling check.
    Attack(Common),
    /// Nugget search and structural verification.
    Nugget(Common),
    /// Laplace-threshold halting game on the adversarial instance.
    Lapexp(Common),
    /// Gap statistics of a generated martingale ensemble.
    MartingaleCheck(Common),
    /// Closed-form Bernoulli, Laplace and half-sample checks.
    VerifyLemmas(Common),
    /// Prints an existing summary and exits with its verdict.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

const DEFAULT_OUT: &str = "cfl-out";

fn threads(cfg: &ExperimentConfig) -> Result<Option<usize>, CliError> {
    match std::env::var("CFL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("CFL_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(cfg.threads),
    }
}

fn print_rows(rows: &[SummaryRow]) {
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    let width = rows.iter().map(|r| r.estimator.len()).max().unwrap_or(9).max(9);
    println!("{:<width$}  {:>12}  {:>10}  {:>12}  {:>8}  pass", "estimator", "estimate", "se", "bound", "trials");
    for r in rows {
        println!(
            "{:<width$}  {:>12}  {:>10}  {:>12}  {:>8}  {:?}",
            r.estimator,
            fmt(r.estimate),
            fmt(r.se),
            fmt(r.bound),
            r.trials,
            r.pass
        );
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (cmd, common) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Attack(c) => (Command::Attack, c),
        Sub::Nugget(c) => (Command::Nugget, c),
        Sub::Lapexp(c) => (Command::Lapexp, c),
        Sub::MartingaleCheck(c) => (Command::MartingaleCheck, c),
        Sub::VerifyLemmas(c) => (Command::VerifyLemmas, c),
        Sub::Report(a) => {
            let cfg = a.config.as_deref().map(ExperimentConfig::load).transpose()?;
            let out = a.out.or_else(|| cfg.and_then(|c| c.out_dir)).unwrap_or_else(|| DEFAULT_OUT.into());
            let outcome = run_experiment(Command::Report, &ExperimentConfig::new(None), &RunOptions { out_dir: out, threads: None })?;
            print_rows(&outcome.rows);
            println!("records: {}", outcome.records);
            return Ok(outcome.exit_code());
        }
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.trials.is_some() {
        cfg.trials = common.trials;
    }
    let out_dir = common.out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
    let opts = RunOptions { out_dir, threads: threads(&cfg)? };
    let outcome = run_experiment(cmd, &cfg, &opts)?;
    print_rows(&outcome.rows);
    eprintln!("{} records written to {}", outcome.records, opts.out_dir.display());
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli).context("cfl failed") {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(EXIT_CONFIG, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
