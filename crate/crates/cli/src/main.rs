//! `mgof` — batch experiment driver for multinomial goodness-of-fit studies.
//!
//! Each subcommand reads one JSON config, runs its computation (exact,
//! oracle-based, or Monte Carlo) and writes `<out>/<id>.csv` plus
//! `<out>/<id>.json`. Identical configs reproduce identical results; the
//! thread count only changes speed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use commands::Overrides;

#[derive(Parser)]
#[command(name = "mgof", version, about = "Goodness-of-fit experiments for multinomial uniformity: moments, power, efficiency")]
struct Cli {
    /// Experiment config file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Replicate-count override.
    #[arg(long, global = true)]
    reps: Option<u64>,

    /// Output directory for the CSV table and JSON summary.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker-thread cap; affects speed only, never results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Poisson functionals of the configured statistics across a rate
    /// grid, with the first-order expansions for comparison.
    Moments,
    /// Monte Carlo power against a local alternative next to the first-order
    /// power formula.
    Power,
    /// Monte Carlo correlation of a statistic with the chi-square statistic
    /// under the null, next to the oracle value.
    Corr,
    /// Normal-approximation diagnostic of the standardized statistic.
    Normality,
    /// Closed-form sample-size ratio, optional operational search, and the
    /// verdict for the configured pair of tests.
    Iare,
    /// Efficiency verdicts for a list of statistics under one growth law and
    /// rate family.
    Verdict,
    /// Run the acceptance criteria and report pass/fail per criterion.
    Verify,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = mgof_core::configure_threads(threads) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let ov = Overrides {
        seed: cli.seed,
        reps: cli.reps,
    };

    let need_config = || -> Result<&PathBuf, String> {
        cli.config
            .as_ref()
            .ok_or_else(|| "missing --config PATH".to_string())
    };

    let result = match &cli.command {
        Command::Moments => need_config()
            .map_err(anyhow::Error::msg)
            .and_then(|p| commands::cmd_moments(p, &cli.out, &ov))
            .map(|_| true),
        Command::Power => need_config()
            .map_err(anyhow::Error::msg)
            .and_then(|p| commands::cmd_power(p, &cli.out, &ov))
            .map(|_| true),
        Command::Corr => need_config()
            .map_err(anyhow::Error::msg)
            .and_then(|p| commands::cmd_corr(p, &cli.out, &ov))
            .map(|_| true),
        Command::Normality => need_config()
            .map_err(anyhow::Error::msg)
            .and_then(|p| commands::cmd_normality(p, &cli.out, &ov))
            .map(|_| true),
        Command::Iare => need_config()
            .map_err(anyhow::Error::msg)
            .and_then(|p| commands::cmd_iare(p, &cli.out, &ov))
            .map(|_| true),
        Command::Verdict => need_config()
            .map_err(anyhow::Error::msg)
            .and_then(|p| commands::cmd_verdict(p, &cli.out, &ov))
            .map(|_| true),
        Command::Verify => commands::cmd_verify(cli.config.as_deref(), &cli.out, &ov)
            .map(|(_, all_pass)| all_pass),
    };

    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: acceptance criteria failed");
            ExitCode::from(EXIT_ACCEPTANCE)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify_error(&e))
        }
    }
}

/// Exit codes: 2 for configuration problems, 3 for exceeded enumeration
/// budgets, 1 otherwise.
fn classify_error(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<mgof_core::Error>() {
            return match core {
                mgof_core::Error::BudgetExceeded { .. } => EXIT_BUDGET,
                mgof_core::Error::InvalidParameter(_)
                | mgof_core::Error::InsufficientReps { .. } => EXIT_CONFIG,
                _ => 1,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some()
            || cause.downcast_ref::<std::io::Error>().is_some()
        {
            return EXIT_CONFIG;
        }
    }
    // Validation failures raised directly by the config layer.
    let text = format!("{e}");
    if text.contains("config")
        || text.contains("must")
        || text.contains("unknown")
        || text.contains("missing")
        || text.contains("needs")
        || text.contains("weaken")
    {
        EXIT_CONFIG
    } else {
        1
    }
}
