// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use chargeopt::commands::{self, CliError, RunArgs};
use chargeopt::validation::ValidateOptions;
use clap::{Args, Parser, Subcommand};

/// Optimized charging of open quantum batteries.
#[derive(Debug, Parser)]
#[command(name = "chargeopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed recorded in the report.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Also write SVG figures.
    #[arg(long)]
    emit_plots: bool,
}

impl From<Common> for RunArgs {
    fn from(c: Common) -> Self {
        RunArgs {
            config: c.config,
            out: c.out,
            seed: c.seed,
            workers: c.workers,
            emit_plots: c.emit_plots,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize one configured scenario and compare it with the sinusoidal drive.
    Run(Common),
    /// One optimization per bath occupation in `[sweep] values`.
    SweepTemperature(Common),
    /// One optimization per lambda in `[sweep] values`, plus the two-stage protocol.
    SweepLambda(Common),
    /// Run the oracle suites and print a pass/fail table.
    Validate {
        #[arg(long, value_name = "N", default_value_t = 0)]
        seed: u64,
        /// Fock truncation used for the moment comparison.
        #[arg(long, value_name = "N", hide = true)]
        truncation: Option<usize>,
        /// Perturb one backward-generator entry (negative control).
        #[arg(long, hide = true, alias = "corrupt-ab")]
        corrupt_backward: bool,
        /// Reduced sample counts.
        #[arg(long, hide = true)]
        quick: bool,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(c) => {
            let run = commands::cmd_run(&c.into())?;
            let r = &run.report;
            let pct = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.2}%"));
            println!(
                "fidelity {:.6}  W_opt {:.6}  W_osc {:.6}  alpha_W {}  alpha_E {}",
                r.final_fidelity,
                r.pulse_cost,
                r.baseline_cost,
                pct(r.alpha_w),
                pct(r.alpha_e)
            );
            for &i in &run.optimization.monotonicity_violations {
                eprintln!("warning: J increased at iteration {i}");
            }
        }
        Command::SweepTemperature(c) => {
            let runs = commands::cmd_sweep_temperature(&c.into())?;
            println!("{} temperature points written", runs.len());
        }
        Command::SweepLambda(c) => {
            let sweep = commands::cmd_sweep_lambda(&c.into())?;
            println!("{} lambda runs written", sweep.runs.len());
            if let Some(p) = &sweep.protocol {
                println!(
                    "protocol: benchmark fidelity {:.6}; stage two {} at iteration {}",
                    p.benchmark_fidelity,
                    if p.reached { "reached it" } else { "fell short (best effort)" },
                    p.refined.last().iteration
                );
            }
        }
        Command::Validate {
            seed,
            truncation,
            corrupt_backward,
            quick,
        } => {
            commands::cmd_validate(&ValidateOptions {
                seed,
                truncation,
                corrupt_backward,
                quick,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
