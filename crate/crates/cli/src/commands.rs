// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! The four verbs and their exit-status mapping.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, ModelKind, SweepParameter};
use crate::output::{self, Cell, OutputError};
use crate::plots::{line_chart, Series};
use crate::scenario::{self, RunOutcome};
use crate::validation::{self, CheckOutcome, ValidateOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] chargeopt_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] OutputError),
    #[error("cannot draw figure: {0}")]
    Plot(String),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Output(_) | CliError::Plot(_) => 3,
        }
    }
}

/// Flags shared by `run` and the sweeps.
#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub emit_plots: bool,
}

struct Prepared {
    cfg: ExperimentConfig,
    out: PathBuf,
}

fn prepare(args: &RunArgs) -> Result<Prepared, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.output = Some(out.clone());
    Ok(Prepared { cfg, out })
}

fn config_error(args: &RunArgs, key: &str, message: &str) -> CliError {
    let text = std::fs::read_to_string(&args.config).unwrap_or_default();
    let line = text
        .lines()
        .position(|l| l.trim_start().starts_with(key))
        .map_or(1, |i| i + 1);
    CliError::Config(ConfigError {
        path: args.config.clone(),
        line,
        column: 1,
        message: message.to_string(),
    })
}

fn plot(path: &Path, title: &str, x: &str, y: &str, series: &[Series<'_>], markers: bool) -> Result<(), CliError> {
    line_chart(path, title, x, y, series, markers).map_err(CliError::Plot)
}

fn zip_points(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().copied().zip(y.iter().copied()).collect()
}

fn plot_run(dir: &Path, run: &RunOutcome) -> Result<(), CliError> {
    let r = &run.report;
    plot(
        &dir.join("pulse.svg"),
        "Drive fields",
        "t [1/omega]",
        "field [omega]",
        &[
            Series {
                label: "optimized",
                points: zip_points(&r.times, &run.optimization.pulse.values),
            },
            Series {
                label: "sinusoidal",
                points: zip_points(&r.times, &run.baseline_field),
            },
        ],
        false,
    )?;
    plot(
        &dir.join("trajectory.svg"),
        "Battery energy and ergotropy",
        "t [1/omega]",
        "[omega]",
        &[
            Series {
                label: "E_B optimized",
                points: zip_points(&r.times, &r.battery_energy),
            },
            Series {
                label: "ergotropy optimized",
                points: zip_points(&r.times, &r.battery_ergotropy),
            },
            Series {
                label: "E_B sinusoidal",
                points: zip_points(&r.times, &r.baseline_energy),
            },
            Series {
                label: "ergotropy sinusoidal",
                points: zip_points(&r.times, &r.baseline_ergotropy),
            },
        ],
        false,
    )?;
    let recs = &run.optimization.records;
    plot(
        &dir.join("convergence.svg"),
        "Convergence",
        "iteration",
        "J",
        &[Series {
            label: "J",
            points: recs.iter().map(|r| (r.iteration as f64, r.j)).collect(),
        }],
        false,
    )
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let Prepared { cfg, out } = prepare(args)?;
    let run = scenario::run(&cfg)?;
    output::write_run(&out, &run)?;
    if args.emit_plots {
        plot_run(&out, &run)?;
    }
    Ok(run)
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Output(OutputError {
            path: PathBuf::from("<worker pool>"),
            source: std::io::Error::other(e),
        }))
}

/// Runs one optimization per configuration on a bounded pool. Each point
/// writes its own directory; results come back in input order.
fn run_points(configs: Vec<(String, ExperimentConfig)>, out: &Path, workers: Option<usize>, emit_plots: bool) -> Result<Vec<RunOutcome>, CliError> {
    let pool = pool(workers)?;
    let results: Vec<Result<RunOutcome, CliError>> = pool.install(|| {
        configs
            .into_par_iter()
            .map(|(label, cfg)| {
                let run = scenario::run(&cfg)?;
                let dir = out.join("points").join(label);
                output::write_run(&dir, &run)?;
                if emit_plots {
                    plot_run(&dir, &run)?;
                }
                Ok(run)
            })
            .collect()
    });
    results.into_iter().collect()
}

fn sweep_values(args: &RunArgs, cfg: &ExperimentConfig, want: SweepParameter) -> Result<Vec<f64>, CliError> {
    match &cfg.sweep {
        Some(s) if s.parameter == want => Ok(s.values.clone()),
        Some(_) => Err(config_error(args, "parameter", "sweep `parameter` does not match this command")),
        None => Err(config_error(args, "[", "missing section `[sweep]` with `parameter` and `values`")),
    }
}

pub fn cmd_sweep_temperature(args: &RunArgs) -> Result<Vec<RunOutcome>, CliError> {
    let Prepared { cfg, out } = prepare(args)?;
    if cfg.model != ModelKind::Qubit {
        return Err(config_error(args, "model", "sweep-temperature requires `model = \"qubit\"`"));
    }
    let values = sweep_values(args, &cfg, SweepParameter::NBath)?;
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &nb)| (format!("n_bath_{i:03}"), cfg.with_n_bath(nb)))
        .collect();
    let runs = run_points(configs, &out, args.workers, args.emit_plots)?;
    let rows = values.iter().zip(&runs).map(|(&nb, run)| {
        let r = &run.report;
        vec![
            Cell::Real(nb),
            Cell::Real(r.final_ergotropy()),
            Cell::Real(r.final_baseline_ergotropy()),
            Cell::Real(r.pulse_cost),
            Cell::Real(r.baseline_cost),
        ]
    });
    output::write_csv(&out.join("sweep.csv"), &output::SWEEP_HEADER, rows)?;
    if args.emit_plots {
        let pts = |f: &dyn Fn(&RunOutcome) -> f64| values.iter().zip(&runs).map(|(&nb, r)| (nb, f(r))).collect::<Vec<_>>();
        plot(
            &out.join("sweep.svg"),
            "Final battery ergotropy versus bath occupation",
            "N_b",
            "ergotropy [omega]",
            &[
                Series {
                    label: "optimized",
                    points: pts(&|r| r.report.final_ergotropy()),
                },
                Series {
                    label: "sinusoidal",
                    points: pts(&|r| r.report.final_baseline_ergotropy()),
                },
            ],
            true,
        )?;
        plot(
            &out.join("sweep_cost.svg"),
            "Drive cost versus bath occupation",
            "N_b",
            "W [omega]",
            &[Series {
                label: "optimized",
                points: pts(&|r| r.report.pulse_cost),
            }],
            true,
        )?;
    }
    Ok(runs)
}

#[derive(Debug, Serialize)]
struct ProtocolSummary {
    lambda_low: f64,
    lambda_high: f64,
    fidelity_tol: f64,
    benchmark_fidelity: f64,
    benchmark_cost: f64,
    benchmark_iterations: usize,
    refined_fidelity: f64,
    refined_cost: f64,
    refined_iterations: usize,
    reached: bool,
    recommendation: String,
}

/// Outcome of `sweep-lambda`: one run per λ plus the two-stage protocol.
#[derive(Debug)]
pub struct LambdaSweep {
    pub runs: Vec<RunOutcome>,
    pub protocol: Option<chargeopt_core::krotov::LambdaProtocolResult>,
}

pub fn cmd_sweep_lambda(args: &RunArgs) -> Result<LambdaSweep, CliError> {
    let Prepared { cfg, out } = prepare(args)?;
    let values = sweep_values(args, &cfg, SweepParameter::Lambda)?;
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &l)| (format!("lambda_{i:03}"), cfg.with_lambda(l)))
        .collect();
    let runs = run_points(configs, &out, args.workers, args.emit_plots)?;
    let pareto: Vec<_> = values
        .iter()
        .zip(&runs)
        .flat_map(|(&l, r)| chargeopt_core::krotov::ParetoRecord::from_result(l, &r.optimization))
        .collect();
    output::write_csv(&out.join("pareto.csv"), &output::PARETO_HEADER, output::pareto_rows(&pareto))?;

    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let protocol = if lo < hi {
        let p = scenario::run_protocol(&cfg, lo, hi)?;
        let (b, r) = (p.benchmark.last(), p.refined.last());
        let recommendation = if p.reached && r.pulse_cost <= b.pulse_cost {
            format!(
                "use lambda = {hi} for {} iterations: fidelity {:.6} at cost {:.6}, against {:.6} at cost {:.6} for lambda = {lo}",
                r.iteration, r.fidelity, r.pulse_cost, b.fidelity, b.pulse_cost
            )
        } else if p.reached {
            format!("lambda = {hi} reaches the benchmark but costs more; keep lambda = {lo}")
        } else {
            format!(
                "best effort: lambda = {hi} stopped at fidelity {:.6} after {} iterations, short of {:.6}",
                r.fidelity, r.iteration, p.benchmark_fidelity
            )
        };
        output::write_json(
            &out.join("protocol.json"),
            &ProtocolSummary {
                lambda_low: lo,
                lambda_high: hi,
                fidelity_tol: cfg.protocol.fidelity_tol,
                benchmark_fidelity: p.benchmark_fidelity,
                benchmark_cost: b.pulse_cost,
                benchmark_iterations: b.iteration,
                refined_fidelity: r.fidelity,
                refined_cost: r.pulse_cost,
                refined_iterations: r.iteration,
                reached: p.reached,
                recommendation,
            },
        )?;
        output::write_csv(&out.join("protocol_pareto.csv"), &output::PARETO_HEADER, output::pareto_rows(&p.pareto))?;
        Some(p)
    } else {
        None
    };

    if args.emit_plots {
        let series: Vec<Series<'_>> = values
            .iter()
            .zip(&runs)
            .map(|(_, r)| Series {
                label: "lambda run",
                points: r.optimization.records.iter().map(|x| (x.pulse_cost, x.fidelity)).collect(),
            })
            .collect();
        plot(&out.join("pareto.svg"), "Fidelity versus drive cost", "W [omega]", "fidelity", &series, true)?;
    }
    Ok(LambdaSweep { runs, protocol })
}

pub fn cmd_validate(opts: &ValidateOptions) -> Result<Vec<CheckOutcome>, CliError> {
    let outcomes = validation::run_all(opts)?;
    print!("{}", validation::render_table(&outcomes));
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{}: {}", o.name, o.detail)).collect();
    if failed.is_empty() {
        Ok(outcomes)
    } else {
        Err(CliError::Validation(failed))
    }
}
