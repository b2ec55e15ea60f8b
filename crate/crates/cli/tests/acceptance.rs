// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: ten end-to-end criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines appear in order and
//! uncaptured. The process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use chargeopt::config::ExperimentConfig;
use chargeopt::scenario;
use chargeopt::validation::{ergotropy_dominance, field_trace_deviation, gaussian_fock_deviation, gradient_finite_differences, temperature_separation};
use chargeopt_core::energetics::drive_cost;
use chargeopt_core::{PulseProfile, TimeGrid};

const SEED: u64 = 20_260_101;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{e}"))
}

/// The reference costs are quoted to two decimals (31.42 for 10π, 94.25 for
/// 30π); a value agrees with one when it rounds to it.
fn rounds_to(x: f64, quoted: f64) -> bool {
    (x * 100.0).round() == (quoted * 100.0).round()
}

fn within(t: Duration, minutes: f64) -> bool {
    t.as_secs_f64() <= 60.0 * minutes
}

fn c1_sinusoid_cost() -> Verdict {
    let start = Instant::now();
    let tau = PI / 0.2;
    let grid = TimeGrid::new(tau, 1000).unwrap();
    let cost = drive_cost(&PulseProfile::from_fn(grid, |t| 2.0 * t.cos()));
    // ∫₀^τ 4cos²t dt
    let closed = 2.0 * tau + (2.0 * tau).sin();
    let elapsed = start.elapsed();
    verdict(
        rounds_to(cost, 31.42) && (cost - closed).abs() < 1e-6 && elapsed < Duration::from_secs(1),
        format!(
            "W = {cost:.9} (quoted 31.42, offset {:.2e}), closed form {closed:.9}, {elapsed:.2?}",
            cost - 31.42
        ),
    )
}

fn c2_single_qubit() -> Verdict {
    let start = Instant::now();
    let run = scenario::run(&config("single_cell.toml")).unwrap();
    let r = &run.report;
    let recs = &run.optimization.records;
    let worst_rise = recs.windows(2).map(|w| w[1].j - w[0].j).fold(f64::NEG_INFINITY, f64::max);
    let (aw, ae) = (r.alpha_w.unwrap_or(f64::NAN), r.alpha_e.unwrap_or(f64::NAN));
    verdict(
        (5.1..=8.0).contains(&r.pulse_cost) && aw >= 290.0 && ae >= 5.0 && worst_rise <= 1e-9 && within(start.elapsed(), 10.0),
        format!(
            "W = {:.4}, alpha_W = {aw:.1}%, alpha_E = {ae:.2}%, largest J rise {worst_rise:.2e}, {:.1?}",
            r.pulse_cost,
            start.elapsed()
        ),
    )
}

fn c3_temperature_sweep() -> Verdict {
    let start = Instant::now();
    let cfg = config("temperature_sweep.toml");
    let values = cfg.sweep.as_ref().unwrap().values.clone();
    let runs: Vec<_> = values.iter().map(|&nb| scenario::run(&cfg.with_n_bath(nb)).unwrap()).collect();
    let opt: Vec<f64> = runs.iter().map(|r| r.report.final_ergotropy()).collect();
    let osc: Vec<f64> = runs.iter().map(|r| r.report.final_baseline_ergotropy()).collect();
    let tail: Vec<f64> = values.iter().zip(&opt).filter(|(&nb, _)| nb >= 1.0).map(|(_, &e)| e).collect();
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    let gap0 = (opt[0] - osc[0]).abs();
    let gap_last = (opt[opt.len() - 1] - osc[osc.len() - 1]).abs();
    let baseline_ok = runs.iter().all(|r| rounds_to(r.report.baseline_cost, 31.42) && (r.report.baseline_cost - 10.0 * PI).abs() < 1e-6);
    verdict(
        values[0] == 0.0 && monotone && gap_last < 0.1 * gap0 && baseline_ok && within(start.elapsed(), 30.0),
        format!(
            "{} points, non-increasing beyond N_b = 1: {monotone}, gap {gap_last:.2e} vs {gap0:.2e} at N_b = 0, baseline ok: {baseline_ok}, {:.1?}",
            values.len(),
            start.elapsed()
        ),
    )
}

fn c4_oscillator() -> (Verdict, PulseProfile) {
    let short = scenario::run(&config("oscillator.toml")).unwrap();
    let long = scenario::run(&config("oscillator_long.toml")).unwrap();
    let (s, l) = (&short.report, &long.report);
    let ae_s = s.alpha_e.unwrap_or(f64::NAN);
    let (aw_l, ae_l) = (l.alpha_w.unwrap_or(f64::NAN), l.alpha_e.unwrap_or(f64::NAN));
    let v = verdict(
        (28.0..=33.0).contains(&s.pulse_cost) && ae_s >= 15.0 && rounds_to(l.baseline_cost, 94.25) && aw_l >= 100.0 && ae_l >= 18.0,
        format!(
            "tau = pi/g: W = {:.3}, alpha_E = {ae_s:.1}%; tau = 3pi/g: W_osc = {:.3}, alpha_W = {aw_l:.0}%, alpha_E = {ae_l:.1}%",
            s.pulse_cost, l.baseline_cost
        ),
    );
    (v, short.optimization.pulse)
}

fn c5_temperature_independence(pulse: &PulseProfile) -> Verdict {
    let spec = config("oscillator.toml").oscillator_spec();
    let sep = temperature_separation(&spec, pulse, &[0.0, 1.0, 3.0]).unwrap();
    verdict(
        sep.ergotropy_spread < 1e-8 && sep.energy_defect < 1e-8,
        format!("ergotropy spread {:.2e}, energy defect {:.2e}", sep.ergotropy_spread, sep.energy_defect),
    )
}

fn c6_moments_vs_fock() -> Verdict {
    let start = Instant::now();
    let cfg = config("oscillator.toml");
    let spec = cfg.oscillator_spec();
    let grid = TimeGrid::new(PI / spec.g, 1000).unwrap();
    let moments = gaussian_fock_deviation(&spec, 30, &grid, cfg.baseline_amplitude).unwrap();
    let trace = field_trace_deviation(&spec, 30, 100, SEED).unwrap();
    verdict(
        moments < 1e-6 && trace < 1e-6 && within(start.elapsed(), 5.0),
        format!("moment deviation {moments:.2e}, trace deviation {trace:.2e} (100 pairs), {:.1?}", start.elapsed()),
    )
}

fn c7_ergotropy_bound() -> Verdict {
    let (excess, analytic) = ergotropy_dominance(50, 10_000, SEED).unwrap();
    verdict(
        excess <= 1e-9 && analytic < 1e-12,
        format!("max excess over 10^4 unitaries x 50 states {excess:.2e}, analytic cases {analytic:.1e}"),
    )
}

fn c8_three_cells() -> Verdict {
    let start = Instant::now();
    let run = scenario::run(&config("three_cells.toml")).unwrap();
    let (aw, ae) = (run.report.alpha_w.unwrap_or(f64::NAN), run.report.alpha_e.unwrap_or(f64::NAN));
    verdict(
        aw > 0.0 && ae > 0.0 && within(start.elapsed(), 30.0),
        format!("alpha_W = {aw:.2}%, alpha_E = {ae:.2}%, {:.1?}", start.elapsed()),
    )
}

fn c9_gradient() -> Verdict {
    let start = Instant::now();
    let g = gradient_finite_differences(20, SEED).unwrap();
    verdict(
        g.worst_relative <= 0.02 && within(start.elapsed(), 2.0),
        format!("{} samples, worst relative error {:.2e}, {:.1?}", g.samples, g.worst_relative, start.elapsed()),
    )
}

fn c10_lambda_protocol() -> Verdict {
    let start = Instant::now();
    let cfg = config("lambda_sweep.toml");
    let values = &cfg.sweep.as_ref().unwrap().values;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p = scenario::run_protocol(&cfg, lo, hi).unwrap();
    let (b, r) = (p.benchmark.last(), p.refined.last());
    verdict(
        p.reached && r.pulse_cost <= b.pulse_cost && within(start.elapsed(), 20.0),
        format!(
            "F* = {:.6}; lambda {hi}: F = {:.6} at W = {:.3} (iteration {}); lambda {lo}: W = {:.3}, {:.1?}",
            p.benchmark_fidelity,
            r.fidelity,
            r.pulse_cost,
            r.iteration,
            b.pulse_cost,
            start.elapsed()
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let mut report = |name: &'static str, v: Verdict| {
        println!("{}  {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        results.push((name, v));
    };
    report("1 sinusoidal drive cost", c1_sinusoid_cost());
    report("2 single-cell qubit charging", c2_single_qubit());
    report("3 temperature sweep", c3_temperature_sweep());
    let (v4, pulse) = c4_oscillator();
    report("4 oscillator charging", v4);
    report("5 temperature-independent ergotropy", c5_temperature_independence(&pulse));
    report("6 moment solver vs Fock truncation", c6_moments_vs_fock());
    report("7 ergotropy dominates unitary extraction", c7_ergotropy_bound());
    report("8 three-cell charging", c8_three_cells());
    report("9 field update vs finite differences", c9_gradient());
    report("10 two-stage lambda protocol", c10_lambda_protocol());

    let failed: Vec<&str> = results.iter().filter(|(_, v)| !v.passed).map(|(n, _)| *n).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
