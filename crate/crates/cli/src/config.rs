// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: strict TOML ingestion and resolution.
//!
//! Physical parameters never default. Numerical knobs (grid size, stopping,
//! switch-on/off fractions, protocol tolerances) do.

use std::fmt;
use std::path::{Path, PathBuf};

use chargeopt_core::gaussian::OscillatorSystemSpec;
use chargeopt_core::krotov::{ProtocolBudget, StopCriteria};
use chargeopt_core::lindblad::QubitSystemSpec;
use chargeopt_core::{ShapeConfig, TimeGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const DEFAULT_N_STEPS: usize = 1000;
pub const DEFAULT_SWITCH_FRACTION: f64 = 0.005;
pub const DEFAULT_FIDELITY_TOL: f64 = 1e-3;

/// A configuration problem, anchored to a line of the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.path.display(), self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qubit,
    Oscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    ExcitedBattery,
    CoherentBattery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NBath,
    Lambda,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelKind,
    system: RawSystem,
    grid: RawGrid,
    shape: RawShape,
    #[serde(default)]
    stopping: RawStopping,
    target: RawTarget,
    baseline: RawBaseline,
    sweep: Option<RawSweep>,
    protocol: Option<RawProtocol>,
    output: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    omega: f64,
    g: f64,
    gamma: f64,
    mu: f64,
    n_bath: f64,
    cells: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    tau: Option<f64>,
    tau_in_units_of_pi_over_g: Option<f64>,
    n_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    kappa: f64,
    lambda: f64,
    t_on_fraction: Option<f64>,
    t_off_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStopping {
    max_iters: Option<usize>,
    delta_j_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    kind: TargetKind,
    alpha: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: SweepParameter,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    fidelity_tol: Option<f64>,
    max_iters_high: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemConfig {
    pub omega: f64,
    pub g: f64,
    pub gamma: f64,
    pub mu: f64,
    pub n_bath: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    pub tau: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeSettings {
    pub kappa: f64,
    pub lambda: f64,
    pub t_on_fraction: f64,
    pub t_off_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingConfig {
    pub max_iters: usize,
    pub delta_j_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetConfig {
    pub kind: TargetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub fidelity_tol: f64,
    pub max_iters_high: usize,
}

/// Fully resolved experiment description; this is what report.json echoes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub system: SystemConfig,
    pub grid: GridConfig,
    pub shape: ShapeSettings,
    pub stopping: StoppingConfig,
    pub target: TargetConfig,
    pub baseline_amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub protocol: ProtocolConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text, path)
    }

    /// Parses and validates `text`; `path` is used only in diagnostics.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
            ConfigError {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        Resolver { text, path }.resolve(raw)
    }

    pub fn qubit_spec(&self) -> QubitSystemSpec {
        let s = &self.system;
        QubitSystemSpec {
            omega: s.omega,
            g: s.g,
            gamma: s.gamma,
            mu: s.mu,
            n_bath: s.n_bath,
            cells: s.cells.unwrap_or(1),
        }
    }

    pub fn oscillator_spec(&self) -> OscillatorSystemSpec {
        let s = &self.system;
        OscillatorSystemSpec {
            omega: s.omega,
            g: s.g,
            gamma: s.gamma,
            mu: s.mu,
            n_bath: s.n_bath,
        }
    }

    pub fn time_grid(&self) -> chargeopt_core::Result<TimeGrid> {
        TimeGrid::new(self.grid.tau, self.grid.n_steps)
    }

    pub fn shape_config(&self) -> chargeopt_core::Result<ShapeConfig> {
        let s = &self.shape;
        ShapeConfig::with_fractions(self.grid.tau, s.t_on_fraction, s.t_off_fraction, s.kappa, s.lambda)
    }

    pub fn stop_criteria(&self) -> StopCriteria {
        StopCriteria {
            max_iters: self.stopping.max_iters,
            delta_j_tol: self.stopping.delta_j_tol,
        }
    }

    pub fn protocol_budget(&self) -> ProtocolBudget {
        ProtocolBudget {
            benchmark: self.stop_criteria(),
            max_iters_high: self.protocol.max_iters_high,
            fidelity_tol: self.protocol.fidelity_tol,
        }
    }

    pub fn target_alpha(&self) -> Complex64 {
        let [re, im] = self.target.alpha.unwrap_or([0.0, 0.0]);
        Complex64::new(re, im)
    }

    pub fn with_n_bath(&self, n_bath: f64) -> Self {
        let mut c = self.clone();
        c.system.n_bath = n_bath;
        c
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut c = self.clone();
        c.shape.lambda = lambda;
        c
    }
}

/// One-based line and column of byte `offset`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

struct Resolver<'a> {
    text: &'a str,
    path: &'a Path,
}

impl Resolver<'_> {
    /// Line of `key = ...` inside `[section]`, else of the section header.
    fn anchor(&self, section: &str, key: &str) -> (usize, usize) {
        let header = format!("[{section}]");
        let mut in_section = section.is_empty();
        let mut header_line = 1;
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim_start();
            if t.starts_with('[') {
                in_section = t.starts_with(&header);
                if in_section {
                    header_line = i + 1;
                }
                continue;
            }
            if in_section {
                if let Some(rest) = t.strip_prefix(key) {
                    if rest.trim_start().starts_with('=') {
                        return (i + 1, line.len() - t.len() + 1);
                    }
                }
            }
        }
        (header_line, 1)
    }

    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let (line, column) = self.anchor(section, key);
        ConfigError {
            path: self.path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.fail(section, key, format!("`{key}` must be a positive number, got {v}")))
        }
    }

    fn non_negative(&self, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(self.fail(section, key, format!("`{key}` must be non-negative, got {v}")))
        }
    }

    fn resolve(&self, raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
        let s = &raw.system;
        let system = SystemConfig {
            omega: self.positive("system", "omega", s.omega)?,
            g: self.positive("system", "g", s.g)?,
            gamma: self.non_negative("system", "gamma", s.gamma)?,
            mu: self.positive("system", "mu", s.mu)?,
            n_bath: self.non_negative("system", "n_bath", s.n_bath)?,
            cells: match (raw.model, s.cells) {
                (ModelKind::Qubit, None) => return Err(self.fail("system", "cells", "missing field `cells` (required for the qubit model)")),
                (ModelKind::Qubit, Some(0)) => return Err(self.fail("system", "cells", "`cells` must be at least 1")),
                (ModelKind::Oscillator, Some(_)) => return Err(self.fail("system", "cells", "`cells` applies only to the qubit model")),
                (_, c) => c,
            },
        };

        let tau = match (raw.grid.tau, raw.grid.tau_in_units_of_pi_over_g) {
            (Some(t), None) => self.positive("grid", "tau", t)?,
            (None, Some(m)) => self.positive("grid", "tau_in_units_of_pi_over_g", m)? * std::f64::consts::PI / system.g,
            (Some(_), Some(_)) => return Err(self.fail("grid", "tau", "give either `tau` or `tau_in_units_of_pi_over_g`, not both")),
            (None, None) => return Err(self.fail("grid", "tau", "missing field `tau` (or `tau_in_units_of_pi_over_g`)")),
        };
        let n_steps = raw.grid.n_steps.unwrap_or(DEFAULT_N_STEPS);
        if n_steps == 0 {
            return Err(self.fail("grid", "n_steps", "`n_steps` must be at least 1"));
        }

        let shape = ShapeSettings {
            kappa: raw.shape.kappa,
            lambda: self.positive("shape", "lambda", raw.shape.lambda)?,
            t_on_fraction: raw.shape.t_on_fraction.unwrap_or(DEFAULT_SWITCH_FRACTION),
            t_off_fraction: raw.shape.t_off_fraction.unwrap_or(DEFAULT_SWITCH_FRACTION),
        };
        if !shape.kappa.is_finite() {
            return Err(self.fail("shape", "kappa", "`kappa` must be finite"));
        }
        for (key, v) in [("t_on_fraction", shape.t_on_fraction), ("t_off_fraction", shape.t_off_fraction)] {
            if !(0.0..=0.5).contains(&v) {
                return Err(self.fail("shape", key, format!("`{key}` must lie in [0, 0.5], got {v}")));
            }
        }

        let stopping = StoppingConfig {
            max_iters: raw.stopping.max_iters.unwrap_or(StopCriteria::default().max_iters),
            delta_j_tol: self.non_negative(
                "stopping",
                "delta_j_tol",
                raw.stopping.delta_j_tol.unwrap_or(StopCriteria::default().delta_j_tol),
            )?,
        };

        let target = match (raw.model, raw.target.kind, raw.target.alpha) {
            (ModelKind::Qubit, TargetKind::ExcitedBattery, None) => TargetConfig {
                kind: TargetKind::ExcitedBattery,
                alpha: None,
            },
            (ModelKind::Qubit, TargetKind::ExcitedBattery, Some(_)) => {
                return Err(self.fail("target", "alpha", "`alpha` applies only to a coherent_battery target"))
            }
            (ModelKind::Oscillator, TargetKind::CoherentBattery, Some(a)) if a.iter().all(|x| x.is_finite()) => TargetConfig {
                kind: TargetKind::CoherentBattery,
                alpha: Some(a),
            },
            (ModelKind::Oscillator, TargetKind::CoherentBattery, Some(_)) => {
                return Err(self.fail("target", "alpha", "`alpha` must be a finite [re, im] pair"))
            }
            (ModelKind::Oscillator, TargetKind::CoherentBattery, None) => {
                return Err(self.fail("target", "alpha", "missing field `alpha` (required for a coherent_battery target)"))
            }
            (ModelKind::Qubit, _, _) => return Err(self.fail("target", "kind", "the qubit model takes `kind = \"excited_battery\"`")),
            (ModelKind::Oscillator, _, _) => {
                return Err(self.fail("target", "kind", "the oscillator model takes `kind = \"coherent_battery\"`"))
            }
        };

        let baseline_amplitude = self.non_negative("baseline", "amplitude", raw.baseline.amplitude)?;

        let sweep = match raw.sweep {
            None => None,
            Some(sw) => {
                if sw.values.is_empty() {
                    return Err(self.fail("sweep", "values", "`values` must not be empty"));
                }
                for &v in &sw.values {
                    match sw.parameter {
                        SweepParameter::NBath => self.non_negative("sweep", "values", v)?,
                        SweepParameter::Lambda => self.positive("sweep", "values", v)?,
                    };
                }
                Some(SweepConfig {
                    parameter: sw.parameter,
                    values: sw.values,
                })
            }
        };

        let protocol = match raw.protocol {
            None => ProtocolConfig {
                fidelity_tol: DEFAULT_FIDELITY_TOL,
                max_iters_high: stopping.max_iters,
            },
            Some(p) => ProtocolConfig {
                fidelity_tol: self.non_negative("protocol", "fidelity_tol", p.fidelity_tol.unwrap_or(DEFAULT_FIDELITY_TOL))?,
                max_iters_high: p.max_iters_high.unwrap_or(stopping.max_iters),
            },
        };

        Ok(ExperimentConfig {
            model: raw.model,
            system,
            grid: GridConfig { tau, n_steps },
            shape,
            stopping,
            target,
            baseline_amplitude,
            sweep,
            protocol,
            output: raw.output,
            seed: raw.seed.unwrap_or(0),
        })
    }
}
