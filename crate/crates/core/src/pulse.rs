// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Time grids, sampled pulses and the switching envelope.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;



use crate::error::{invalid, Result};

/// Uniform grid of `n_steps + 1` points on `[0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("final time must be positive, got {tau}")));
        }
        if n_steps < 2 {
            return Err(invalid(format!("grid needs at least 2 steps, got {n_steps}")));
        }
        Ok(Self { tau, n_steps })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.tau
        } else {
            k as f64 * self.dt()
        }
    }

    /// Midpoint of step `k`, `t_k + dt/2`.
    pub fn half_time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

/// Envelope and penalty settings of the optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeConfig {
    pub t_on: f64,
    pub t_off: f64,
    /// Amplitude of the initial guess `S(t)·κ`.
    pub kappa: f64,
    /// Weight of the update penalty; must be positive.
    pub lambda: f64,
}

impl ShapeConfig {
    pub const DEFAULT_SWITCH_FRACTION: f64 = 0.005;

    /// Ramp durations given as fractions of `tau`.
    pub fn with_fractions(tau: f64, on: f64, off: f64, kappa: f64, lambda: f64) -> Result<Self> {
        let cfg = Self {
            t_on: on * tau,
            t_off: off * tau,
            kappa,
            lambda,
        };
        cfg.validate(tau)?;
        Ok(cfg)
    }

    pub fn validate(&self, tau: f64) -> Result<()> {
        if !(self.t_on > 0.0 && self.t_off > 0.0) {
            return Err(invalid("switching durations must be positive"));
        }
        if self.t_on + self.t_off > tau * (1.0 + 1e-12) {
            return Err(invalid("switch-on and switch-off overlap"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !self.kappa.is_finite() {
            return Err(invalid("kappa must be finite"));
        }
        Ok(())
    }
}

/// Switching envelope: `sin²` ramps of length `t_on`/`t_off` around a flat top.
pub fn shape(t: f64, cfg: &ShapeConfig, tau: f64) -> Result<f64> {
    let slack = 1e-12 * tau;
    if !(t >= -slack && t <= tau + slack) {
        return Err(invalid(format!("time {t} outside [0, {tau}]")));
    }
    Ok(shape_unchecked(t.clamp(0.0, tau), cfg, tau))
}

fn sin_sq(x: f64) -> f64 {
    let s = libm::sin(x);
    s * s
}

pub(crate) fn shape_unchecked(t: f64, cfg: &ShapeConfig, tau: f64) -> f64 {
    if t <= cfg.t_on {
        sin_sq(FRAC_PI_2 * t / cfg.t_on)
    } else if t >= tau - cfg.t_off {
        sin_sq(FRAC_PI_2 * (t - tau) / cfg.t_off)
    } else {
        1.0
    }
}

/// Real control amplitude sampled at the grid points and at step midpoints.
///
/// Propagation holds the field at `half_values[k]` across step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProfile {
    grid: TimeGrid,
    pub values: Vec<f64>,
    pub half_values: Vec<f64>,
}

impl PulseProfile {
    pub fn new(grid: TimeGrid, values: Vec<f64>, half_values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || half_values.len() != grid.n_steps() {
            return Err(invalid("pulse sample counts do not match the grid"));
        }
        if values.iter().chain(&half_values).any(|v| !v.is_finite()) {
            return Err(invalid("pulse contains non-finite samples"));
        }
        Ok(Self {
            grid,
            values,
            half_values,
        })
    }

    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.time(k))).collect();
        let half_values = (0..grid.n_steps()).map(|k| f(grid.half_time(k))).collect();
        Self {
            grid,
            values,
            half_values,
        }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self::from_fn(grid, |_| 0.0)
    }

    /// `ε⁰(t) = S(t)·κ`.
    pub fn initial_guess(grid: TimeGrid, cfg: &ShapeConfig) -> Self {
        let tau = grid.tau();
        Self::from_fn(grid, |t| shape_unchecked(t, cfg, tau) * cfg.kappa)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .chain(&self.half_values)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.grid.n_steps() != grid.n_steps() || (self.grid.tau() - grid.tau()).abs() > 1e-12 * grid.tau() {
            return Err(invalid("pulse is defined on a different grid"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tau: f64) -> ShapeConfig {
        ShapeConfig::with_fractions(tau, 0.005, 0.005, 0.5, 1.0).unwrap()
    }

    #[test]
    fn envelope_boundaries_and_plateau() {
        let tau = 10.0;
        let c = cfg(tau);
        assert_eq!(shape(0.0, &c, tau).unwrap(), 0.0);
        assert!(shape(tau, &c, tau).unwrap() < 1e-30);
        assert!((shape(c.t_on, &c, tau).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(shape(tau / 2.0, &c, tau).unwrap(), 1.0);
        assert!(shape(-0.1, &c, tau).is_err());
        assert!(shape(tau + 0.1, &c, tau).is_err());
    }

    #[test]
    fn envelope_stays_in_unit_interval() {
        let tau = 3.0;
        let c = ShapeConfig::with_fractions(tau, 0.3, 0.2, 1.0, 1.0).unwrap();
        for k in 0..=300 {
            let s = shape(k as f64 * 0.01, &c, tau).unwrap();
            assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn config_validation() {
        assert!(ShapeConfig::with_fractions(1.0, 0.6, 0.6, 0.1, 1.0).is_err());
        assert!(ShapeConfig::with_fractions(1.0, 0.1, 0.1, 0.1, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
    }

    #[test]
    fn initial_guess_vanishes_at_edges() {
        let grid = TimeGrid::new(5.0, 100).unwrap();
        let p = PulseProfile::initial_guess(grid, &cfg(5.0));
        assert_eq!(p.values[0], 0.0);
        assert!(p.values[100].abs() < 1e-30);
        assert_eq!(p.values[50], 0.5);
        assert_eq!(p.half_values.len(), 100);
    }
}
