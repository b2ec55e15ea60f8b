// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical fixed-step fourth-order Runge–Kutta for linear systems.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul};

/// Scratch buffers for RK4 steps on a state of fixed length.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T> Rk4<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![T::default(); len],
            k2: vec![T::default(); len],
            k3: vec![T::default(); len],
            k4: vec![T::default(); len],
            tmp: vec![T::default(); len],
        }
    }

    /// Advances `y` by `dt` under `dy/dt = f(t, y)`.
    ///
    /// `f(t, y, out)` must overwrite `out` with the derivative. The stage time
    /// passed is `t`, `t + dt/2`, `t + dt/2`, `t + dt`.
    pub fn step<F>(&mut self, y: &mut [T], t: f64, dt: f64, mut f: F)
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        let half = 0.5 * dt;
        f(t, y, &mut self.k1);
        axpy_into(&mut self.tmp, y, &self.k1, half);
        f(t + half, &self.tmp, &mut self.k2);
        axpy_into(&mut self.tmp, y, &self.k2, half);
        f(t + half, &self.tmp, &mut self.k3);
        axpy_into(&mut self.tmp, y, &self.k3, dt);
        f(t + dt, &self.tmp, &mut self.k4);
        let w = dt / 6.0;
        let stages = self.k1.iter().zip(&self.k2).zip(&self.k3).zip(&self.k4);
        for (yi, (((&a, &b), &c), &d)) in y.iter_mut().zip(stages) {
            *yi = *yi + (a + b * 2.0 + c * 2.0 + d) * w;
        }
    }
}

#[inline]
fn axpy_into<T>(out: &mut [T], y: &[T], k: &[T], h: f64)
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    for ((o, &a), &b) in out.iter_mut().zip(y).zip(k) {
        *o = a + b * h;
    }
}
