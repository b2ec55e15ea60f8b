// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Hermitian eigendecomposition, delegated to nalgebra.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::operators::Operator;

/// Eigenpairs of a Hermitian operator, sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Operator,
}

pub fn hermitian_eigen(op: &Operator) -> HermitianEigen {
    let n = op.dim();
    let m = DMatrix::<Complex64>::from_row_slice(n, n, op.as_slice());
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver's order among degenerate eigenvalues.
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Operator::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

pub fn hermitian_eigenvalues(op: &Operator) -> Vec<f64> {
    hermitian_eigen(op).values
}
