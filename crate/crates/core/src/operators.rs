// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex operator algebra on small Hilbert spaces.
//!
//! Operators are stored row-major. Qubit basis convention: `|0⟩` is the +1
//! eigenvector of σ_z and is the ground state of `(ω/2)(I − σ_z)`, so the
//! raising operator `σ⁺ = |1⟩⟨0|` adds one quantum of energy.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix acting on a `dim`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

/// Density matrices share the operator representation.
pub type DensityMatrix = Operator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliKind {
    X,
    Y,
    Z,
    /// `|1⟩⟨0|`, energy raising.
    Plus,
    /// `|0⟩⟨1|`, energy lowering.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Annihilate,
    Create,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = ONE;
        }
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds an operator from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut op = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            op.data[i * dim + i] = Complex64::new(d, 0.0);
        }
        op
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) ket.
    pub fn projector(ket: &[Complex64]) -> Self {
        Self::from_fn(ket.len(), |i, j| ket[i] * ket[j].conj())
    }

    /// Projector onto the computational basis state `index`.
    pub fn basis_projector(dim: usize, index: usize) -> Self {
        let mut op = Self::zeros(dim);
        op.data[index * dim + index] = ONE;
        op
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        check_dims(self, rhs)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        (0..n).all(|i| (i..n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    /// Replaces the matrix by its Hermitian part, `(A + A†)/2`.
    pub fn hermitize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            let d = self.data[i * n + i];
            self.data[i * n + i] = Complex64::new(d.re, 0.0);
            for j in (i + 1)..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// `Tr(A†B)`, the Hilbert–Schmidt inner product.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_dims(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        check_dims(self, other)?;
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        Ok(acc)
    }

    /// Matrix-vector product.
    pub fn apply(&self, ket: &[Complex64]) -> Result<Vec<Complex64>> {
        if ket.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: ket.len(),
            });
        }
        let n = self.dim;
        Ok((0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(ket)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|a| a * rhs).collect(),
        }
    }
}

fn check_dims(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

pub fn pauli(kind: PauliKind) -> Operator {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let entries = match kind {
        PauliKind::X => [ZERO, ONE, ONE, ZERO],
        PauliKind::Y => [ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO],
        PauliKind::Z => [ONE, ZERO, ZERO, c(-1.0, 0.0)],
        PauliKind::Plus => [ZERO, ZERO, ONE, ZERO],
        PauliKind::Minus => [ZERO, ONE, ZERO, ZERO],
    };
    Operator {
        dim: 2,
        data: entries.to_vec(),
    }
}

/// Truncated bosonic ladder operator on Fock levels `0..n_trunc`.
pub fn ladder(n_trunc: usize, kind: LadderKind) -> Result<Operator> {
    if n_trunc < 2 {
        return Err(Error::InvalidDimension {
            dim: n_trunc,
            reason: "ladder truncation must be at least 2",
        });
    }
    let mut op = Operator::zeros(n_trunc);
    for n in 1..n_trunc {
        let amp = Complex64::new(libm::sqrt(n as f64), 0.0);
        match kind {
            LadderKind::Annihilate => op.set(n - 1, n, amp),
            LadderKind::Create => op.set(n, n - 1, amp),
        }
    }
    Ok(op)
}

/// Kronecker product of two operators.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = Operator::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            if aij == ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out.data[(i * nb + k) * n + j * nb + l] = aij * b.get(k, l);
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of operators, left to right.
pub fn tensor(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| invalid("tensor product of an empty list"))?;
    Ok(rest.iter().fold(first.clone(), |acc, op| kron(&acc, op)))
}

/// Places `op` on factor `site` of a product space with the given factor dims.
pub fn embed(op: &Operator, site: usize, dims: &[usize]) -> Result<Operator> {
    if site >= dims.len() || dims[site] != op.dim {
        return Err(invalid("embedding site does not match operator dimension"));
    }
    let factors: Vec<Operator> = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| if k == site { op.clone() } else { Operator::identity(d) })
        .collect();
    tensor(&factors)
}

pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    Ok(&a.matmul(b)? - &b.matmul(a)?)
}

pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    Ok(&a.matmul(b)? + &b.matmul(a)?)
}

pub fn dagger(a: &Operator) -> Operator {
    a.dagger()
}

pub fn trace(a: &Operator) -> Complex64 {
    a.trace()
}

/// `Tr(ρA)`.
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<Complex64> {
    rho.trace_product(a)
}

/// Traces out the first factor of dimension `dim_a`, returning the state of
/// the remaining factor.
pub fn partial_trace_first(rho: &DensityMatrix, dim_a: usize) -> Result<DensityMatrix> {
    let n = rho.dim;
    if dim_a == 0 || !n.is_multiple_of(dim_a) {
        return Err(Error::InvalidDimension {
            dim: dim_a,
            reason: "first factor does not divide the total dimension",
        });
    }
    let nb = n / dim_a;
    Ok(Operator::from_fn(nb, |k, l| {
        (0..dim_a).map(|i| rho.get(i * nb + k, i * nb + l)).sum()
    }))
}

/// Nonzero entries of an operator, used by the propagation kernels.
#[derive(Debug, Clone, Default)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    pub fn from_dense(op: &Operator) -> Self {
        let n = op.dim;
        let entries = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = op.get(i, j);
                (v != ZERO).then_some((i, j, v))
            })
            .collect();
        Self { dim: n, entries }
    }

    /// Builds from `(row, col, value)` triplets, summing repeated positions.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        if entries.iter().any(|&(i, j, _)| i >= dim || j >= dim) {
            return Err(invalid("sparse entry outside the operator"));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);
        Ok(Self { dim, entries: merged })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * factor)).collect(),
        }
    }

    pub fn dagger(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect(),
        }
    }

    /// Sum of sparse operators, merging duplicate positions.
    pub fn sum(dim: usize, parts: &[SparseOp]) -> Self {
        let mut dense = vec![ZERO; dim * dim];
        for p in parts {
            debug_assert_eq!(p.dim, dim);
            for &(i, j, v) in &p.entries {
                dense[i * dim + j] += v;
            }
        }
        Self::from_dense(&Operator { dim, data: dense })
    }

    pub fn to_dense(&self) -> Operator {
        let mut op = Operator::zeros(self.dim);
        for &(i, j, v) in &self.entries {
            op.data[i * self.dim + j] += v;
        }
        op
    }

    /// Sparse product `self · rhs`.
    pub fn matmul(&self, rhs: &SparseOp) -> Result<SparseOp> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); rhs.dim];
        for &(k, j, w) in &rhs.entries {
            rows[k].push((j, w));
        }
        let mut out = Vec::new();
        for &(i, k, v) in &self.entries {
            out.extend(rows[k].iter().map(|&(j, w)| (i, j, v * w)));
        }
        SparseOp::from_entries(self.dim, out)
    }

    /// `out += coeff · S x` for a ket `x`.
    pub fn apply_acc(&self, x: &[Complex64], coeff: Complex64, out: &mut [Complex64]) {
        for &(i, k, v) in &self.entries {
            out[i] += coeff * v * x[k];
        }
    }

    /// `Tr(S X)` for dense row-major `X`.
    pub fn trace_with(&self, x: &[Complex64]) -> Complex64 {
        let n = self.dim;
        self.entries.iter().map(|&(i, j, v)| v * x[j * n + i]).sum()
    }

    /// `out += coeff · (S X)` for row-major `X`.
    #[inline]
    pub fn left_mul_acc(&self, x: &[Complex64], coeff: Complex64, out: &mut [Complex64]) {
        let n = self.dim;
        for &(i, k, v) in &self.entries {
            let c = v * coeff;
            let src = &x[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    }

    /// `Tr(A S B)` for dense row-major `A`, `B`.
    pub fn sandwich_trace(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        // Tr(A S B) = Σ_{(i,k)} S_ik (B A)_ki = Σ S_ik Σ_j B_kj A_ji
        let n = self.dim;
        let mut acc = ZERO;
        for &(i, k, v) in &self.entries {
            let mut s = ZERO;
            for j in 0..n {
                s += b[k * n + j] * a[j * n + i];
            }
            acc += v * s;
        }
        acc
    }
}

/// Conjugate transpose of a row-major square buffer, written into `out`.
pub(crate) fn dagger_into(x: &[Complex64], n: usize, out: &mut [Complex64]) {
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = x[i * n + j].conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sigma_z_fixes_ground() {
        let z = pauli(PauliKind::Z);
        let ket0 = [ONE, ZERO];
        assert_eq!(z.apply(&ket0).unwrap(), vec![ONE, ZERO]);
    }

    #[test]
    fn ladder_pair_resolves_identity() {
        let p = pauli(PauliKind::Plus);
        let m = pauli(PauliKind::Minus);
        assert_eq!(anticommutator(&p, &m).unwrap(), Operator::identity(2));
    }

    #[test]
    fn pauli_x_squares_to_identity() {
        let x = pauli(PauliKind::X);
        assert_eq!(x.matmul(&x).unwrap(), Operator::identity(2));
    }

    #[test]
    fn raising_excites_ground() {
        let up = pauli(PauliKind::Plus).apply(&[ONE, ZERO]).unwrap();
        assert_eq!(up, vec![ZERO, ONE]);
        // σx = σ⁺ + σ⁻
        let sum = &pauli(PauliKind::Plus) + &pauli(PauliKind::Minus);
        assert_eq!(sum, pauli(PauliKind::X));
    }

    #[test]
    fn ladder_matrix_elements() {
        let a = ladder(3, LadderKind::Annihilate).unwrap();
        assert_abs_diff_eq!(a.get(0, 1).re, 1.0);
        assert_abs_diff_eq!(a.get(1, 2).re, libm::sqrt(2.0), epsilon = 1e-15);
        assert!(matches!(
            ladder(1, LadderKind::Create),
            Err(Error::InvalidDimension { dim: 1, .. })
        ));
    }

    #[test]
    fn truncated_ccr_holds_below_cutoff() {
        let n = 6;
        let a = ladder(n, LadderKind::Annihilate).unwrap();
        let ad = ladder(n, LadderKind::Create).unwrap();
        let comm = commutator(&a, &ad).unwrap();
        for k in 0..n - 1 {
            assert_abs_diff_eq!(comm.get(k, k).re, 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(comm.get(n - 1, n - 1).re, -((n - 1) as f64), epsilon = 1e-14);
        assert_eq!(dagger(&a), ad);
    }

    #[test]
    fn tensor_basics() {
        let i2 = Operator::identity(2);
        assert_eq!(tensor(&[i2.clone(), i2.clone()]).unwrap(), Operator::identity(4));
        assert_eq!(tensor(&[pauli(PauliKind::Z), i2]).unwrap().dim(), 4);
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn tensor_trace_factorizes() {
        let a = Operator::from_vec(2, vec![c(0.3, 0.1), c(-1.0, 2.0), c(0.5, 0.0), c(1.5, -0.7)])
            .unwrap();
        let b = Operator::from_vec(2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.4, 0.4), c(-0.2, 0.3)])
            .unwrap();
        let t = tensor(&[a.clone(), b.clone()]).unwrap();
        assert_abs_diff_eq!((t.trace() - a.trace() * b.trace()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn commutator_and_expectation() {
        let x = pauli(PauliKind::X);
        assert_eq!(commutator(&x, &x).unwrap().max_abs(), 0.0);
        let rho0 = Operator::basis_projector(2, 0);
        assert_eq!(expectation(&rho0, &pauli(PauliKind::Z)).unwrap(), ONE);
        assert!(commutator(&x, &Operator::identity(3)).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let ra = Operator::from_real_diagonal(&[0.25, 0.75]);
        let rb = Operator::from_real_diagonal(&[0.1, 0.2, 0.7]);
        let rho = kron(&ra, &rb);
        let red = partial_trace_first(&rho, 2).unwrap();
        assert!(red.max_abs_diff(&rb) < 1e-15);
    }

    #[test]
    fn sparse_kernels_match_dense() {
        let a = ladder(4, LadderKind::Annihilate).unwrap();
        let x = Operator::from_fn(4, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let y = Operator::from_fn(4, |i, j| c((i * j) as f64, 0.3 * i as f64));
        let s = SparseOp::from_dense(&a);
        let mut out = vec![ZERO; 16];
        s.left_mul_acc(x.as_slice(), ONE, &mut out);
        assert!(Operator::from_vec(4, out).unwrap().max_abs_diff(&a.matmul(&x).unwrap()) < 1e-14);
        let want = x.matmul(&a).unwrap().matmul(&y).unwrap().trace();
        assert!((s.sandwich_trace(x.as_slice(), y.as_slice()) - want).norm() < 1e-12);
    }
}
