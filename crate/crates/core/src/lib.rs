// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Energy-efficient pulse shaping for charging open quantum batteries.
//!
//! Two charger/battery models are supported: a qubit charger driving one or
//! more qubit cells (dense GKSL propagation), and a pair of linearly coupled
//! oscillators (exact Gaussian moment dynamics). Pulses are found with a
//! monotonically convergent sequential update that penalizes changes of the
//! field through a switching envelope.
//!
//! The crate is `no_std` with `alloc`.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]
// `!(x >= 0.0)` is the idiom used to reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod energetics;
pub mod error;
pub mod gaussian;
pub mod krotov;
pub mod lindblad;
pub mod linalg;
pub mod ode;
pub mod operators;
pub mod pulse;

pub use error::{Error, Result};
pub use operators::{DensityMatrix, Operator};
pub use pulse::{PulseProfile, ShapeConfig, TimeGrid};
