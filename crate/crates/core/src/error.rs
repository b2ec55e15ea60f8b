// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A quantity that must be non-negative came out negative beyond tolerance.
    #[error("unphysical value for {quantity}: {value}")]
    NumericalPhysicality { quantity: &'static str, value: f64 },

    /// Reduced covariance violates the uncertainty bound.
    #[error("unphysical covariance: determinant {det} below 1/4")]
    UnphysicalCovariance { det: f64 },

    /// Population reached the top Fock levels of the truncated oracle.
    #[error("Fock truncation {n_trunc} too small: top-level population {population:e}")]
    TruncationTooSmall { n_trunc: usize, population: f64 },

    #[error("undefined quality factor: {0}")]
    UndefinedFactor(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
