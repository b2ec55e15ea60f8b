// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment harness around `chargeopt-core`: configuration, scenario
//! execution, sweeps, validation suites and result files.

pub mod commands;
pub mod config;
pub mod output;
pub mod plots;
pub mod scenario;
pub mod validation;
