// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Sensitivity-optimal π-pulse control for a single dephasing qubit sensor.

pub mod cli;
pub mod control;
pub mod error;
pub mod field;
pub mod fit;
pub mod io;
pub mod mc;
pub mod noise;
pub mod optimizer;
pub mod quad;
pub mod sensing;
pub mod svg;

pub use error::{Error, Result};
