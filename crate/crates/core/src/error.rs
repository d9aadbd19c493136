// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The CP reference filter is evaluated on a secant pole.
    #[error("secant pole of the CP filter at nu = {nu} Hz")]
    Pole { nu: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("degenerate measurement outcome: {0}")]
    DegenerateOutcome(String),

    #[error("infeasible search: {0}")]
    Infeasible(String),

    #[error("trajectory resolution: {0}")]
    Resolution(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
