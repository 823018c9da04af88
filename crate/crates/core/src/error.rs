use std::io;

use thiserror::Error;

use crate::units::Dimension;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("unknown unit '{0}'")]
    UnknownUnit(String),

    #[error("unit '{unit}' does not measure {expected}")]
    WrongDimension { unit: String, expected: Dimension },

    #[error("cannot combine {left} with {right}")]
    IncompatibleUnits { left: Dimension, right: Dimension },

    /// The integrator gave up; `state` is the last accepted `[N_Cr, N_Rb]`.
    #[error("integration failed at t = {time} s: {reason}")]
    Integration {
        time: f64,
        state: [f64; 2],
        reason: String,
    },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("{0} is not identifiable from the data")]
    Unidentifiable(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}

/// Rejects NaN and infinities.
pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(name, format!("{value} is not finite")))
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value < 0.0 {
        Err(invalid(name, format!("{value} is negative")))
    } else {
        Ok(value)
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value <= 0.0 {
        Err(invalid(name, format!("{value} is not positive")))
    } else {
        Ok(value)
    }
}
