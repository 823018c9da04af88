//! Rate-equation models and parameter estimation for trap losses in a
//! combined Cr magnetic trap / Rb magneto-optical trap.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod overlap;
pub mod photoionization;
pub mod special;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
