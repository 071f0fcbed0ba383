//! Exact one-sided matching mechanisms and exhaustive checkers for swap
//! monotonicity, upper and lower invariance, (weak) strategyproofness and
//! partial strategyproofness.

pub mod axioms;
pub mod classify;
pub mod cli;
pub mod enumerate;
pub mod error;
pub mod mechanisms;
pub mod model;
pub mod psp;
mod sweep;

pub use error::{Error, Result};
pub use sweep::{CheckOptions, Coverage, Scope};
