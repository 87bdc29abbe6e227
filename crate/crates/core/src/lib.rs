//! Smoothing consensus-based optimization (SCBO) for nonsmooth nonconvex objectives.

pub mod analysis;
pub mod baseline;
pub mod bench;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod objective;

pub use error::{Error, Result};
