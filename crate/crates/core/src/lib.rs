//! Ordered p-median location with ball neighborhoods: instance tooling,
//! exact and heuristic solvers, and model exporters for external solvers.

#![allow(clippy::needless_range_loop)]

pub mod alloc;
pub mod cli;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod heuristics;
pub mod instance;
pub mod model;
pub mod om;
pub mod rng;

pub use error::{OmpnError, Result};
