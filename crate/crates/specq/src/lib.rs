//! Spectral clustering with a bounded-noise emulation of the quantum
//! subroutine stack, and the step-count cost model that compares both
//! algorithm families.
//!
//! Pipeline: point set -> threshold similarity graph -> substituted
//! incidence structure -> normalized Laplacian Gram matrix -> spectrum ->
//! k-lowest projection (exact columns or value-scaled rows) -> k-means /
//! noisy k-means -> accuracy and cost report.

pub mod clustering;
pub mod config;
pub mod costmodel;
pub mod datasets;
pub mod error;
pub mod graph;
pub mod noise;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
