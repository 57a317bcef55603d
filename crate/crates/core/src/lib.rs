//! Simulation and exact analysis of multi-path interferometers with pre- and
//! post-selection.
//!
//! - [`qcore`]: dense complex vectors, operators and named bases.
//! - [`circuit`]: beam-splitter networks with per-stage rail labels, including
//!   the built-in three-box interferometer.
//! - [`analysis`]: weak values, the normalized pre/post-selected operator,
//!   operator decompositions and Kirkwood-Dirac quasiprobabilities.
//! - [`montecarlo`]: Born-rule detection sampling and Gaussian-pointer weak
//!   measurements with deterministic parallel RNG streams.
//! - [`scenario`], [`report`], [`cli`]: JSON scenarios, reports and the
//!   `tribox` command line.

pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod qcore;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
