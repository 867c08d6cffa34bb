//! Correlation-filter visual tracking with adaptive distractor suppression.
//!
//! Filters are learned in closed form in the Fourier domain. Secondary peaks
//! of each frame's response map that are strong and close to the target are
//! re-extracted as zero-target training samples for the next frame, which
//! pushes the filter's response on look-alike regions down.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod config;
pub mod error;
pub mod features;
pub mod filter;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod response;
pub mod spectral;
pub mod tracker;

pub use benchmark::BBox;
pub use config::TrackerConfig;
pub use error::{Error, Result};
pub use tracker::{StepOutcome, TrackerState};
