//! Evaluation metrics, sequence I/O, synthetic sequences and one-pass
//! evaluation.

mod metrics;
mod ope;
mod sequence;
pub mod synth;

pub use metrics::{
    evaluate, overlap, precision_curve, success_curve, EvalReport, DP_THRESHOLD_PX, PRECISION_THRESHOLDS,
    SUCCESS_THRESHOLDS,
};
pub use ope::{run_ope, run_ope_dirs, run_sequence, OpeSummary, SequenceOutcome, TrackReport};
pub use sequence::{
    decode_image, encode_image, load_sequence, save_image, write_sequence, FrameSource, SequenceRecord,
    GROUND_TRUTH_FILE, IMAGE_DIR,
};

use serde::{Deserialize, Serialize};

/// Axis-aligned box in pixels: top-left corner plus size, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn from_center(center: (f64, f64), size: (f64, f64)) -> Self {
        BBox {
            x: center.0 - size.0 / 2.0,
            y: center.1 - size.1 / 2.0,
            w: size.0,
            h: size.1,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    pub fn center_distance(&self, other: &BBox) -> f64 {
        let (a, b) = (self.center(), other.center());
        (a.0 - b.0).hypot(a.1 - b.1)
    }
}
