//! WebAssembly bindings for the single-page demo in `www/`.
//!
//! The page can generate a synthetic sequence, track it with a chosen
//! `lambda2`, peak gate and search-window padding, and inspect any frame's response map and
//! interest points. [`Session`] holds the logic and is plain Rust; [`Demo`]
//! is the thin JavaScript-facing wrapper.

use driftguard_core::benchmark::synth::{SynthSpec, SyntheticSequence};
use driftguard_core::benchmark::{evaluate, BBox};
use driftguard_core::response::InterestPoint;
use driftguard_core::{Result, TrackerConfig, TrackerState};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Frame size used by the demo; large enough for the presets, small enough
/// to track interactively.
pub const DEMO_SIZE: (usize, usize) = (200, 200);

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub lambda2: f64,
    pub peak_gate: f64,
    pub padding: f64,
    pub sr: f64,
    pub auc: f64,
    pub dp: f64,
    /// Frames on which at least one distractor passed the gates.
    pub frames_with_distractors: usize,
}

#[derive(Debug, Clone)]
struct Run {
    summary: RunSummary,
    boxes: Vec<BBox>,
    /// Centred response per frame; frame 0 has none.
    responses: Vec<Option<(usize, usize, Vec<f64>)>>,
    points: Vec<Vec<InterestPoint>>,
}

pub struct Session {
    seq: SyntheticSequence,
    run: Option<Run>,
}

fn flatten(boxes: &[BBox]) -> Vec<f64> {
    boxes.iter().flat_map(|b| [b.x, b.y, b.w, b.h]).collect()
}

impl Session {
    pub fn new(preset: &str, seed: u64, frames: usize) -> Result<Self> {
        let seq = SynthSpec::preset(preset, frames, DEMO_SIZE, seed)?.render()?;
        Ok(Session { seq, run: None })
    }

    pub fn len(&self) -> usize {
        self.seq.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.frames.is_empty()
    }

    /// RGBA bytes of frame `i`, ready for `ImageData`.
    pub fn frame_rgba(&self, i: usize) -> Vec<u8> {
        let Some(frame) = self.seq.frames.get(i) else {
            return Vec::new();
        };
        let img = &frame.image;
        let ch = img.channels();
        img.as_bytes()
            .chunks_exact(ch)
            .flat_map(|px| {
                if ch == 1 {
                    [px[0], px[0], px[0], 255]
                } else {
                    [px[0], px[1], px[2], 255]
                }
            })
            .collect()
    }

    pub fn track(&mut self, lambda2: f64, peak_gate: f64, padding: f64) -> Result<RunSummary> {
        let config = TrackerConfig {
            lambda2,
            peak_gate,
            padding,
            ..TrackerConfig::default()
        };
        config.validate()?;
        let gt = &self.seq.ground_truth;
        let mut state = TrackerState::init(&self.seq.frames[0], gt[0], config)?;
        let mut boxes = vec![gt[0]];
        let mut responses = vec![None];
        let mut points = vec![Vec::new()];
        let mut frames_with_distractors = 0;
        for frame in &self.seq.frames[1..] {
            let out = state.step(frame)?;
            if out.interest_points.iter().any(|p| p.accepted) {
                frames_with_distractors += 1;
            }
            let (rows, cols) = out.response.values().shape();
            responses.push(Some((rows, cols, out.response.values().as_slice().to_vec())));
            points.push(out.interest_points);
            boxes.push(out.bbox);
        }
        // Timing is meaningless here; the browser has no monotonic clock in std.
        let eval = evaluate(&boxes, gt, 1.0)?;
        let summary = RunSummary {
            lambda2,
            peak_gate,
            padding,
            sr: eval.sr,
            auc: eval.auc,
            dp: eval.dp,
            frames_with_distractors,
        };
        self.run = Some(Run {
            summary: summary.clone(),
            boxes,
            responses,
            points,
        });
        Ok(summary)
    }

    pub fn summary(&self) -> Option<&RunSummary> {
        self.run.as_ref().map(|r| &r.summary)
    }

    pub fn ground_truth(&self) -> Vec<f64> {
        flatten(&self.seq.ground_truth)
    }

    /// Tracked boxes as flat `x, y, w, h` quadruples; empty before `track`.
    pub fn boxes(&self) -> Vec<f64> {
        self.run.as_ref().map(|r| flatten(&r.boxes)).unwrap_or_default()
    }

    /// `(rows, cols, values)` of frame `i`'s centred response map.
    pub fn response(&self, i: usize) -> Option<&(usize, usize, Vec<f64>)> {
        self.run.as_ref()?.responses.get(i)?.as_ref()
    }

    pub fn interest_points(&self, i: usize) -> &[InterestPoint] {
        self.run
            .as_ref()
            .and_then(|r| r.points.get(i))
            .map_or(&[], |p| p.as_slice())
    }
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo(Session);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, seed: u32, frames: u32) -> Result<Demo, JsError> {
        Session::new(preset, seed as u64, frames as usize)
            .map(Demo)
            .map_err(js_err)
    }

    pub fn width(&self) -> u32 {
        DEMO_SIZE.0 as u32
    }

    pub fn height(&self) -> u32 {
        DEMO_SIZE.1 as u32
    }

    pub fn len(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn frame_rgba(&self, i: u32) -> Vec<u8> {
        self.0.frame_rgba(i as usize)
    }

    /// Tracks the whole sequence and returns the summary as JSON.
    pub fn track(&mut self, lambda2: f64, peak_gate: f64, padding: f64) -> Result<String, JsError> {
        let summary = self.0.track(lambda2, peak_gate, padding).map_err(js_err)?;
        serde_json::to_string(&summary).map_err(js_err)
    }

    pub fn ground_truth(&self) -> Vec<f64> {
        self.0.ground_truth()
    }

    pub fn boxes(&self) -> Vec<f64> {
        self.0.boxes()
    }

    pub fn response_rows(&self, i: u32) -> u32 {
        self.0.response(i as usize).map_or(0, |r| r.0 as u32)
    }

    pub fn response_cols(&self, i: u32) -> u32 {
        self.0.response(i as usize).map_or(0, |r| r.1 as u32)
    }

    pub fn response(&self, i: u32) -> Vec<f64> {
        self.0.response(i as usize).map(|r| r.2.clone()).unwrap_or_default()
    }

    /// Interest points of frame `i` as a JSON array.
    pub fn interest_points(&self, i: u32) -> String {
        serde_json::to_string(self.0.interest_points(i as usize)).unwrap_or_else(|_| "[]".into())
    }
}
