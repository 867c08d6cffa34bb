//! Per-frame train / detect / mine / update loop.
//!
//! Each step trains on the current frame at the previous position, folding in
//! the distractors mined on the previous frame, blends the result into the
//! running model, and detects with the updated model. Secondary peaks that
//! pass the gates are re-extracted through the same feature pipeline and held
//! for the next frame's training.

use std::sync::Arc;

use crate::benchmark::BBox;
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::features::{extract_patch, CnTable, FeatureExtractor, FeatureStack, Frame};
use crate::filter::{
    blend_model, label_sigma, learn_standard, learn_with_distractors, make_gaussian_label, DistractorSet, FilterModel,
    RegressionTarget,
};
use crate::response::{compute_response, find_interest_points, gate_distractors, InterestPoint, ResponseMap};

/// Loads the table named in the config, or the built-in one when unset.
pub fn load_cn_table(config: &TrackerConfig) -> Result<CnTable> {
    match &config.cn_table_path {
        Some(path) => CnTable::load(path),
        None => Ok(CnTable::fallback()),
    }
}

/// What one step produced besides the new box.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub bbox: BBox,
    /// Response with lag `(0, 0)` at the grid centre.
    pub response: ResponseMap,
    pub interest_points: Vec<InterestPoint>,
}

#[derive(Debug, Clone)]
pub struct TrackerState {
    position: (f64, f64),
    target_size: (f64, f64),
    frame_dims: (usize, usize, usize),
    window_px: (usize, usize),
    model: FilterModel,
    label: RegressionTarget,
    pending: DistractorSet,
    extractor: FeatureExtractor,
    nms_radius: usize,
    d_max: f64,
    frame_index: usize,
    config: TrackerConfig,
}

impl TrackerState {
    pub fn init(frame: &Frame, bbox: BBox, config: TrackerConfig) -> Result<Self> {
        let table = Arc::new(load_cn_table(&config)?);
        Self::init_with_table(frame, bbox, config, table)
    }

    pub fn init_with_table(frame: &Frame, bbox: BBox, config: TrackerConfig, table: Arc<CnTable>) -> Result<Self> {
        config.validate()?;
        let img = &frame.image;
        if !(bbox.w > 0.0 && bbox.h > 0.0) || !bbox.is_finite() {
            return Err(Error::invalid(format!("degenerate initial box {bbox:?}")));
        }
        const SLACK: f64 = 0.5;
        if bbox.x < -SLACK
            || bbox.y < -SLACK
            || bbox.x + bbox.w > img.width() as f64 + SLACK
            || bbox.y + bbox.h > img.height() as f64 + SLACK
        {
            return Err(Error::invalid(format!(
                "initial box {bbox:?} lies outside the {}x{} frame",
                img.width(),
                img.height()
            )));
        }

        let cell = config.hog_cell;
        let grid_rows = ((config.padding * bbox.h) / cell as f64).floor().max(1.0) as usize;
        let grid_cols = ((config.padding * bbox.w) / cell as f64).floor().max(1.0) as usize;
        let window_px = (grid_cols * cell, grid_rows * cell);

        let position = bbox.center();
        let patch = extract_patch(img, position, window_px);
        let extractor = FeatureExtractor::fit(&patch, cell, config.cn_cell, table)?;
        let x = extractor.extract(&patch)?;
        debug_assert_eq!(x.grid(), (grid_rows, grid_cols));

        let sigma = label_sigma(bbox.w, bbox.h, cell, config.sigma_factor);
        let label = make_gaussian_label(grid_rows, grid_cols, sigma)?;
        let model = learn_standard(&x, &label, config.lambda1)?;

        let target_cells = (bbox.w.min(bbox.h)) / cell as f64;
        let nms_radius = ((target_cells / 2.0).ceil() as usize).max(1);
        let d_max = config.d_max_factor * grid_rows.min(grid_cols) as f64;

        Ok(TrackerState {
            position,
            target_size: (bbox.w, bbox.h),
            frame_dims: (img.width(), img.height(), img.channels()),
            window_px,
            model,
            label,
            pending: DistractorSet::empty(),
            extractor,
            nms_radius,
            d_max,
            frame_index: frame.index,
            config,
        })
    }

    pub fn position(&self) -> (f64, f64) {
        self.position
    }

    pub fn target_size(&self) -> (f64, f64) {
        self.target_size
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_center(self.position, self.target_size)
    }

    pub fn model(&self) -> &FilterModel {
        &self.model
    }

    pub fn label(&self) -> &RegressionTarget {
        &self.label
    }

    pub fn pending_distractors(&self) -> &DistractorSet {
        &self.pending
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn window_px(&self) -> (usize, usize) {
        self.window_px
    }

    pub fn grid(&self) -> (usize, usize) {
        self.model.grid()
    }

    pub fn nms_radius(&self) -> usize {
        self.nms_radius
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Windowed features of the search window centred at `center`.
    pub fn features_at(&self, frame: &Frame, center: (f64, f64)) -> Result<FeatureStack> {
        self.extractor
            .extract(&extract_patch(&frame.image, center, self.window_px))
    }

    pub fn step(&mut self, frame: &Frame) -> Result<StepOutcome> {
        let img = &frame.image;
        let dims = (img.width(), img.height(), img.channels());
        if dims != self.frame_dims {
            return Err(Error::invalid(format!(
                "frame {} is {}x{}x{}, sequence is {}x{}x{}",
                frame.index, dims.0, dims.1, dims.2, self.frame_dims.0, self.frame_dims.1, self.frame_dims.2
            )));
        }
        let cfg = &self.config;
        let cell = cfg.hog_cell as f64;
        let prev = self.position;

        // Train at the previous position, then detect on the same window.
        let x = self.features_at(frame, prev)?;
        let fresh = learn_with_distractors(&x, &self.label, &self.pending, cfg.lambda1, cfg.lambda2)?;
        self.model = blend_model(&self.model, &fresh, cfg.theta)?;
        let response = compute_response(&self.model, &x)?;

        // Whole-pixel moves keep a stationary target exactly in place.
        let (dy, dx) = response.subcell_offset();
        self.position = (
            (prev.0 + (dx * cell).round()).clamp(0.0, img.width() as f64),
            (prev.1 + (dy * cell).round()).clamp(0.0, img.height() as f64),
        );

        let centered = response.centered();
        let (rows, cols) = centered.values().shape();
        let points = gate_distractors(
            &find_interest_points(&centered, self.nms_radius),
            self.d_max,
            cfg.peak_gate,
        );
        let mut patches = Vec::new();
        for p in points.iter().filter(|p| p.accepted) {
            let off_r = p.pos.0 as f64 - (rows / 2) as f64;
            let off_c = p.pos.1 as f64 - (cols / 2) as f64;
            let center = (prev.0 + off_c * cell, prev.1 + off_r * cell);
            patches.push(self.features_at(frame, center)?);
        }
        self.pending = DistractorSet::new(patches)?;
        self.frame_index = frame.index;

        Ok(StepOutcome {
            bbox: self.bbox(),
            response: centered,
            interest_points: points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::synth::{SynthSpec, Trajectory};
    use crate::features::Image;
    use crate::oracle;
    use nalgebra::{DMatrix, DVector};

    fn textured(w: usize, h: usize, seed: u64) -> Image {
        let mut s = seed;
        let data = (0..w * h * 3)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            })
            .collect();
        Image::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn init_centers_on_box_without_distractors() {
        let frame = Frame {
            index: 0,
            image: textured(120, 100, 1),
        };
        let bbox = BBox::new(40.0, 30.0, 27.0, 18.0);
        let state = TrackerState::init(&frame, bbox, TrackerConfig::default()).unwrap();
        assert_eq!(state.position(), (53.5, 39.0));
        assert_eq!(state.pending_distractors().k(), 0);
        assert_eq!(state.grid(), (4, 6));
        assert_eq!(state.model().channels(), 13);
    }

    #[test]
    fn init_rejects_bad_boxes() {
        let frame = Frame {
            index: 0,
            image: textured(50, 50, 2),
        };
        let cfg = TrackerConfig::default();
        assert!(TrackerState::init(&frame, BBox::new(10.0, 10.0, 0.0, 5.0), cfg.clone()).is_err());
        assert!(TrackerState::init(&frame, BBox::new(40.0, 40.0, 20.0, 20.0), cfg.clone()).is_err());
        assert!(TrackerState::init(&frame, BBox::new(-30.0, 0.0, 10.0, 10.0), cfg).is_err());
    }

    #[test]
    fn initial_model_matches_dense_multichannel_solve() {
        let frame = Frame {
            index: 0,
            image: textured(60, 60, 3).to_gray(),
        };
        let cfg = TrackerConfig {
            hog_cell: 4,
            cn_cell: 2,
            ..TrackerConfig::default()
        };
        let state = TrackerState::init(&frame, BBox::new(22.0, 22.0, 12.0, 12.0), cfg.clone()).unwrap();
        let x = state.features_at(&frame, state.position()).unwrap();
        let (rows, cols) = x.grid();
        let n = rows * cols;

        // Shared Gram matrix over channels, one right-hand side per channel.
        let blocks: Vec<DMatrix<f64>> = (0..x.channels())
            .map(|c| oracle::circulant_2d(&x.channel_map(c)))
            .collect();
        let mut gram = DMatrix::identity(n, n) * cfg.lambda1;
        for b in &blocks {
            gram += b.transpose() * b;
        }
        let y = oracle::to_vector(state.label().label());
        let lu = gram.lu();
        let mut pred = DVector::zeros(n);
        for b in &blocks {
            let w = lu.solve(&(b.transpose() * &y)).unwrap();
            pred += b * w;
        }
        let expected = oracle::dense_to_response(pred.as_slice(), rows, cols);
        let r = compute_response(state.model(), &x).unwrap();
        for (a, b) in r.values().as_slice().iter().zip(expected.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn identical_frames_do_not_drift() {
        let frame = Frame {
            index: 0,
            image: textured(160, 140, 4),
        };
        let bbox = BBox::new(60.0, 50.0, 36.0, 36.0);
        let mut state = TrackerState::init(&frame, bbox, TrackerConfig::default()).unwrap();
        for i in 1..=50 {
            let out = state
                .step(&Frame {
                    index: i,
                    image: frame.image.clone(),
                })
                .unwrap();
            assert_eq!(out.bbox, bbox);
        }
    }

    #[test]
    fn wrong_frame_size_errors() {
        let frame = Frame {
            index: 0,
            image: textured(80, 80, 5),
        };
        let mut state =
            TrackerState::init(&frame, BBox::new(20.0, 20.0, 20.0, 20.0), TrackerConfig::default()).unwrap();
        let other = Frame {
            index: 1,
            image: textured(81, 80, 5),
        };
        assert!(matches!(state.step(&other), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_lambda2_matches_between_runs_regardless_of_mining() {
        let spec = SynthSpec::preset("twin", 30, (200, 200), 3).unwrap();
        let seq = spec.render().unwrap();
        let run = |lambda2: f64, gate: f64| {
            let cfg = TrackerConfig {
                lambda2,
                peak_gate: gate,
                ..TrackerConfig::default()
            };
            let mut st = TrackerState::init(&seq.frames[0], seq.ground_truth[0], cfg).unwrap();
            seq.frames[1..]
                .iter()
                .map(|f| st.step(f).unwrap().bbox)
                .collect::<Vec<_>>()
        };
        // The gate changes which points are mined; with lambda2 = 0 that must not matter.
        assert_eq!(run(0.0, 0.2), run(0.0, 0.9));
    }

    #[test]
    fn pure_translation_stays_within_a_cell() {
        let spec = SynthSpec {
            target_path: Trajectory::Linear {
                start: (50.0, 60.0),
                velocity: (3.0, 1.0),
            },
            ..SynthSpec::preset("translate", 30, (200, 200), 9).unwrap()
        };
        let seq = spec.render().unwrap();
        let cfg = TrackerConfig::default();
        let mut st = TrackerState::init(&seq.frames[0], seq.ground_truth[0], cfg).unwrap();
        for (f, gt) in seq.frames[1..].iter().zip(&seq.ground_truth[1..]) {
            let b = st.step(f).unwrap().bbox;
            assert!(b.center_distance(gt) <= 9.0, "frame {}: {:?} vs {:?}", f.index, b, gt);
        }
    }
}
