//! Deterministic synthetic sequences with exact ground truth.
//!
//! A textured target slides over a static textured background along a
//! parametric path. Extra patches, either pixel copies of the target or
//! unrelated occluders, follow their own paths. Everything derives from one
//! seed, so the same spec always renders the same bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sequence::{write_sequence, FrameSource};
use super::BBox;
use crate::error::{Error, Result};
use crate::features::{Frame, Image};

pub const PRESETS: [&str; 3] = ["translate", "twin", "occlude"];

/// Centre position as a function of the frame index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Trajectory {
    Linear {
        start: (f64, f64),
        velocity: (f64, f64),
    },
    /// Piecewise-linear through the points, spread evenly over the sequence.
    Waypoints(Vec<(f64, f64)>),
}

impl Trajectory {
    pub fn at(&self, k: usize, n_frames: usize) -> (f64, f64) {
        match self {
            Trajectory::Linear { start, velocity } => {
                (start.0 + velocity.0 * k as f64, start.1 + velocity.1 * k as f64)
            }
            Trajectory::Waypoints(points) => match points.len() {
                0 => (0.0, 0.0),
                1 => points[0],
                m => {
                    let t = if n_frames > 1 {
                        k as f64 / (n_frames - 1) as f64 * (m - 1) as f64
                    } else {
                        0.0
                    };
                    let i = (t.floor() as usize).min(m - 2);
                    let f = t - i as f64;
                    let (a, b) = (points[i], points[i + 1]);
                    (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f)
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistractorMode {
    /// Pixel-identical copy of the target texture.
    Twin,
    /// Independent texture, same statistics as the target.
    Occluder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDistractor {
    pub mode: DistractorMode,
    pub path: Trajectory,
    /// Drawn after the target when set, so it hides the target on overlap.
    pub on_top: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    /// Target `(w, h)` in pixels.
    pub target_size: (usize, usize),
    pub target_path: Trajectory,
    pub distractors: Vec<SynthDistractor>,
    /// Per-frame Gaussian pixel noise, in 8-bit levels.
    pub noise_sigma: f64,
    pub seed: u64,
    pub color: bool,
}

/// Rendered frames plus ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub name: String,
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<BBox>,
}

impl FrameSource for SyntheticSequence {
    fn name(&self) -> &str {
        &self.name
    }

    fn ground_truth(&self) -> &[BBox] {
        &self.ground_truth
    }

    fn frame(&self, index: usize) -> Result<Frame> {
        self.frames
            .get(index)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("{}: no frame {index}", self.name)))
    }
}

impl SyntheticSequence {
    pub fn write(&self, dir: &std::path::Path) -> Result<()> {
        write_sequence(dir, &self.frames, &self.ground_truth)
    }
}

/// Frames per sequence in the built-in suite.
pub const SUITE_FRAMES: usize = 60;
/// Frame size of the built-in suite.
pub const SUITE_SIZE: (usize, usize) = (200, 200);

/// The built-in benchmark suite: every preset at two seeds, named
/// `{preset}-{seed}`.
pub fn suite() -> Result<Vec<SyntheticSequence>> {
    let mut out = Vec::new();
    for name in PRESETS {
        for seed in [1, 2] {
            let mut seq = SynthSpec::preset(name, SUITE_FRAMES, SUITE_SIZE, seed)?.render()?;
            seq.name = format!("{name}-{seed}");
            out.push(seq);
        }
    }
    Ok(out)
}

impl SynthSpec {
    /// Named scenes scaled to the frame size.
    ///
    /// * `translate`: the target drifts diagonally across the frame.
    /// * `twin`: an identical copy crosses the target's path, passing less
    ///   than one target-width from it, drawn underneath the target.
    /// * `occlude`: an unrelated patch sweeps over the target.
    pub fn preset(name: &str, n_frames: usize, size: (usize, usize), seed: u64) -> Result<SynthSpec> {
        let (w, h) = (size.0 as f64, size.1 as f64);
        if size.0 < 40 || size.1 < 40 {
            return Err(Error::invalid(format!(
                "synthetic frames must be at least 40x40, got {}x{}",
                size.0, size.1
            )));
        }
        let side = (0.2 * w.min(h)).round() as usize;
        let s = side as f64;
        let margin = 0.5 * s + 2.0;
        let base = SynthSpec {
            width: size.0,
            height: size.1,
            n_frames,
            target_size: (side, side),
            target_path: Trajectory::Waypoints(vec![
                (margin + 0.1 * w, margin + 0.1 * h),
                (w - margin - 0.1 * w, h - margin - 0.1 * h),
            ]),
            distractors: Vec::new(),
            noise_sigma: 2.0,
            seed,
            color: true,
        };
        let spec = match name {
            "translate" => base,
            "twin" => {
                let cy = h / 2.0;
                let gap = 0.8 * s;
                SynthSpec {
                    target_path: Trajectory::Waypoints(vec![(0.3 * w, cy), (0.7 * w, cy)]),
                    distractors: vec![SynthDistractor {
                        mode: DistractorMode::Twin,
                        path: Trajectory::Waypoints(vec![(w - margin, cy + gap), (margin, cy + gap)]),
                        on_top: false,
                    }],
                    ..base
                }
            }
            "occlude" => {
                let cy = h / 2.0;
                SynthSpec {
                    target_path: Trajectory::Waypoints(vec![(0.35 * w, cy), (0.65 * w, cy)]),
                    distractors: vec![SynthDistractor {
                        mode: DistractorMode::Occluder,
                        path: Trajectory::Waypoints(vec![(w / 2.0, margin), (w / 2.0, h - margin)]),
                        on_top: true,
                    }],
                    ..base
                }
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(spec)
    }

    fn top_left(&self, path: &Trajectory, k: usize) -> (i64, i64) {
        let (cx, cy) = path.at(k, self.n_frames);
        let (tw, th) = (self.target_size.0 as f64, self.target_size.1 as f64);
        ((cx - tw / 2.0).round() as i64, (cy - th / 2.0).round() as i64)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("empty synthetic frame"));
        }
        if self.n_frames < 2 {
            return Err(Error::invalid("a sequence needs at least 2 frames"));
        }
        let (tw, th) = self.target_size;
        if tw == 0 || th == 0 || tw > self.width || th > self.height {
            return Err(Error::invalid(format!(
                "target size {tw}x{th} does not fit a {}x{} frame",
                self.width, self.height
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise sigma must be finite and non-negative"));
        }
        let paths = std::iter::once(("target", &self.target_path))
            .chain(self.distractors.iter().map(|d| ("distractor", &d.path)));
        for (what, path) in paths {
            for k in 0..self.n_frames {
                let (x, y) = self.top_left(path, k);
                if x < 0 || y < 0 || x + tw as i64 > self.width as i64 || y + th as i64 > self.height as i64 {
                    return Err(Error::invalid(format!(
                        "{what} leaves the {}x{} frame at frame {k} (top-left {x},{y})",
                        self.width, self.height
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn render(&self) -> Result<SyntheticSequence> {
        self.validate()?;
        let ch = if self.color { 3 } else { 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let background = smooth_texture(&mut rng, self.width, self.height, ch, 16, 60..196);
        let (tw, th) = self.target_size;
        let target = block_texture(&mut rng, tw, th, ch, 5);
        let occluders: Vec<Image> = self
            .distractors
            .iter()
            .map(|d| match d.mode {
                DistractorMode::Twin => target.clone(),
                DistractorMode::Occluder => block_texture(&mut rng, tw, th, ch, 5),
            })
            .collect();
        let noise =
            Normal::new(0.0, self.noise_sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::invalid(e.to_string()))?;

        let mut frames = Vec::with_capacity(self.n_frames);
        let mut ground_truth = Vec::with_capacity(self.n_frames);
        for k in 0..self.n_frames {
            let mut img = background.clone();
            for (d, tex) in self.distractors.iter().zip(&occluders) {
                if !d.on_top {
                    paste(&mut img, tex, self.top_left(&d.path, k));
                }
            }
            let (x, y) = self.top_left(&self.target_path, k);
            paste(&mut img, &target, (x, y));
            for (d, tex) in self.distractors.iter().zip(&occluders) {
                if d.on_top {
                    paste(&mut img, tex, self.top_left(&d.path, k));
                }
            }
            if self.noise_sigma > 0.0 {
                for v in img.as_bytes_mut() {
                    *v = (*v as f64 + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
                }
            }
            frames.push(Frame { index: k, image: img });
            ground_truth.push(BBox::new(x as f64, y as f64, tw as f64, th as f64));
        }
        Ok(SyntheticSequence {
            name: format!("synth-{}", self.seed),
            frames,
            ground_truth,
        })
    }
}

fn paste(dst: &mut Image, src: &Image, (x0, y0): (i64, i64)) {
    for y in 0..src.height() {
        for x in 0..src.width() {
            let (dx, dy) = (x0 + x as i64, y0 + y as i64);
            if dx >= 0 && dy >= 0 && (dx as usize) < dst.width() && (dy as usize) < dst.height() {
                dst.pixel_mut(dx as usize, dy as usize).copy_from_slice(src.pixel(x, y));
            }
        }
    }
}

/// Low-contrast bilinear value noise on a `step`-pixel lattice.
fn smooth_texture(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    ch: usize,
    step: usize,
    range: std::ops::Range<u8>,
) -> Image {
    let (gw, gh) = (w / step + 2, h / step + 2);
    let lattice: Vec<f64> = (0..gw * gh * ch)
        .map(|_| rng.random_range(range.clone()) as f64)
        .collect();
    let mut data = vec![0u8; w * h * ch];
    for y in 0..h {
        let fy = y as f64 / step as f64;
        let (iy, ty) = (fy.floor() as usize, fy.fract());
        for x in 0..w {
            let fx = x as f64 / step as f64;
            let (ix, tx) = (fx.floor() as usize, fx.fract());
            for c in 0..ch {
                let at = |gx: usize, gy: usize| lattice[(gy * gw + gx) * ch + c];
                let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
                let bot = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
                data[(y * w + x) * ch + c] = (top * (1.0 - ty) + bot * ty).round() as u8;
            }
        }
    }
    Image::new(w, h, ch, data).expect("sized buffer")
}

/// High-contrast random blocks of `block` pixels.
fn block_texture(rng: &mut ChaCha8Rng, w: usize, h: usize, ch: usize, block: usize) -> Image {
    let (bw, bh) = (w.div_ceil(block), h.div_ceil(block));
    let colors: Vec<u8> = (0..bw * bh * ch).map(|_| rng.random::<u8>()).collect();
    let mut data = vec![0u8; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            let b = (y / block) * bw + x / block;
            data[(y * w + x) * ch..(y * w + x + 1) * ch].copy_from_slice(&colors[b * ch..(b + 1) * ch]);
        }
    }
    Image::new(w, h, ch, data).expect("sized buffer")
}
