//! Patch extraction and the per-cell feature pipeline.
//!
//! Colour frames are described by PCA-reduced HOG plus PCA-reduced colour
//! names; grey frames by PCA-reduced HOG plus a per-cell intensity channel.
//! The chroma map, computed at its own cell size, is resampled onto the HOG
//! grid so that one joint filter sees a single tensor.

mod color;
mod hog;
mod pca;
mod stack;

use std::f64::consts::PI;
use std::sync::Arc;

pub use color::{cn_features, cn_index, intensity_channel, CnTable, CN_CHANNELS, CN_ROWS};
pub use hog::{fhog, HOG_CHANNELS};
pub use pca::{apply_pca, fit_pca, PcaProjection};
pub use stack::FeatureStack;

use crate::error::{Error, Result};

/// 8-bit image with 1 (grey) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("images have 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "{width}x{height}x{channels} image needs {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, pixel: &[u8]) -> Result<Self> {
        let data = pixel
            .iter()
            .copied()
            .cycle()
            .take(width * height * pixel.len())
            .collect();
        Image::new(width, height, pixel.len(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_color(&self) -> bool {
        self.channels == 3
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// BT.601 luma for colour images, the sample itself for grey ones.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                y.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }
}

/// One decoded video frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub index: usize,
    pub image: Image,
}

/// Axis-aligned crop of `size = (w, h)` pixels centred at `center = (x, y)`.
/// The top-left corner is `round(center - size / 2)`; pixels outside the
/// frame replicate the nearest edge.
pub fn extract_patch(frame: &Image, center: (f64, f64), size: (usize, usize)) -> Image {
    let (w, h) = (size.0.max(1), size.1.max(1));
    let x0 = (center.0 - w as f64 / 2.0).round() as isize;
    let y0 = (center.1 - h as f64 / 2.0).round() as isize;
    let ch = frame.channels;
    let mut data = Vec::with_capacity(w * h * ch);
    let max_x = frame.width as isize - 1;
    let max_y = frame.height as isize - 1;
    for dy in 0..h as isize {
        let sy = (y0 + dy).clamp(0, max_y) as usize;
        for dx in 0..w as isize {
            let sx = (x0 + dx).clamp(0, max_x) as usize;
            data.extend_from_slice(frame.pixel(sx, sy));
        }
    }
    Image {
        width: w,
        height: h,
        channels: ch,
        data,
    }
}

fn hann(n: usize, i: usize) -> f64 {
    if n == 1 {
        1.0
    } else {
        0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos())
    }
}

/// Separable 2-D Hann window over the cell grid.
pub fn hann_weights(rows: usize, cols: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let wr = hann(rows, r);
        for c in 0..cols {
            w.push(wr * hann(cols, c));
        }
    }
    w
}

pub fn hann_window(stack: &FeatureStack) -> Result<FeatureStack> {
    if stack.is_windowed() {
        return Err(Error::invalid("feature stack is already windowed"));
    }
    let weights = hann_weights(stack.rows(), stack.cols());
    let mut out = stack.clone();
    for c in 0..out.channels() {
        for (v, w) in out.plane_mut(c).iter_mut().zip(&weights) {
            *v *= w;
        }
    }
    out.set_windowed(true);
    Ok(out)
}

/// Bilinear resampling of every channel onto a `rows x cols` grid, aligning
/// cell centres.
pub fn resample(stack: &FeatureStack, rows: usize, cols: usize) -> FeatureStack {
    if stack.grid() == (rows, cols) {
        return stack.clone();
    }
    let (sr, sc) = stack.grid();
    let coord = |i: usize, dst: usize, src: usize| -> (usize, usize, f64) {
        let p = ((i as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
        let i0 = p.floor() as usize;
        let i1 = (i0 + 1).min(src - 1);
        (i0, i1, p - i0 as f64)
    };
    let mut data = Vec::with_capacity(rows * cols * stack.channels());
    for ch in 0..stack.channels() {
        let plane = stack.plane(ch);
        for r in 0..rows {
            let (r0, r1, fr) = coord(r, rows, sr);
            for c in 0..cols {
                let (c0, c1, fc) = coord(c, cols, sc);
                let top = plane[r0 * sc + c0] * (1.0 - fc) + plane[r0 * sc + c1] * fc;
                let bottom = plane[r1 * sc + c0] * (1.0 - fc) + plane[r1 * sc + c1] * fc;
                data.push(top * (1.0 - fr) + bottom * fr);
            }
        }
    }
    let mut out =
        FeatureStack::new(rows, cols, stack.channels(), data, stack.cell_size()).expect("resampled dims are positive");
    out.set_windowed(stack.is_windowed());
    out
}

/// Resamples `chroma` onto the HOG grid and appends its channels after the
/// HOG channels.
pub fn combine_features(hog: &FeatureStack, chroma: &FeatureStack) -> Result<FeatureStack> {
    if hog.is_windowed() != chroma.is_windowed() {
        return Err(Error::invalid("cannot combine windowed with unwindowed features"));
    }
    let (rows, cols) = hog.grid();
    let chroma = resample(chroma, rows, cols);
    let mut data = hog.as_slice().to_vec();
    data.extend_from_slice(chroma.as_slice());
    let mut out = FeatureStack::new(rows, cols, hog.channels() + chroma.channels(), data, hog.cell_size())?;
    out.set_windowed(hog.is_windowed());
    Ok(out)
}

/// Full per-patch pipeline with frozen PCA projections.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    hog_cell: usize,
    cn_cell: usize,
    table: Arc<CnTable>,
    pca_hog: PcaProjection,
    pca_cn: Option<PcaProjection>,
}

/// Output dimensions after PCA.
pub const HOG_PCA_DIM: usize = 10;
pub const CN_PCA_DIM: usize = 3;

impl FeatureExtractor {
    /// Fits both PCA projections on `patch` and freezes them.
    pub fn fit(patch: &Image, hog_cell: usize, cn_cell: usize, table: Arc<CnTable>) -> Result<Self> {
        let hog = fhog(patch, hog_cell)?;
        let pca_hog = fit_pca(&hog, HOG_PCA_DIM)?;
        let pca_cn = if patch.is_color() {
            let cn = cn_features(patch, cn_cell, &table)?;
            Some(fit_pca(&cn, CN_PCA_DIM)?)
        } else {
            None
        };
        Ok(FeatureExtractor {
            hog_cell,
            cn_cell,
            table,
            pca_hog,
            pca_cn,
        })
    }

    pub fn pca_hog(&self) -> &PcaProjection {
        &self.pca_hog
    }

    pub fn pca_cn(&self) -> Option<&PcaProjection> {
        self.pca_cn.as_ref()
    }

    pub fn channels(&self) -> usize {
        HOG_PCA_DIM + if self.pca_cn.is_some() { CN_PCA_DIM } else { 1 }
    }

    /// Windowed, combined feature stack for one patch.
    pub fn extract(&self, patch: &Image) -> Result<FeatureStack> {
        let hog = apply_pca(&fhog(patch, self.hog_cell)?, &self.pca_hog)?;
        let chroma = match (&self.pca_cn, patch.is_color()) {
            (Some(pca), true) => apply_pca(&cn_features(patch, self.cn_cell, &self.table)?, pca)?,
            (None, false) => intensity_channel(patch, self.cn_cell)?,
            _ => {
                return Err(Error::invalid(
                    "patch colour layout differs from the one the extractor was fitted on",
                ))
            }
        };
        hann_window(&combine_features(&hog, &chroma)?)
    }
}
