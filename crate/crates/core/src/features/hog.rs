//! Felzenszwalb-style 31-channel HOG.
//!
//! Channels 0..18 are contrast-sensitive orientations, 18..27 contrast-
//! insensitive orientations, 27..31 the four block-energy (texture) features.
//! Each pixel votes its gradient magnitude into the nearest of 18 directions
//! and, bilinearly, into the four surrounding cells. The grid keeps every
//! `floor(dim / cell)` cell; block normalization replicates edge cells.

use super::{FeatureStack, Image};
use crate::error::{Error, Result};

pub const HOG_CHANNELS: usize = 31;

const ORIENTATIONS: usize = 9;
const TRUNCATION: f64 = 0.2;
const EPS: f64 = 1e-4;
// 1 / sqrt(18)
const TEXTURE_SCALE: f64 = 0.2357;

fn unit_vectors() -> [(f64, f64); ORIENTATIONS] {
    let mut uv = [(0.0, 0.0); ORIENTATIONS];
    for (k, v) in uv.iter_mut().enumerate() {
        let a = k as f64 * std::f64::consts::PI / ORIENTATIONS as f64;
        *v = (a.cos(), a.sin());
    }
    uv
}

/// Per-pixel gradient with replicated borders; colour images use the channel
/// with the largest gradient magnitude.
fn gradients(patch: &Image) -> (Vec<f64>, Vec<f64>) {
    let (w, h, ch) = (patch.width(), patch.height(), patch.channels());
    let bytes = patch.as_bytes();
    let at = |x: usize, y: usize, c: usize| bytes[(y * w + x) * ch + c] as f64;
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let mut best = (-1.0, 0.0, 0.0);
            for c in 0..ch {
                let dx = at(xr, y, c) - at(xl, y, c);
                let dy = at(x, yd, c) - at(x, yu, c);
                let m = dx * dx + dy * dy;
                if m > best.0 {
                    best = (m, dx, dy);
                }
            }
            gx[y * w + x] = best.1;
            gy[y * w + x] = best.2;
        }
    }
    (gx, gy)
}

pub fn fhog(patch: &Image, cell_size: usize) -> Result<FeatureStack> {
    if cell_size == 0 {
        return Err(Error::invalid("HOG cell size must be positive"));
    }
    let (w, h) = (patch.width(), patch.height());
    let (cols, rows) = (w / cell_size, h / cell_size);
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "patch {w}x{h} is smaller than one {cell_size}px cell"
        )));
    }

    let uv = unit_vectors();
    let (gx, gy) = gradients(patch);
    let bins = 2 * ORIENTATIONS;
    let mut hist = vec![0.0; rows * cols * bins];
    let cs = cell_size as f64;

    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (gx[y * w + x], gy[y * w + x]);
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }
            // Exact ties (vertical gradients sit on a bin boundary) go to the
            // lower direction rather than to rounding noise in the unit vectors.
            let tie = 1e-9 * mag;
            let mut best_dot = 0.0;
            let mut best_o = 0;
            for (k, &(u, v)) in uv.iter().enumerate() {
                let dot = u * dx + v * dy;
                if dot > best_dot + tie {
                    best_dot = dot;
                    best_o = k;
                } else if -dot > best_dot + tie {
                    best_dot = -dot;
                    best_o = k + ORIENTATIONS;
                }
            }

            let xp = (x as f64 + 0.5) / cs - 0.5;
            let yp = (y as f64 + 0.5) / cs - 0.5;
            let (ixp, iyp) = (xp.floor() as isize, yp.floor() as isize);
            let (vx0, vy0) = (xp - ixp as f64, yp - iyp as f64);
            let (vx1, vy1) = (1.0 - vx0, 1.0 - vy0);
            for (cy, wy) in [(iyp, vy1), (iyp + 1, vy0)] {
                for (cx, wx) in [(ixp, vx1), (ixp + 1, vx0)] {
                    if cy < 0 || cx < 0 || cy >= rows as isize || cx >= cols as isize {
                        continue;
                    }
                    let cell = cy as usize * cols + cx as usize;
                    hist[cell * bins + best_o] += wy * wx * mag;
                }
            }
        }
    }

    // Energy of the contrast-insensitive histogram in each cell.
    let mut energy = vec![0.0; rows * cols];
    for (cell, e) in energy.iter_mut().enumerate() {
        let hc = &hist[cell * bins..(cell + 1) * bins];
        *e = (0..ORIENTATIONS).map(|o| (hc[o] + hc[o + ORIENTATIONS]).powi(2)).sum();
    }
    let energy_at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, rows as isize - 1) as usize;
        let c = c.clamp(0, cols as isize - 1) as usize;
        energy[r * cols + c]
    };

    let plane = rows * cols;
    let mut out = vec![0.0; plane * HOG_CHANNELS];
    for r in 0..rows {
        for c in 0..cols {
            let (ri, ci) = (r as isize, c as isize);
            let mut norms = [0.0; 4];
            for (k, (dr, dc)) in [(-1, -1), (-1, 1), (1, -1), (1, 1)].into_iter().enumerate() {
                let sum =
                    energy_at(ri, ci) + energy_at(ri + dr, ci) + energy_at(ri, ci + dc) + energy_at(ri + dr, ci + dc);
                norms[k] = 1.0 / (sum + EPS).sqrt();
            }

            let cell = r * cols + c;
            let hc = &hist[cell * bins..(cell + 1) * bins];
            let mut texture = [0.0; 4];
            for o in 0..bins {
                let mut acc = 0.0;
                for (k, n) in norms.iter().enumerate() {
                    let v = (hc[o] * n).min(TRUNCATION);
                    acc += v;
                    texture[k] += v;
                }
                out[o * plane + cell] = 0.5 * acc;
            }
            for o in 0..ORIENTATIONS {
                let sum = hc[o] + hc[o + ORIENTATIONS];
                let acc: f64 = norms.iter().map(|n| (sum * n).min(TRUNCATION)).sum();
                out[(bins + o) * plane + cell] = 0.5 * acc;
            }
            for (k, t) in texture.iter().enumerate() {
                out[(bins + ORIENTATIONS + k) * plane + cell] = TEXTURE_SCALE * t;
            }
        }
    }

    FeatureStack::new(rows, cols, HOG_CHANNELS, out, cell_size)
}
