//! Detection responses and distractor mining on response maps.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::filter::FilterModel;
use crate::spectral::{dft2, idft2, RealMap, Spectrum};

/// At most this many ranked peaks survive mining: the target plus two
/// distractor candidates.
pub const MAX_INTEREST_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    values: RealMap,
    peak_pos: (usize, usize),
    peak_value: f64,
}

impl ResponseMap {
    pub fn new(values: RealMap) -> Self {
        let (peak_pos, peak_value) = values.argmax();
        ResponseMap {
            values,
            peak_pos,
            peak_value,
        }
    }

    pub fn values(&self) -> &RealMap {
        &self.values
    }

    pub fn peak_pos(&self) -> (usize, usize) {
        self.peak_pos
    }

    pub fn peak_value(&self) -> f64 {
        self.peak_value
    }

    /// Signed cell displacement of the peak, with lags past the half-way
    /// point wrapped to negative offsets.
    pub fn peak_offset(&self) -> (isize, isize) {
        let (rows, cols) = self.values.shape();
        (wrap_lag(self.peak_pos.0, rows), wrap_lag(self.peak_pos.1, cols))
    }

    /// Peak offset refined to a fraction of a cell on each axis.
    ///
    /// Cell-binned features make the response fall off roughly linearly
    /// between neighbouring lags, so the refinement fits a tent: with the
    /// lower neighbour as baseline, the peak moves towards the higher one by
    /// its share of the two remaining heights. The correction is within half
    /// a cell and exactly zero for a symmetric peak.
    pub fn subcell_offset(&self) -> (f64, f64) {
        let (rows, cols) = self.values.shape();
        let (r, c) = self.peak_pos;
        let (dy, dx) = self.peak_offset();
        let v = |r: usize, c: usize| self.values[(r, c)];
        let fit = |lo: f64, mid: f64, hi: f64| {
            let base = lo.min(hi);
            let up = lo.max(hi) - base;
            let denom = (mid - base) + up;
            if lo == hi || denom <= 0.0 {
                return 0.0;
            }
            let d = (up / denom).min(0.5);
            if hi > lo {
                d
            } else {
                -d
            }
        };
        let ry = if rows < 3 {
            0.0
        } else {
            fit(v((r + rows - 1) % rows, c), self.peak_value, v((r + 1) % rows, c))
        };
        let rx = if cols < 3 {
            0.0
        } else {
            fit(v(r, (c + cols - 1) % cols), self.peak_value, v(r, (c + 1) % cols))
        };
        (dy as f64 + ry, dx as f64 + rx)
    }

    /// The same map with lag `(0, 0)` moved to the grid centre.
    pub fn centered(&self) -> ResponseMap {
        ResponseMap::new(self.values.fftshift())
    }
}

fn wrap_lag(lag: usize, n: usize) -> isize {
    if lag > n / 2 {
        lag as isize - n as isize
    } else {
        lag as isize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterestPoint {
    pub pos: (usize, usize),
    pub value: f64,
    pub rank: usize,
    pub accepted: bool,
}

pub fn compute_response(model: &FilterModel, z: &FeatureStack) -> Result<ResponseMap> {
    if z.grid() != model.grid() || z.channels() != model.channels() {
        return Err(Error::invalid(format!(
            "test sample {:?}x{} does not match filter {:?}x{}",
            z.grid(),
            z.channels(),
            model.grid(),
            model.channels()
        )));
    }
    let (rows, cols) = model.grid();
    let mut acc = Spectrum::filled(rows, cols, Complex64::new(0.0, 0.0));
    for (c, num) in model.numerator().iter().enumerate() {
        let z_hat = dft2(&z.channel_map(c));
        for ((a, zv), nv) in acc.as_mut_slice().iter_mut().zip(z_hat.as_slice()).zip(num.as_slice()) {
            *a += zv * nv;
        }
    }
    let den = model.denominator();
    let r_hat = acc.zip_with(den, |a, d| a / d)?;
    Ok(ResponseMap::new(idft2(&r_hat)))
}

/// Ranked local maxima under Chebyshev-radius non-maximum suppression.
///
/// A cell is a candidate when no cell within `nms_radius` is larger (ties go
/// to the earlier cell in row-major order). Candidates are then taken in
/// descending order, dropping any within `nms_radius` of one already kept,
/// and the list is cut at three.
pub fn find_interest_points(r: &ResponseMap, nms_radius: usize) -> Vec<InterestPoint> {
    let nms_radius = nms_radius.max(1);
    let map = r.values();
    let (rows, cols) = map.shape();

    let mut candidates = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let v = map[(row, col)];
            let r0 = row.saturating_sub(nms_radius);
            let r1 = (row + nms_radius).min(rows - 1);
            let c0 = col.saturating_sub(nms_radius);
            let c1 = (col + nms_radius).min(cols - 1);
            let dominated = (r0..=r1).any(|rr| {
                (c0..=c1).any(|cc| {
                    let w = map[(rr, cc)];
                    (rr, cc) != (row, col) && (w > v || (w == v && (rr, cc) < (row, col)))
                })
            });
            if !dominated {
                candidates.push(((row, col), v));
            }
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut kept: Vec<((usize, usize), f64)> = Vec::with_capacity(MAX_INTEREST_POINTS);
    for cand in candidates {
        if kept.len() == MAX_INTEREST_POINTS {
            break;
        }
        let near = kept
            .iter()
            .any(|(p, _)| p.0.abs_diff(cand.0 .0).max(p.1.abs_diff(cand.0 .1)) <= nms_radius);
        if !near {
            kept.push(cand);
        }
    }

    kept.into_iter()
        .enumerate()
        .map(|(i, (pos, value))| InterestPoint {
            pos,
            value,
            rank: i + 1,
            accepted: false,
        })
        .collect()
}

/// Marks ranks 2 and 3 as distractors when they exceed `peak_gate` times the
/// rank-1 value and lie within `d_max` cells (Euclidean) of the rank-1 peak.
pub fn gate_distractors(points: &[InterestPoint], d_max: f64, peak_gate: f64) -> Vec<InterestPoint> {
    let Some(top) = points.iter().find(|p| p.rank == 1).copied() else {
        return points.to_vec();
    };
    points
        .iter()
        .map(|p| {
            let mut p = *p;
            p.accepted = false;
            if p.rank > 1 {
                let dy = p.pos.0 as f64 - top.pos.0 as f64;
                let dx = p.pos.1 as f64 - top.pos.1 as f64;
                let dist = (dy * dy + dx * dx).sqrt();
                p.accepted = p.value > peak_gate * top.value && dist <= d_max;
            }
            p
        })
        .collect()
}
