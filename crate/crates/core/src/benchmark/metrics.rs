use serde::Serialize;

use super::BBox;
use crate::error::{Error, Result};

/// Success-curve overlap thresholds: 0.00, 0.05, ..., 1.00.
pub const SUCCESS_THRESHOLDS: usize = 21;
/// Precision-curve centre-error thresholds: 0, 1, ..., 50 px.
pub const PRECISION_THRESHOLDS: usize = 51;
pub const DP_THRESHOLD_PX: f64 = 20.0;
const SR_THRESHOLD: f64 = 0.5;

/// Intersection over union.
pub fn overlap(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}

/// `(threshold, fraction of frames with overlap > threshold)`.
pub fn success_curve(overlaps: &[f64]) -> Vec<(f64, f64)> {
    (0..SUCCESS_THRESHOLDS)
        .map(|i| {
            let t = i as f64 * 0.05;
            (t, fraction(overlaps, |o| o > t))
        })
        .collect()
}

/// `(threshold, fraction of frames with centre error <= threshold)`.
pub fn precision_curve(center_errors: &[f64]) -> Vec<(f64, f64)> {
    (0..PRECISION_THRESHOLDS)
        .map(|i| {
            let t = i as f64;
            (t, fraction(center_errors, |e| e <= t))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub overlaps: Vec<f64>,
    pub center_errors: Vec<f64>,
    pub sr: f64,
    pub auc: f64,
    pub dp: f64,
    pub fps: f64,
}

pub fn evaluate(predicted: &[BBox], gt: &[BBox], elapsed_secs: f64) -> Result<EvalReport> {
    if predicted.len() != gt.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} ground-truth boxes",
            predicted.len(),
            gt.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    let overlaps: Vec<f64> = predicted.iter().zip(gt).map(|(p, g)| overlap(p, g)).collect();
    let center_errors: Vec<f64> = predicted.iter().zip(gt).map(|(p, g)| p.center_distance(g)).collect();
    let sr = fraction(&overlaps, |o| o > SR_THRESHOLD);
    let auc = success_curve(&overlaps).iter().map(|(_, v)| v).sum::<f64>() / SUCCESS_THRESHOLDS as f64;
    let dp = fraction(&center_errors, |e| e <= DP_THRESHOLD_PX);
    let fps = predicted.len() as f64 / elapsed_secs.max(1e-9);
    Ok(EvalReport {
        overlaps,
        center_errors,
        sr,
        auc,
        dp,
        fps,
    })
}
