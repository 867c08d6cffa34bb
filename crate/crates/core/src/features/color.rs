use std::fs;
use std::path::Path;

use super::{FeatureStack, Image};
use crate::error::{Error, Result};

pub const CN_ROWS: usize = 32768;
pub const CN_CHANNELS: usize = 10;

/// Quantized-RGB to colour-name score lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct CnTable {
    rows: Vec<[f64; CN_CHANNELS]>,
}

/// Table row for an RGB triple: 5 bits per channel, red varying fastest.
pub fn cn_index(r: u8, g: u8, b: u8) -> usize {
    (r as usize / 8) + 32 * (g as usize / 8) + 1024 * (b as usize / 8)
}

// Prototype colours for the built-in table.
const PROTOTYPES: [[f64; 3]; CN_CHANNELS] = [
    [0.0, 0.0, 0.0],       // black
    [255.0, 255.0, 255.0], // white
    [128.0, 128.0, 128.0], // grey
    [220.0, 30.0, 30.0],   // red
    [40.0, 170.0, 50.0],   // green
    [40.0, 70.0, 210.0],   // blue
    [240.0, 230.0, 40.0],  // yellow
    [250.0, 140.0, 20.0],  // orange
    [140.0, 50.0, 170.0],  // purple
    [120.0, 75.0, 35.0],   // brown
];
const PROTOTYPE_WIDTH: f64 = 60.0;

impl CnTable {
    pub fn from_rows(rows: Vec<[f64; CN_CHANNELS]>) -> Result<Self> {
        if rows.len() != CN_ROWS {
            return Err(Error::Format(format!(
                "colour-name table needs {CN_ROWS} rows, got {}",
                rows.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Format("colour-name table has non-finite entries".into()));
        }
        Ok(CnTable { rows })
    }

    /// Parses the text format: one row per line, ten whitespace-separated
    /// decimals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::with_capacity(CN_ROWS);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("colour-name table line {}: {e}", i + 1)))?;
            let row: [f64; CN_CHANNELS] = values.try_into().map_err(|v: Vec<f64>| {
                Error::Format(format!(
                    "colour-name table line {}: expected {CN_CHANNELS} values, got {}",
                    i + 1,
                    v.len()
                ))
            })?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Soft assignment of each quantized colour to ten fixed prototypes.
    pub fn fallback() -> Self {
        let rows = (0..CN_ROWS)
            .map(|idx| {
                let bin_center = |q: usize| (q * 8) as f64 + 3.5;
                let rgb = [
                    bin_center(idx % 32),
                    bin_center((idx / 32) % 32),
                    bin_center(idx / 1024),
                ];
                let mut row = [0.0; CN_CHANNELS];
                for (score, proto) in row.iter_mut().zip(PROTOTYPES.iter()) {
                    let d2: f64 = rgb.iter().zip(proto).map(|(a, b)| (a - b).powi(2)).sum();
                    *score = (-d2 / (2.0 * PROTOTYPE_WIDTH * PROTOTYPE_WIDTH)).exp();
                }
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    row.iter_mut().for_each(|v| *v /= total);
                }
                row
            })
            .collect();
        CnTable { rows }
    }

    pub fn row(&self, index: usize) -> &[f64; CN_CHANNELS] {
        &self.rows[index]
    }
}

fn cell_grid(patch: &Image, cell_size: usize) -> Result<(usize, usize)> {
    if cell_size == 0 {
        return Err(Error::invalid("cell size must be positive"));
    }
    let (rows, cols) = (patch.height() / cell_size, patch.width() / cell_size);
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "patch {}x{} is smaller than one {cell_size}px cell",
            patch.width(),
            patch.height()
        )));
    }
    Ok((rows, cols))
}

/// Per-cell mean of the colour-name rows of its pixels.
pub fn cn_features(patch: &Image, cell_size: usize, table: &CnTable) -> Result<FeatureStack> {
    if !patch.is_color() {
        return Err(Error::invalid(
            "colour names need an RGB patch; use the intensity channel",
        ));
    }
    let (rows, cols) = cell_grid(patch, cell_size)?;
    let plane = rows * cols;
    let mut data = vec![0.0; plane * CN_CHANNELS];
    let norm = 1.0 / (cell_size * cell_size) as f64;
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = [0.0; CN_CHANNELS];
            for y in r * cell_size..(r + 1) * cell_size {
                for x in c * cell_size..(c + 1) * cell_size {
                    let p = patch.pixel(x, y);
                    for (a, v) in acc.iter_mut().zip(table.row(cn_index(p[0], p[1], p[2]))) {
                        *a += v;
                    }
                }
            }
            for (ch, a) in acc.iter().enumerate() {
                data[ch * plane + r * cols + c] = a * norm;
            }
        }
    }
    FeatureStack::new(rows, cols, CN_CHANNELS, data, cell_size)
}

/// Per-cell mean intensity mapped to `[-0.5, 0.5]`.
pub fn intensity_channel(patch: &Image, cell_size: usize) -> Result<FeatureStack> {
    if patch.is_color() {
        return Err(Error::invalid("intensity channel expects a grey patch"));
    }
    let (rows, cols) = cell_grid(patch, cell_size)?;
    let mut data = Vec::with_capacity(rows * cols);
    let norm = 1.0 / (cell_size * cell_size) as f64;
    for r in 0..rows {
        for c in 0..cols {
            let mut sum = 0.0;
            for y in r * cell_size..(r + 1) * cell_size {
                for x in c * cell_size..(c + 1) * cell_size {
                    sum += patch.pixel(x, y)[0] as f64;
                }
            }
            data.push(sum * norm / 255.0 - 0.5);
        }
    }
    FeatureStack::new(rows, cols, 1, data, cell_size)
}
