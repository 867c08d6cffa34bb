use crate::error::{Error, Result};
use crate::spectral::RealMap;

/// Cell-grid feature tensor, stored as one contiguous row-major plane per
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<f64>,
    cell_size: usize,
    windowed: bool,
}

impl FeatureStack {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<f64>, cell_size: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || channels == 0 {
            return Err(Error::invalid(format!(
                "feature stack needs positive dims, got {rows}x{cols}x{channels}"
            )));
        }
        if data.len() != rows * cols * channels {
            return Err(Error::invalid(format!(
                "feature stack {rows}x{cols}x{channels} needs {} values, got {}",
                rows * cols * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature stack contains non-finite values"));
        }
        Ok(FeatureStack {
            rows,
            cols,
            channels,
            data,
            cell_size,
            windowed: false,
        })
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize, cell_size: usize) -> Self {
        Self::new(rows, cols, channels, vec![0.0; rows * cols * channels], cell_size).expect("positive dims")
    }

    /// One channel per map; all maps must share a shape.
    pub fn from_maps(maps: &[RealMap], cell_size: usize) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::invalid("no channels supplied"))?;
        let (rows, cols) = first.shape();
        let mut data = Vec::with_capacity(rows * cols * maps.len());
        for m in maps {
            if m.shape() != (rows, cols) {
                return Err(Error::invalid(format!(
                    "channel shape {:?} differs from {:?}",
                    m.shape(),
                    (rows, cols)
                )));
            }
            data.extend_from_slice(m.as_slice());
        }
        Self::new(rows, cols, maps.len(), data, cell_size)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cell_size(&self) -> usize {
        self.cell_size
    }

    pub fn is_windowed(&self) -> bool {
        self.windowed
    }

    pub(crate) fn set_windowed(&mut self, windowed: bool) {
        self.windowed = windowed;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.rows * self.cols;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.rows * self.cols;
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn channel_map(&self, channel: usize) -> RealMap {
        RealMap::new(self.rows, self.cols, self.plane(channel).to_vec()).expect("valid plane")
    }

    pub fn get(&self, r: usize, c: usize, channel: usize) -> f64 {
        self.data[(channel * self.rows + r) * self.cols + c]
    }

    pub fn cell_vector(&self, r: usize, c: usize) -> Vec<f64> {
        (0..self.channels).map(|ch| self.get(r, c, ch)).collect()
    }
}
