//! Two-dimensional DFTs on dense grids and circular cross-correlation.
//!
//! Forward transforms are unnormalized; [`idft2`] applies the `1 / (rows * cols)`
//! factor. Transforms run at the native grid size, with no padding, so a bin or
//! lag index in a spectrum or correlation map is a cell offset on the input grid.

use std::cell::RefCell;
use std::ops::{Index, IndexMut};

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Row-major grid of real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMap {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("real map contains non-finite values"));
        }
        Ok(RealMap { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "grid dimensions must be positive");
        RealMap {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut map = RealMap::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                map.data[r * cols + c] = f(r, c);
            }
        }
        map
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Position and value of the maximum; ties resolve to the first entry in
    /// row-major order.
    pub fn argmax(&self) -> ((usize, usize), f64) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        ((best / self.cols, best % self.cols), self.data[best])
    }

    /// Circular shift: the value at `(r, c)` moves to `(r + dy, c + dx)`.
    pub fn circshift(&self, dy: isize, dx: isize) -> RealMap {
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        RealMap::from_fn(self.rows, self.cols, |r, c| {
            let sr = (r as isize - dy).rem_euclid(rows) as usize;
            let sc = (c as isize - dx).rem_euclid(cols) as usize;
            self[(sr, sc)]
        })
    }

    /// Rotates the map so that lag `(0, 0)` lands at `(rows / 2, cols / 2)`.
    pub fn fftshift(&self) -> RealMap {
        self.circshift((self.rows / 2) as isize, (self.cols / 2) as isize)
    }
}

impl Index<(usize, usize)> for RealMap {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for RealMap {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Row-major grid of complex DFT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        Ok(Spectrum { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "grid dimensions must be positive");
        Spectrum {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Applies `f` pointwise to two spectra of the same shape.
    pub fn zip_with(&self, other: &Spectrum, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Spectrum> {
        if self.shape() != other.shape() {
            return Err(Error::invalid(format!(
                "spectrum shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Spectrum {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Spectrum {
        Spectrum {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Index<(usize, usize)> for Spectrum {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("empty grid {rows}x{cols}")));
    }
    if rows * cols != len {
        return Err(Error::invalid(format!(
            "grid {rows}x{cols} needs {} samples, got {len}",
            rows * cols
        )));
    }
    Ok(())
}

fn fft2_in_place(rows: usize, cols: usize, data: &mut [Complex64], direction: FftDirection) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let row_fft = planner.plan_fft(cols, direction);
        let col_fft = planner.plan_fft(rows, direction);

        row_fft.process(data);

        let mut column = vec![Complex64::new(0.0, 0.0); rows];
        for c in 0..cols {
            for r in 0..rows {
                column[r] = data[r * cols + c];
            }
            col_fft.process(&mut column);
            for r in 0..rows {
                data[r * cols + c] = column[r];
            }
        }
    });
}

/// Unnormalized forward 2-D DFT.
pub fn dft2(m: &RealMap) -> Spectrum {
    let mut data: Vec<Complex64> = m.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(m.rows, m.cols, &mut data, FftDirection::Forward);
    Spectrum {
        rows: m.rows,
        cols: m.cols,
        data,
    }
}

/// Complex inverse 2-D DFT, scaled by `1 / (rows * cols)`.
pub fn idft2_complex(s: &Spectrum) -> Spectrum {
    let mut data = s.data.clone();
    fft2_in_place(s.rows, s.cols, &mut data, FftDirection::Inverse);
    let scale = 1.0 / (s.rows * s.cols) as f64;
    for v in &mut data {
        *v *= scale;
    }
    Spectrum {
        rows: s.rows,
        cols: s.cols,
        data,
    }
}

/// Inverse 2-D DFT keeping only the real part. For a conjugate-symmetric
/// spectrum the discarded imaginary parts are rounding noise.
pub fn idft2(s: &Spectrum) -> RealMap {
    let full = idft2_complex(s);
    RealMap {
        rows: s.rows,
        cols: s.cols,
        data: full.data.iter().map(|v| v.re).collect(),
    }
}

/// Circular cross-correlation of `b` against the template `a`:
/// `idft2(dft2(b) * conj(dft2(a)))`. If `b` is `a` shifted by `(dy, dx)` the
/// result peaks at `(dy, dx)`.
pub fn circ_corr(a: &RealMap, b: &RealMap) -> Result<RealMap> {
    if a.shape() != b.shape() {
        return Err(Error::invalid(format!(
            "correlation shape mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let product = dft2(b).zip_with(&dft2(a), |fb, fa| fb * fa.conj())?;
    Ok(idft2(&product))
}
