//! Closed-form correlation filter learning in the Fourier domain.
//!
//! A filter is kept as per-channel numerators `conj(x_c) * y` over one shared
//! denominator `sum_c |x_c|^2 + lambda1 (+ lambda2 * sum_i sum_c |d_ic|^2)`.
//! Distractor patches enter only the denominator: their regression target is
//! zero, so they suppress the filter's response on every cyclic shift of each
//! distractor without touching the numerator.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::spectral::{dft2, idft2, RealMap, Spectrum};

/// Most distractors a single training step accepts (ranks 2 and 3).
pub const MAX_DISTRACTORS: usize = 2;

/// Wrapped Gaussian regression target peaking at lag `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTarget {
    label: RealMap,
    sigma_cells: f64,
}

impl RegressionTarget {
    pub fn label(&self) -> &RealMap {
        &self.label
    }

    pub fn sigma_cells(&self) -> f64 {
        self.sigma_cells
    }

    pub fn grid(&self) -> (usize, usize) {
        self.label.shape()
    }
}

pub fn make_gaussian_label(grid_h: usize, grid_w: usize, sigma_cells: f64) -> Result<RegressionTarget> {
    if grid_h == 0 || grid_w == 0 {
        return Err(Error::invalid(format!("empty label grid {grid_h}x{grid_w}")));
    }
    if !(sigma_cells > 0.0) || !sigma_cells.is_finite() {
        return Err(Error::invalid(format!(
            "label sigma must be positive, got {sigma_cells}"
        )));
    }
    let denom = 2.0 * sigma_cells * sigma_cells;
    let label = RealMap::from_fn(grid_h, grid_w, |u, v| {
        let du = u.min(grid_h - u) as f64;
        let dv = v.min(grid_w - v) as f64;
        (-(du * du + dv * dv) / denom).exp()
    });
    Ok(RegressionTarget { label, sigma_cells })
}

/// Label width for a target of the given pixel size: `sigma_factor` times the
/// geometric mean of the target's extent in cells.
pub fn label_sigma(target_w_px: f64, target_h_px: f64, cell_size: usize, sigma_factor: f64) -> f64 {
    let cells_w = target_w_px / cell_size as f64;
    let cells_h = target_h_px / cell_size as f64;
    sigma_factor * (cells_w * cells_h).sqrt()
}

/// Negative training samples mined from the previous frame's response map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistractorSet {
    patches: Vec<FeatureStack>,
}

impl DistractorSet {
    pub fn empty() -> Self {
        DistractorSet::default()
    }

    pub fn new(patches: Vec<FeatureStack>) -> Result<Self> {
        if patches.len() > MAX_DISTRACTORS {
            return Err(Error::invalid(format!(
                "at most {MAX_DISTRACTORS} distractors, got {}",
                patches.len()
            )));
        }
        if let Some(first) = patches.first() {
            let shape = (first.grid(), first.channels());
            if patches.iter().any(|p| (p.grid(), p.channels()) != shape) {
                return Err(Error::invalid("distractor patches differ in shape"));
            }
        }
        Ok(DistractorSet { patches })
    }

    pub fn k(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patches(&self) -> &[FeatureStack] {
        &self.patches
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterModel {
    numerator: Vec<Spectrum>,
    denominator: Spectrum,
}

impl FilterModel {
    pub fn from_parts(numerator: Vec<Spectrum>, denominator: Spectrum) -> Result<Self> {
        if numerator.is_empty() {
            return Err(Error::invalid("filter needs at least one channel"));
        }
        if numerator.iter().any(|n| n.shape() != denominator.shape()) {
            return Err(Error::invalid("numerator and denominator shapes differ"));
        }
        if denominator.as_slice().iter().any(|d| d.norm() == 0.0) {
            return Err(Error::Numerical("zero in filter denominator".into()));
        }
        Ok(FilterModel { numerator, denominator })
    }

    pub fn channels(&self) -> usize {
        self.numerator.len()
    }

    pub fn grid(&self) -> (usize, usize) {
        self.denominator.shape()
    }

    pub fn numerator(&self) -> &[Spectrum] {
        &self.numerator
    }

    pub fn denominator(&self) -> &Spectrum {
        &self.denominator
    }

    /// Frequency response `numerator_c / denominator` of one channel.
    pub fn channel_response(&self, channel: usize) -> Spectrum {
        self.numerator[channel]
            .zip_with(&self.denominator, |n, d| n / d)
            .expect("shapes checked at construction")
    }

    /// Spatial-domain filter taps of one channel.
    pub fn spatial_filter(&self, channel: usize) -> RealMap {
        idft2(&self.channel_response(channel))
    }
}

fn check_sample(x: &FeatureStack, y: &RegressionTarget) -> Result<()> {
    if x.grid() != y.grid() {
        return Err(Error::invalid(format!(
            "sample grid {:?} does not match label grid {:?}",
            x.grid(),
            y.grid()
        )));
    }
    Ok(())
}

fn channel_spectra(x: &FeatureStack) -> Vec<Spectrum> {
    (0..x.channels()).map(|c| dft2(&x.channel_map(c))).collect()
}

fn add_energy(acc: &mut Spectrum, spectra: &[Spectrum], weight: f64) {
    for s in spectra {
        for (a, v) in acc.as_mut_slice().iter_mut().zip(s.as_slice()) {
            a.re += weight * v.norm_sqr();
        }
    }
}

pub fn learn_standard(x: &FeatureStack, y: &RegressionTarget, lambda1: f64) -> Result<FilterModel> {
    learn_with_distractors(x, y, &DistractorSet::empty(), lambda1, 0.0)
}

pub fn learn_with_distractors(
    x: &FeatureStack,
    y: &RegressionTarget,
    d: &DistractorSet,
    lambda1: f64,
    lambda2: f64,
) -> Result<FilterModel> {
    check_sample(x, y)?;
    if !(lambda1 > 0.0) {
        return Err(Error::invalid(format!("lambda1 must be positive, got {lambda1}")));
    }
    if !(lambda2 >= 0.0) {
        return Err(Error::invalid(format!("lambda2 must be non-negative, got {lambda2}")));
    }
    if d.k() > MAX_DISTRACTORS {
        return Err(Error::invalid(format!("too many distractors: {}", d.k())));
    }
    for p in d.patches() {
        if p.grid() != x.grid() || p.channels() != x.channels() {
            return Err(Error::invalid(format!(
                "distractor shape {:?}x{} does not match sample {:?}x{}",
                p.grid(),
                p.channels(),
                x.grid(),
                x.channels()
            )));
        }
    }

    let (rows, cols) = x.grid();
    let y_hat = dft2(y.label());
    let x_hat = channel_spectra(x);

    let numerator = x_hat
        .iter()
        .map(|xc| xc.zip_with(&y_hat, |a, b| a.conj() * b))
        .collect::<Result<Vec<_>>>()?;

    let mut denominator = Spectrum::filled(rows, cols, Complex64::new(lambda1, 0.0));
    add_energy(&mut denominator, &x_hat, 1.0);
    if lambda2 > 0.0 {
        for patch in d.patches() {
            add_energy(&mut denominator, &channel_spectra(patch), lambda2);
        }
    }

    FilterModel::from_parts(numerator, denominator)
}

/// `(1 - theta) * old + theta * new`, applied to numerators and denominator alike.
pub fn blend_model(old: &FilterModel, new: &FilterModel, theta: f64) -> Result<FilterModel> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0, 1], got {theta}")));
    }
    if old.channels() != new.channels() || old.grid() != new.grid() {
        return Err(Error::invalid("cannot blend filters of different shapes"));
    }
    if theta == 0.0 {
        return Ok(old.clone());
    }
    if theta == 1.0 {
        return Ok(new.clone());
    }
    let mix = |a: Complex64, b: Complex64| a * (1.0 - theta) + b * theta;
    let numerator = old
        .numerator
        .iter()
        .zip(&new.numerator)
        .map(|(a, b)| a.zip_with(b, mix))
        .collect::<Result<Vec<_>>>()?;
    let denominator = old.denominator.zip_with(&new.denominator, mix)?;
    FilterModel::from_parts(numerator, denominator)
}
