//! Dense reference implementations used only to check the fast paths.
//!
//! Everything here is O(n^2) or worse and materializes circulant matrices
//! explicitly. Enabled for unit tests and, through the `oracle` feature, for
//! downstream test suites.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{RealMap, Spectrum};

/// Direct double-sum 2-D DFT.
pub fn naive_dft2(m: &RealMap) -> Spectrum {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for u in 0..rows {
        for v in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rows {
                for c in 0..cols {
                    let phase =
                        -2.0 * std::f64::consts::PI * ((u * r) as f64 / rows as f64 + (v * c) as f64 / cols as f64);
                    acc += m[(r, c)] * Complex64::from_polar(1.0, phase);
                }
            }
            out.push(acc);
        }
    }
    Spectrum::new(rows, cols, out).expect("shape preserved")
}

/// Dense circulant matrix whose row `i` is `first_row` cyclically shifted
/// right by `i`.
pub fn oracle_circulant(first_row: &[f64]) -> DMatrix<f64> {
    let n = first_row.len();
    assert!(n >= 1);
    DMatrix::from_fn(n, n, |i, k| first_row[(k + n - i) % n])
}

/// Block-circulant analogue for a 2-D grid: row `i * cols + j` is the map
/// cyclically shifted by `(i, j)`, flattened row-major.
pub fn circulant_2d(m: &RealMap) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let n = rows * cols;
    DMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row / cols, row % cols);
        let (r, c) = (col / cols, col % cols);
        m[((r + rows - i) % rows, (c + cols - j) % cols)]
    })
}

pub fn to_vector(m: &RealMap) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// `(M^T M + lambda1 I)^{-1} M^T ybar` by a dense LU solve.
pub fn oracle_ridge(m: &DMatrix<f64>, ybar: &DVector<f64>, lambda1: f64) -> Result<DVector<f64>> {
    let gram = m.transpose() * m + DMatrix::identity(m.ncols(), m.ncols()) * lambda1;
    let rhs = m.transpose() * ybar;
    gram.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular normal equations".into()))
}

/// Stacks `[X; sqrt(lambda2) D_1; ...; sqrt(lambda2) D_k]` and `[y; 0; ...; 0]`.
pub fn stacked_system(x: &RealMap, y: &RealMap, distractors: &[RealMap], lambda2: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.rows() * x.cols();
    let blocks = 1 + distractors.len();
    let mut m = DMatrix::zeros(blocks * n, n);
    m.view_mut((0, 0), (n, n)).copy_from(&circulant_2d(x));
    for (i, d) in distractors.iter().enumerate() {
        let block = circulant_2d(d) * lambda2.sqrt();
        m.view_mut(((i + 1) * n, 0), (n, n)).copy_from(&block);
    }
    let mut ybar = DVector::zeros(blocks * n);
    ybar.rows_mut(0, n).copy_from(&to_vector(y));
    (m, ybar)
}

/// Maps a dense prediction vector, indexed by lag `(i, j)`, into the response
/// map layout: the frequency-domain detector reports lag `(i, j)` at
/// `(-i, -j)` relative to the dense row order.
pub fn dense_to_response(pred: &[f64], rows: usize, cols: usize) -> RealMap {
    RealMap::from_fn(rows, cols, |r, c| pred[((rows - r) % rows) * cols + (cols - c) % cols])
}

/// Every strict-or-tied local maximum whose Chebyshev neighbourhood of the
/// given radius contains no larger value, then greedy suppression by an
/// exhaustive all-pairs scan. Returns positions sorted by value descending,
/// row-major on ties.
pub fn brute_force_peaks(map: &RealMap, radius: usize) -> Vec<((usize, usize), f64)> {
    let (rows, cols) = map.shape();
    let mut candidates = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = map[(r, c)];
            let mut is_max = true;
            for rr in 0..rows {
                for cc in 0..cols {
                    let dist = r.abs_diff(rr).max(c.abs_diff(cc));
                    if dist == 0 || dist > radius {
                        continue;
                    }
                    let w = map[(rr, cc)];
                    // Ties go to the earlier cell in row-major order.
                    if w > v || (w == v && (rr, cc) < (r, c)) {
                        is_max = false;
                    }
                }
            }
            if is_max {
                candidates.push(((r, c), v));
            }
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<((usize, usize), f64)> = Vec::new();
    for cand in candidates {
        let clash = kept
            .iter()
            .any(|k| k.0 .0.abs_diff(cand.0 .0).max(k.0 .1.abs_diff(cand.0 .1)) <= radius);
        if !clash {
            kept.push(cand);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dft2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_by_one_circulant_is_input() {
        let m = oracle_circulant(&[3.5]);
        assert_eq!(m.shape(), (1, 1));
        assert_eq!(m[(0, 0)], 3.5);
    }

    #[test]
    fn unit_vector_gives_identity() {
        let mut e0 = vec![0.0; 6];
        e0[0] = 1.0;
        assert_eq!(oracle_circulant(&e0), DMatrix::identity(6, 6));
    }

    #[test]
    fn rows_shift_right() {
        let m = oracle_circulant(&[1.0, 2.0, 3.0]);
        assert_eq!(m.row(1).iter().copied().collect::<Vec<_>>(), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn identity_ridge_returns_target() {
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let w = oracle_ridge(&DMatrix::identity(3, 3), &y, 0.0).unwrap();
        assert!((w - y).amax() < 1e-12);
    }

    #[test]
    fn invertible_square_system_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = DMatrix::from_fn(5, 5, |i, j| {
            rng.random_range(-1.0..1.0) + if i == j { 3.0 } else { 0.0 }
        });
        let y = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let w = oracle_ridge(&m, &y, 0.0).unwrap();
        assert!((&m * w - y).amax() <= 1e-9);
    }

    #[test]
    fn singular_unregularized_system_errors() {
        let m = DMatrix::zeros(3, 3);
        let y = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(oracle_ridge(&m, &y, 0.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn circulant_eigenvalues_are_dft_of_first_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let row: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eig = oracle_circulant(&row).complex_eigenvalues();
        let spectrum = dft2(&RealMap::new(1, row.len(), row.clone()).unwrap());
        let mut unmatched: Vec<Complex64> = spectrum.as_slice().to_vec();
        for e in eig.iter() {
            let (idx, dist) = unmatched
                .iter()
                .enumerate()
                .map(|(i, s)| (i, (s - e).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(dist < 1e-8, "eigenvalue {e} has no DFT partner");
            unmatched.swap_remove(idx);
        }
    }
}
