use super::FeatureStack;
use crate::error::{Error, Result};

/// Orthonormal projection onto the leading principal axes of a stack's
/// per-cell feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `in_dim x out_dim`; column `k` is the k-th axis.
    basis: Vec<f64>,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    degenerate: bool,
}

impl PcaProjection {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis_entry(&self, row: usize, col: usize) -> f64 {
        self.basis[row * self.out_dim + col]
    }

    /// Covariance eigenvalues of the kept axes, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Set when the covariance rank fell below `out_dim`; the trailing axes
    /// then span an arbitrary orthonormal completion.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric row-major `n x n` matrix.
/// Returns eigenvalues and the row-major eigenvector matrix (vectors in
/// columns), unsorted.
fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

pub fn fit_pca(stack: &FeatureStack, out_dim: usize) -> Result<PcaProjection> {
    let d = stack.channels();
    if out_dim == 0 || out_dim >= d {
        return Err(Error::invalid(format!(
            "PCA output dimension {out_dim} must lie in 1..{d}"
        )));
    }
    let n = stack.rows() * stack.cols();
    let mean: Vec<f64> = (0..d).map(|c| stack.plane(c).iter().sum::<f64>() / n as f64).collect();
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        let pi = stack.plane(i);
        for j in i..d {
            let pj = stack.plane(j);
            let s: f64 = pi
                .iter()
                .zip(pj)
                .map(|(a, b)| (a - mean[i]) * (b - mean[j]))
                .sum::<f64>()
                / n as f64;
            cov[i * d + j] = s;
            cov[j * d + i] = s;
        }
    }

    let (values, vectors) = symmetric_eigen(cov, d);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let top = values[order[0]].max(0.0);
    let tol = 1e-12 * top.max(f64::MIN_POSITIVE);
    let degenerate = values[order[out_dim - 1]] <= tol;

    let mut basis = vec![0.0; d * out_dim];
    for (k, &col) in order.iter().take(out_dim).enumerate() {
        // Fix the sign so the largest-magnitude component is positive.
        let lead = (0..d)
            .max_by(|&a, &b| vectors[a * d + col].abs().total_cmp(&vectors[b * d + col].abs()))
            .unwrap_or(0);
        let sign = if vectors[lead * d + col] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..d {
            basis[row * out_dim + k] = sign * vectors[row * d + col];
        }
    }
    let eigenvalues = order.iter().take(out_dim).map(|&i| values[i].max(0.0)).collect();

    Ok(PcaProjection {
        in_dim: d,
        out_dim,
        basis,
        mean,
        eigenvalues,
        degenerate,
    })
}

pub fn apply_pca(stack: &FeatureStack, proj: &PcaProjection) -> Result<FeatureStack> {
    if stack.channels() != proj.in_dim {
        return Err(Error::invalid(format!(
            "PCA expects {} channels, stack has {}",
            proj.in_dim,
            stack.channels()
        )));
    }
    let n = stack.rows() * stack.cols();
    let mut data = vec![0.0; n * proj.out_dim];
    for i in 0..proj.in_dim {
        let plane = stack.plane(i);
        let m = proj.mean[i];
        for k in 0..proj.out_dim {
            let b = proj.basis[i * proj.out_dim + k];
            if b == 0.0 {
                continue;
            }
            let out = &mut data[k * n..(k + 1) * n];
            for (o, v) in out.iter_mut().zip(plane) {
                *o += (v - m) * b;
            }
        }
    }
    let mut out = FeatureStack::new(stack.rows(), stack.cols(), proj.out_dim, data, stack.cell_size())?;
    out.set_windowed(stack.is_windowed());
    Ok(out)
}
