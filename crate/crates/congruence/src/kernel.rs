//! Kernel functions, Gram matrices, and the output-bandwidth heuristic.

use crate::error::{Error, Result};
use ndarray::Array2;
use rayon::prelude::*;

/// Row count above which Gram construction parallelizes across rows.
/// Entries are identical either way; this only affects wall time.
const PAR_ROWS: usize = 512;

/// A kernel family with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `exp(-gamma * ||u - v||_2^2)`
    Rbf { gamma: f64 },
    /// `exp(-gamma * ||u - v||_1)`
    Laplacian { gamma: f64 },
    /// `(scale * <u, v> + offset)^degree`
    Polynomial { scale: f64, offset: f64, degree: u32 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 || gamma.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "rbf gamma must be positive, got {gamma}"
            )));
        }
        Ok(KernelSpec::Rbf { gamma })
    }

    pub fn laplacian(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 || gamma.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "laplacian gamma must be positive, got {gamma}"
            )));
        }
        Ok(KernelSpec::Laplacian { gamma })
    }

    pub fn polynomial(scale: f64, offset: f64, degree: u32) -> Result<Self> {
        if scale <= 0.0 || scale.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "polynomial scale must be positive, got {scale}"
            )));
        }
        // offset < 0 breaks positive semi-definiteness
        if offset < 0.0 || offset.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "polynomial offset must be nonnegative, got {offset}"
            )));
        }
        if degree < 1 {
            return Err(Error::InvalidParameter(
                "polynomial degree must be at least 1".into(),
            ));
        }
        Ok(KernelSpec::Polynomial { scale, offset, degree })
    }

    /// Default input-space kernel: degree 3, offset 1, scale `1/dim`.
    pub fn polynomial_default(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Self::polynomial(1.0 / dim as f64, 1.0, 3)
    }

    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { gamma } => {
                let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * sq).exp()
            }
            KernelSpec::Laplacian { gamma } => {
                let l1: f64 = u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum();
                (-gamma * l1).exp()
            }
            KernelSpec::Polynomial { scale, offset, degree } => {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                (scale * dot + offset).powi(degree as i32)
            }
        }
    }
}

/// A matrix of pairwise kernel evaluations.
///
/// `symmetric` is true iff the matrix was built from one point set against
/// itself, in which case the upper triangle was computed once and mirrored,
/// so `entries[i][j] == entries[j][i]` bitwise.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: Array2<f64>,
    symmetric: bool,
}

impl GramMatrix {
    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }
}

/// Evaluate a kernel at a pair of equal-dimension points.
pub fn kernel_eval(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    if u.is_empty() {
        return Err(Error::EmptyInput("kernel arguments"));
    }
    Ok(spec.eval_unchecked(u, v))
}

fn check_points<P: AsRef<[f64]>>(points: &[P], what: &'static str) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    let dim = points[0].as_ref().len();
    if dim == 0 {
        return Err(Error::EmptyInput(what));
    }
    for p in points {
        if p.as_ref().len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.as_ref().len() });
        }
    }
    Ok(dim)
}

/// Gram matrix of one point set against itself.
///
/// The upper triangle is computed once and mirrored so the result is exactly
/// symmetric, which the downstream Cholesky factorization relies on.
pub fn gram<P: AsRef<[f64]> + Sync>(spec: &KernelSpec, points: &[P]) -> Result<GramMatrix> {
    check_points(points, "gram points")?;
    let n = points.len();
    let row = |i: usize| -> Vec<f64> {
        let pi = points[i].as_ref();
        (i..n).map(|j| spec.eval_unchecked(pi, points[j].as_ref())).collect()
    };
    let upper: Vec<Vec<f64>> = if n >= PAR_ROWS {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    };
    let mut entries = Array2::zeros((n, n));
    for (i, vals) in upper.iter().enumerate() {
        for (off, &v) in vals.iter().enumerate() {
            let j = i + off;
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    Ok(GramMatrix { entries, symmetric: true })
}

/// Cross-Gram matrix of one point set against another.
pub fn cross_gram<P, Q>(spec: &KernelSpec, a: &[P], b: &[Q]) -> Result<GramMatrix>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    let da = check_points(a, "cross-gram left points")?;
    let db = check_points(b, "cross-gram right points")?;
    if da != db {
        return Err(Error::DimensionMismatch { expected: da, got: db });
    }
    let row = |i: usize| -> Vec<f64> {
        let pi = a[i].as_ref();
        b.iter().map(|q| spec.eval_unchecked(pi, q.as_ref())).collect()
    };
    let rows: Vec<Vec<f64>> = if a.len() * b.len() >= PAR_ROWS * PAR_ROWS {
        (0..a.len()).into_par_iter().map(row).collect()
    } else {
        (0..a.len()).map(row).collect()
    };
    let mut entries = Array2::zeros((a.len(), b.len()));
    for (i, vals) in rows.iter().enumerate() {
        for (j, &v) in vals.iter().enumerate() {
            entries[[i, j]] = v;
        }
    }
    Ok(GramMatrix { entries, symmetric: false })
}

/// Output-kernel bandwidth heuristic: `gamma = 1 / (2 * s^2)` where `s^2` is
/// the unbiased sample variance of the outputs (divisor `n - 1`).
pub fn output_bandwidth(ys: &[f64]) -> Result<f64> {
    if ys.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "output bandwidth needs at least two values, got {}",
            ys.len()
        )));
    }
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let ss: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    let var = ss / (n - 1.0);
    if var <= 0.0 || var.is_nan() {
        return Err(Error::DegenerateOutputs);
    }
    Ok(1.0 / (2.0 * var))
}
