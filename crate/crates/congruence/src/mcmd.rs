//! Regularized Gram inversion and the closed-form squared-MCMD estimate.
//!
//! Given samples `S = (x_i, y_i)` and `S' = (x'_j, y'_j)` from two conditional
//! laws, the squared Maximum Conditional Mean Discrepancy at a conditioning
//! point `q` is
//!
//! ```text
//! k_X(q)' W K_Y W' k_X(q) - 2 k_X(q)' W K_YY' V' k_X'(q) + k_X'(q)' V K_Y' V' k_X'(q)
//! ```
//!
//! with `W = (K_X + n*lambda*I)^-1` and `V = (K_X' + m*lambda'*I)^-1`. The
//! three sandwiched matrices depend only on the samples, so an evaluator
//! precomputes them once; each query then costs two kernel vectors and three
//! quadratic forms. Inverses go through a Cholesky factorization of the
//! symmetric positive-definite regularized Gram matrix.

use crate::error::{Error, Result};
use crate::kernel::{cross_gram, gram, GramMatrix, KernelSpec};
use ndarray::{s, Array1, Array2, Axis};

/// Paper default for both regularizers.
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Paired draws `(conditioning vector, scalar output)` from one joint law.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    conditioning: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl SampleSet {
    pub fn new(conditioning: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        if conditioning.is_empty() {
            return Err(Error::EmptyInput("sample set"));
        }
        if conditioning.len() != outputs.len() {
            return Err(Error::LengthMismatch {
                left: conditioning.len(),
                right: outputs.len(),
            });
        }
        let dim = conditioning[0].len();
        if dim == 0 {
            return Err(Error::EmptyInput("conditioning vectors"));
        }
        for c in &conditioning {
            if c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
            }
        }
        Ok(SampleSet { conditioning, outputs })
    }

    /// Builds a sample set over scalar conditioning values.
    pub fn from_scalars(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Dimension of the conditioning vectors.
    pub fn dim(&self) -> usize {
        self.conditioning[0].len()
    }

    pub fn conditioning(&self) -> &[Vec<f64>] {
        &self.conditioning
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }
}

/// Kernels and regularizers for one MCMD evaluation.
#[derive(Debug, Clone)]
pub struct McmdConfig {
    pub kernel_x: KernelSpec,
    pub kernel_y: KernelSpec,
    lambda: f64,
    lambda_prime: f64,
}

impl McmdConfig {
    pub fn new(
        kernel_x: KernelSpec,
        kernel_y: KernelSpec,
        lambda: f64,
        lambda_prime: f64,
    ) -> Result<Self> {
        if lambda <= 0.0 || lambda.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if lambda_prime <= 0.0 || lambda_prime.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "lambda_prime must be positive, got {lambda_prime}"
            )));
        }
        Ok(McmdConfig { kernel_x, kernel_y, lambda, lambda_prime })
    }

    /// Both regularizers set to the default 0.1.
    pub fn with_default_lambda(kernel_x: KernelSpec, kernel_y: KernelSpec) -> Self {
        McmdConfig {
            kernel_x,
            kernel_y,
            lambda: DEFAULT_LAMBDA,
            lambda_prime: DEFAULT_LAMBDA,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_prime(&self) -> f64 {
        self.lambda_prime
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
fn cholesky_factor(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l: Array2<f64> = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let dot = {
                let (ri, rj) = (l.row(i), l.row(j));
                ri.slice(s![..j]).dot(&rj.slice(s![..j]))
            };
            if i == j {
                let d = a[[i, i]] - dot;
                if !d.is_finite() || d <= 0.0 {
                    return Err(Error::NotPositiveDefinite);
                }
                l[[i, j]] = d.sqrt();
            } else {
                l[[i, j]] = (a[[i, j]] - dot) / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix by forward substitution on the
/// identity. The result stays lower triangular, so row operations only touch
/// the first `k + 1` columns.
fn invert_lower_triangular(l: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = Array2::eye(n);
    for k in 0..n {
        let pivot = l[[k, k]];
        {
            let mut row_k = x.row_mut(k);
            let row_k = row_k.slice_mut(s![..=k]);
            row_k.into_iter().for_each(|v| *v /= pivot);
        }
        for i in k + 1..n {
            let factor = l[[i, k]];
            if factor == 0.0 {
                continue;
            }
            let (above, mut below) = x.view_mut().split_at(Axis(0), i);
            let src = above.row(k);
            let mut dst = below.row_mut(0);
            for j in 0..=k {
                dst[j] -= factor * src[j];
            }
        }
    }
    x
}

/// `(K + n*lambda*I)^-1` via Cholesky factorization.
///
/// `k` must be the symmetric `n x n` Gram matrix of the sample whose size is
/// `n`; `lambda` is the ridge regularizer.
pub fn regularized_inverse(k: &GramMatrix, lambda: f64, n: usize) -> Result<Array2<f64>> {
    if !k.is_symmetric() || k.nrows() != k.ncols() {
        return Err(Error::InvalidParameter(
            "regularized inverse requires a symmetric Gram matrix".into(),
        ));
    }
    if k.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k.nrows() });
    }
    if lambda <= 0.0 || lambda.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let mut a = k.entries().clone();
    let ridge = n as f64 * lambda;
    for i in 0..n {
        a[[i, i]] += ridge;
    }
    let l = cholesky_factor(&a)?;
    let linv = invert_lower_triangular(&l);
    Ok(linv.t().dot(&linv))
}

/// Precomputed state for evaluating the squared MCMD at many query points.
pub struct McmdEvaluator<'a> {
    kernel_x: KernelSpec,
    s_points: &'a [Vec<f64>],
    sp_points: &'a [Vec<f64>],
    dim: usize,
    within_s: Array2<f64>,  // W K_Y W'
    cross: Array2<f64>,     // W K_YY' V'
    within_sp: Array2<f64>, // V K_Y' V'
}

impl<'a> McmdEvaluator<'a> {
    pub fn new(s: &'a SampleSet, s_prime: &'a SampleSet, config: &McmdConfig) -> Result<Self> {
        if s.dim() != s_prime.dim() {
            return Err(Error::DimensionMismatch { expected: s.dim(), got: s_prime.dim() });
        }
        let n = s.len();
        let m = s_prime.len();

        let ys: Vec<[f64; 1]> = s.outputs().iter().map(|&y| [y]).collect();
        let yps: Vec<[f64; 1]> = s_prime.outputs().iter().map(|&y| [y]).collect();

        let k_x = gram(&config.kernel_x, s.conditioning())?;
        let k_xp = gram(&config.kernel_x, s_prime.conditioning())?;
        let k_y = gram(&config.kernel_y, &ys)?;
        let k_yp = gram(&config.kernel_y, &yps)?;
        let k_yyp = cross_gram(&config.kernel_y, &ys, &yps)?;

        let w = regularized_inverse(&k_x, config.lambda, n)?;
        let v = regularized_inverse(&k_xp, config.lambda_prime, m)?;

        let within_s = w.dot(k_y.entries()).dot(&w.t());
        let cross = w.dot(k_yyp.entries()).dot(&v.t());
        let within_sp = v.dot(k_yp.entries()).dot(&v.t());

        Ok(McmdEvaluator {
            kernel_x: config.kernel_x.clone(),
            s_points: s.conditioning(),
            sp_points: s_prime.conditioning(),
            dim: s.dim(),
            within_s,
            cross,
            within_sp,
        })
    }

    /// Squared MCMD at one query. May be marginally negative from floating
    /// point; callers wanting the (nonnegative) MCMD should clamp.
    pub fn mcmd_sq_at(&self, query: &[f64]) -> Result<f64> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: query.len() });
        }
        let kq = Array1::from_iter(
            self.s_points.iter().map(|p| self.kernel_x.eval_unchecked(p, query)),
        );
        let kqp = Array1::from_iter(
            self.sp_points.iter().map(|p| self.kernel_x.eval_unchecked(p, query)),
        );
        let t1 = kq.dot(&self.within_s.dot(&kq));
        let t2 = kq.dot(&self.cross.dot(&kqp));
        let t3 = kqp.dot(&self.within_sp.dot(&kqp));
        Ok(t1 - 2.0 * t2 + t3)
    }

    /// MCMD profile over a batch of queries: `sqrt(max(0, mcmd_sq))` each.
    ///
    /// Kernel vectors for all queries are assembled as cross-Gram matrices so
    /// the three quadratic forms become three matrix products.
    pub fn profile<Q: AsRef<[f64]> + Sync>(&self, queries: &[Q]) -> Result<Vec<f64>> {
        if queries.is_empty() {
            return Err(Error::EmptyInput("queries"));
        }
        for q in queries {
            if q.as_ref().len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: q.as_ref().len(),
                });
            }
        }
        let kq = cross_gram(&self.kernel_x, self.s_points, queries)?;
        let kqp = cross_gram(&self.kernel_x, self.sp_points, queries)?;
        let kq = kq.entries();
        let kqp = kqp.entries();
        let t1 = (kq * &self.within_s.dot(kq)).sum_axis(Axis(0));
        let t2 = (kq * &self.cross.dot(kqp)).sum_axis(Axis(0));
        let t3 = (kqp * &self.within_sp.dot(kqp)).sum_axis(Axis(0));
        Ok((0..queries.len())
            .map(|i| (t1[i] - 2.0 * t2[i] + t3[i]).max(0.0).sqrt())
            .collect())
    }

}

/// Squared MCMD between two sample sets at a single query point.
pub fn mcmd_sq_at(
    s: &SampleSet,
    s_prime: &SampleSet,
    config: &McmdConfig,
    query: &[f64],
) -> Result<f64> {
    McmdEvaluator::new(s, s_prime, config)?.mcmd_sq_at(query)
}

/// MCMD (clamped square root of the squared estimate) at each query point.
pub fn mcmd_profile<Q: AsRef<[f64]> + Sync>(
    s: &SampleSet,
    s_prime: &SampleSet,
    config: &McmdConfig,
    queries: &[Q],
) -> Result<Vec<f64>> {
    McmdEvaluator::new(s, s_prime, config)?.profile(queries)
}

/// Indices of a uniform draw of `k` out of `n` items without replacement,
/// deterministic for a fixed seed.
pub fn downsample_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("downsample size must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "downsample size {k} exceeds sample size {n}"
        )));
    }
    let mut rng = crate::seeding::seeded_stream(seed, "mcmd/downsample");
    Ok(rand::seq::index::sample(&mut rng, n, k).into_vec())
}

/// Uniformly downsample a sample set to `k` pairs, preserving pairing.
pub fn downsample(s: &SampleSet, k: usize, seed: u64) -> Result<SampleSet> {
    let idx = downsample_indices(s.len(), k, seed)?;
    SampleSet::new(
        idx.iter().map(|&i| s.conditioning()[i].clone()).collect(),
        idx.iter().map(|&i| s.outputs()[i]).collect(),
    )
}
