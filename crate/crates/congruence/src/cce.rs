//! Conditional Congruence Error: draw a Monte Carlo sample from the model's
//! predictive distributions, then evaluate the MCMD between the ground-truth
//! sample and the model sample at each query input.
//!
//! Queries default to the ground-truth conditioning points, but any vectors
//! work: once the ground-truth sample is fixed, CCE is defined at inputs with
//! no label at all, which is what the reject-option sweep exploits.

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::kernel::{output_bandwidth, KernelSpec};
use crate::mcmd::{McmdConfig, McmdEvaluator, SampleSet, DEFAULT_LAMBDA};

/// Default number of Monte Carlo draws per prediction.
pub const DEFAULT_ELL: usize = 1;

/// One model prediction: the embedded input and the predictive distribution.
#[derive(Debug, Clone)]
pub struct ModelPrediction {
    pub embedding: Vec<f64>,
    pub dist: PredictiveDistribution,
}

/// Per-query CCE values plus their mean.
#[derive(Debug, Clone)]
pub struct CongruenceReport {
    pub queries: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub mean: f64,
}

/// Builds the model sample: each embedding repeated `ell` times, paired with
/// independent draws from its predictive distribution. Deterministic per seed.
pub fn build_model_sample(
    preds: &[ModelPrediction],
    ell: usize,
    seed: u64,
) -> Result<SampleSet> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("model predictions"));
    }
    if ell == 0 {
        return Err(Error::InvalidParameter("ell must be at least 1".into()));
    }
    let dim = preds[0].embedding.len();
    for p in preds {
        if p.embedding.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.embedding.len() });
        }
    }
    let mut rng = crate::seeding::seeded_stream(seed, "cce/model-sample");
    let mut conditioning = Vec::with_capacity(preds.len() * ell);
    let mut outputs = Vec::with_capacity(preds.len() * ell);
    for p in preds {
        for y in p.dist.sample_with_rng(ell, &mut rng) {
            conditioning.push(p.embedding.clone());
            outputs.push(y);
        }
    }
    SampleSet::new(conditioning, outputs)
}

/// MCMD configuration with the standard output-kernel heuristic: RBF with
/// `gamma = 1 / (2 * var(ys))` estimated from the ground-truth outputs, and
/// equal regularizers.
pub fn heuristic_config(
    ground_truth: &SampleSet,
    kernel_x: KernelSpec,
    lambda: f64,
) -> Result<McmdConfig> {
    let gamma_y = output_bandwidth(ground_truth.outputs())?;
    McmdConfig::new(kernel_x, KernelSpec::rbf(gamma_y)?, lambda, lambda)
}

/// Same as [`heuristic_config`] with the default regularizer.
pub fn default_config(ground_truth: &SampleSet, kernel_x: KernelSpec) -> Result<McmdConfig> {
    heuristic_config(ground_truth, kernel_x, DEFAULT_LAMBDA)
}

/// CCE at each query point between the ground-truth sample and a model sample.
pub fn cce_eval(
    ground_truth: &SampleSet,
    model_sample: &SampleSet,
    config: &McmdConfig,
    queries: &[Vec<f64>],
) -> Result<CongruenceReport> {
    let evaluator = McmdEvaluator::new(ground_truth, model_sample, config)?;
    let values = evaluator.profile(queries)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(CongruenceReport { queries: queries.to_vec(), values, mean })
}

/// End-to-end evaluation of model predictions against ground truth. Queries
/// default to the ground-truth conditioning points.
pub fn evaluate_model(
    ground_truth: &SampleSet,
    preds: &[ModelPrediction],
    config: &McmdConfig,
    ell: usize,
    seed: u64,
    queries: Option<&[Vec<f64>]>,
) -> Result<CongruenceReport> {
    let model_sample = build_model_sample(preds, ell, seed)?;
    match queries {
        Some(q) => cce_eval(ground_truth, &model_sample, config, q),
        None => cce_eval(ground_truth, &model_sample, config, ground_truth.conditioning()),
    }
}

/// Retained-subset metrics as the rejection threshold sweeps upward.
#[derive(Debug, Clone)]
pub struct RejectSweepResult {
    pub thresholds: Vec<f64>,
    /// Fraction of points with CCE at or below each threshold; nondecreasing.
    pub retained_fraction: Vec<f64>,
    /// Mean absolute error on each retained subset; NaN when the subset is empty.
    pub mae: Vec<f64>,
    /// Mean NLL on each retained subset; NaN when the subset is empty.
    pub nll: Vec<f64>,
}

/// For each threshold `tau`, keep the points whose CCE is `<= tau` and report
/// the retained fraction, MAE of the point predictions, and mean NLL. Empty
/// subsets yield NaN metrics rather than errors so a sweep can start below
/// the smallest CCE value.
pub fn reject_sweep(
    cce_values: &[f64],
    point_predictions: &[f64],
    dists: &[PredictiveDistribution],
    labels: &[f64],
    thresholds: &[f64],
) -> Result<RejectSweepResult> {
    let n = cce_values.len();
    for len in [point_predictions.len(), dists.len(), labels.len()] {
        if len != n {
            return Err(Error::LengthMismatch { left: n, right: len });
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("reject sweep points"));
    }
    if thresholds.is_empty() {
        return Err(Error::EmptyInput("thresholds"));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("thresholds must be sorted ascending".into()));
    }
    if thresholds[0] < 0.0 {
        return Err(Error::InvalidParameter("thresholds must be nonnegative".into()));
    }

    let mut retained_fraction = Vec::with_capacity(thresholds.len());
    let mut mae = Vec::with_capacity(thresholds.len());
    let mut nll = Vec::with_capacity(thresholds.len());
    for &tau in thresholds {
        let idx: Vec<usize> = (0..n).filter(|&i| cce_values[i] <= tau).collect();
        retained_fraction.push(idx.len() as f64 / n as f64);
        if idx.is_empty() {
            mae.push(f64::NAN);
            nll.push(f64::NAN);
            continue;
        }
        let m = idx.len() as f64;
        mae.push(idx.iter().map(|&i| (point_predictions[i] - labels[i]).abs()).sum::<f64>() / m);
        let mut total = 0.0;
        for &i in &idx {
            total += dists[i].nll(labels[i])?;
        }
        nll.push(total / m);
    }
    Ok(RejectSweepResult {
        thresholds: thresholds.to_vec(),
        retained_fraction,
        mae,
        nll,
    })
}
