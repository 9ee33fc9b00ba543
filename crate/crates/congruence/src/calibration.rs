//! Marginal calibration baselines: PIT values, quantile ECE, reliability
//! curves, and aggregate NLL.
//!
//! The ECE here is the regression variant: PIT realizations `z_i = F_i(y_i)`
//! are compared against `q` nominal confidence levels `p_j = j / (q + 1)`,
//! with empirical coverage `p_hat_j = #{i : z_i <= p_j} / n` and uniform
//! weights. Discrete CDFs feed the PIT as-is (right-continuous steps); no
//! smoothing is applied, so the documented bias of ECE against discrete
//! models is reproduced, not repaired.

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};

/// Default number of confidence levels.
pub const DEFAULT_LEVELS: usize = 99;
/// Default ECE exponent.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Everything `calibration_report` computes for one prediction set.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    /// PIT realizations `F_i(y_i)`.
    pub pit: Vec<f64>,
    /// Nominal confidence levels `p_j`.
    pub levels: Vec<f64>,
    /// Empirical coverage `p_hat_j`.
    pub empirical: Vec<f64>,
    /// Level weights (uniform, `1/q`).
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub ece: f64,
    /// Flagged `f64::INFINITY` when any point has zero density.
    pub mean_nll: f64,
}

/// PIT value `F_i(y_i)` for each (distribution, observation) pair.
pub fn pit_values(dists: &[PredictiveDistribution], ys: &[f64]) -> Result<Vec<f64>> {
    if dists.len() != ys.len() {
        return Err(Error::LengthMismatch { left: dists.len(), right: ys.len() });
    }
    if dists.is_empty() {
        return Err(Error::EmptyInput("pit inputs"));
    }
    Ok(dists.iter().zip(ys).map(|(d, &y)| d.cdf(y)).collect())
}

fn check_pit(pit: &[f64], q: usize) -> Result<()> {
    if pit.is_empty() {
        return Err(Error::EmptyInput("pit values"));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    for &z in pit {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidParameter(format!(
                "pit value {z} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// The `(p_j, p_hat_j)` pairs over the uniform interior level grid.
pub fn reliability_curve(pit: &[f64], q: usize) -> Result<Vec<(f64, f64)>> {
    check_pit(pit, q)?;
    let mut sorted = pit.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok((1..=q)
        .map(|j| {
            let level = j as f64 / (q + 1) as f64;
            let covered = sorted.partition_point(|&z| z <= level);
            (level, covered as f64 / n)
        })
        .collect())
}

/// Expected calibration error `sum_j w_j |p_j - p_hat_j|^alpha` with uniform
/// weights `w_j = 1/q`.
pub fn ece(pit: &[f64], q: usize, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let curve = reliability_curve(pit, q)?;
    let w = 1.0 / q as f64;
    Ok(curve
        .iter()
        .map(|&(p, p_hat)| w * (p - p_hat).abs().powf(alpha))
        .sum())
}

/// Mean NLL over points; any zero-density point makes the result infinite.
pub fn mean_nll(dists: &[PredictiveDistribution], ys: &[f64]) -> Result<f64> {
    if dists.len() != ys.len() {
        return Err(Error::LengthMismatch { left: dists.len(), right: ys.len() });
    }
    if dists.is_empty() {
        return Err(Error::EmptyInput("nll inputs"));
    }
    let mut total = 0.0;
    for (d, &y) in dists.iter().zip(ys) {
        total += d.nll(y)?;
    }
    Ok(total / dists.len() as f64)
}

/// Full calibration report for one prediction set.
pub fn calibration_report(
    dists: &[PredictiveDistribution],
    ys: &[f64],
    q: usize,
    alpha: f64,
) -> Result<CalibrationReport> {
    let pit = pit_values(dists, ys)?;
    let curve = reliability_curve(&pit, q)?;
    let ece = ece(&pit, q, alpha)?;
    let mean_nll = mean_nll(dists, ys)?;
    Ok(CalibrationReport {
        pit,
        levels: curve.iter().map(|&(p, _)| p).collect(),
        empirical: curve.iter().map(|&(_, e)| e).collect(),
        weights: vec![1.0 / q as f64; q],
        alpha,
        ece,
        mean_nll,
    })
}
