//! Conditional congruence and calibration metrics for probabilistic regressors.
//!
//! A probabilistic regression model maps an input `x` to a predictive
//! distribution over the output. Marginal calibration metrics (ECE over PIT
//! values) cannot tell whether those predictive distributions track the
//! *conditional* law of the data; a model that predicts the marginal of `y`
//! everywhere looks perfectly calibrated. This crate measures the stronger
//! property directly: it embeds the ground-truth sample and a Monte Carlo
//! sample from the model into an RKHS via conditional kernel mean embeddings
//! and evaluates the Maximum Conditional Mean Discrepancy (MCMD) between them
//! at any query input. The square root of that estimate is the Conditional
//! Congruence Error (CCE); its mean over a query set summarizes model fit.
//!
//! Modules: `kernel` (kernel functions, Gram/cross-Gram matrices, output
//! bandwidth), `mcmd` (regularized Gram inversion and the closed-form MCMD
//! estimate), `distributions` (Gaussian/Poisson/NegativeBinomial/DoublePoisson
//! predictive families with exact pmf/cdf/sampling/NLL), `calibration` (PIT
//! values, quantile ECE, reliability curves, mean NLL), `cce` (model sampling
//! and CCE evaluation, plus the reject-option sweep), and `synthgen` (seeded
//! synthetic data-generating processes with paired analytic models).

pub mod calibration;
pub mod cce;
pub mod distributions;
mod error;
pub mod kernel;
pub mod mcmd;
pub mod seeding;
pub mod synthgen;

pub use error::{Error, Result};
