//! Seeded generators for every synthetic data-generating process used in the
//! desk-scale experiments, with paired analytic models (congruent and
//! deliberately misspecified).
//!
//! Every generator is deterministic per seed: a master ChaCha stream drawn
//! from the seed hands out sub-seeds in a fixed order, so adding draws in one
//! place never perturbs another.

use crate::cce::ModelPrediction;
use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::mcmd::SampleSet;
use crate::seeding::seeded_stream;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::str::FromStr;

/// Draws from one data-generating process, with identity embeddings.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub dgp_name: String,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// The dataset as a sample set (identity embedding).
    pub fn sample_set(&self) -> Result<SampleSet> {
        SampleSet::new(self.xs.clone(), self.ys.clone())
    }
}

/// A model realized as one predictive distribution per dataset point.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub dists: Vec<PredictiveDistribution>,
}

impl ModelSpec {
    /// Pairs each distribution with its conditioning vector.
    pub fn predictions(&self, xs: &[Vec<f64>]) -> Result<Vec<ModelPrediction>> {
        if xs.len() != self.dists.len() {
            return Err(Error::LengthMismatch { left: xs.len(), right: self.dists.len() });
        }
        Ok(xs
            .iter()
            .zip(&self.dists)
            .map(|(x, d)| ModelPrediction { embedding: x.clone(), dist: d.clone() })
            .collect())
    }
}

fn require_at_least(n: usize, min: usize, what: &'static str) -> Result<()> {
    if n < min {
        return Err(Error::InvalidParameter(format!(
            "{what} needs at least {min} points, got {n}"
        )));
    }
    Ok(())
}

fn normal_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * rng.sample::<f64, _>(StandardNormal)
}

/// `X ~ N(0,1)`, `Y|X ~ N(alpha*X, 1)`, plus the congruent per-point model
/// `N(alpha*x, 1)` and the input-blind marginal model `N(0, 1 + alpha^2)`.
pub fn gen_marginal_flaw(
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<(LabeledDataset, ModelSpec, ModelSpec)> {
    require_at_least(n, 2, "marginal-flaw dataset")?;
    let mut rng = seeded_stream(seed, "synthgen/marginal-flaw");
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![normal_draw(&mut rng, 0.0, 1.0)]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| normal_draw(&mut rng, alpha * x[0], 1.0)).collect();

    let congruent = ModelSpec {
        name: "congruent".into(),
        dists: xs
            .iter()
            .map(|x| PredictiveDistribution::gaussian(alpha * x[0], 1.0))
            .collect::<Result<_>>()?,
    };
    let marginal_var = 1.0 + alpha * alpha;
    let marginal = ModelSpec {
        name: "marginal".into(),
        dists: xs
            .iter()
            .map(|_| PredictiveDistribution::gaussian(0.0, marginal_var))
            .collect::<Result<_>>()?,
    };
    let dataset = LabeledDataset { xs, ys, dgp_name: "marginal-flaw".into(), seed };
    Ok((dataset, congruent, marginal))
}

/// One dataset plus its exactly specified model.
#[derive(Debug, Clone)]
pub struct FamilyCase {
    pub dataset: LabeledDataset,
    pub model: ModelSpec,
}

/// Four DGPs over `X ~ Uniform(1, 10)` with identical first and second
/// moments per point: `Gaussian(X, X)`, `Poisson(X)`, a moment-matched
/// Negative Binomial with variance `X(1 + epsilon)`, and `DoublePoisson(X, 1)`.
/// Each model is the exact DGP.
pub fn gen_four_family(n: usize, epsilon: f64, seed: u64) -> Result<Vec<FamilyCase>> {
    require_at_least(n, 2, "four-family dataset")?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let families = ["gaussian", "poisson", "negbinom", "doublepoisson"];
    let mut cases = Vec::with_capacity(families.len());
    for family in families {
        let mut rng = seeded_stream(seed, &format!("synthgen/four-family/{family}"));
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(1.0..10.0)]).collect();
        let dists: Vec<PredictiveDistribution> = xs
            .iter()
            .map(|x| {
                let x = x[0];
                match family {
                    "gaussian" => PredictiveDistribution::gaussian(x, x),
                    "poisson" => PredictiveDistribution::poisson(x),
                    "negbinom" => {
                        PredictiveDistribution::nb_from_moments(x, x * (1.0 + epsilon))
                    }
                    _ => PredictiveDistribution::double_poisson(x, 1.0),
                }
            })
            .collect::<Result<_>>()?;
        let ys: Vec<f64> = dists.iter().map(|d| d.sample_with_rng(1, &mut rng)[0]).collect();
        cases.push(FamilyCase {
            dataset: LabeledDataset {
                xs,
                ys,
                dgp_name: format!("four-family/{family}"),
                seed,
            },
            model: ModelSpec { name: family.into(), dists },
        });
    }
    Ok(cases)
}

/// Conditional mean of the reject-option DGP: `x cos^2(x) - sqrt(x + 3)`.
pub fn reject_conditional_mean(x: f64) -> f64 {
    let c = x.cos();
    x * c * c - (x.abs() + 3.0).sqrt()
}

/// Conditional variance of the reject-option DGP: `(2|2 - x| + 1) / 8`.
pub fn reject_conditional_variance(x: f64) -> f64 {
    (2.0 * (2.0 - x).abs() + 1.0) / 8.0
}

/// `X ~ Uniform(0, 2*pi)`, `Y|X` Gaussian with the reject-option mean and
/// variance profiles above.
pub fn gen_reject_dgp(n: usize, seed: u64) -> Result<LabeledDataset> {
    require_at_least(n, 2, "reject dataset")?;
    let mut rng = seeded_stream(seed, "synthgen/reject");
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..2.0 * PI)]).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| {
            let m = reject_conditional_mean(x[0]);
            let sd = reject_conditional_variance(x[0]).sqrt();
            normal_draw(&mut rng, m, sd)
        })
        .collect();
    Ok(LabeledDataset { xs, ys, dgp_name: "reject".into(), seed })
}

/// Input value where the reject stand-in model stops tracking the mean.
pub const REJECT_SATURATION_POINT: f64 = 4.5;

/// The deliberately misspecified model for the reject-option experiment: it
/// carries the true conditional variance and tracks the true conditional mean
/// up to [`REJECT_SATURATION_POINT`], beyond which its mean saturates.
pub fn reject_stand_in_model(xs: &[Vec<f64>]) -> Result<ModelSpec> {
    let dists: Vec<PredictiveDistribution> = xs
        .iter()
        .map(|x| {
            let clipped = x[0].min(REJECT_SATURATION_POINT);
            PredictiveDistribution::gaussian(
                reject_conditional_mean(clipped),
                reject_conditional_variance(x[0]),
            )
        })
        .collect::<Result<_>>()?;
    Ok(ModelSpec { name: "saturating-gaussian".into(), dists })
}

/// The fixed hyperparameter-study pair: ground `Y|X ~ N(cos x, 1/4)` against
/// comparison `Y'|X' ~ N(x' - 5, 1/4)`, both with `X ~ Uniform(0, 2*pi)`.
pub fn gen_hyperparam_pair(n: usize, m: usize, seed: u64) -> Result<(SampleSet, SampleSet)> {
    require_at_least(n, 2, "hyperparameter ground set")?;
    require_at_least(m, 2, "hyperparameter comparison set")?;
    let mut rng = seeded_stream(seed, "synthgen/hyperparam/ground");
    let ground = {
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| normal_draw(&mut rng, x.cos(), 0.5)).collect();
        SampleSet::from_scalars(&xs, &ys)?
    };
    let mut rng = seeded_stream(seed, "synthgen/hyperparam/comparison");
    let comparison = {
        let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| normal_draw(&mut rng, x - 5.0, 0.5)).collect();
        SampleSet::from_scalars(&xs, &ys)?
    };
    Ok((ground, comparison))
}

/// How the comparison law deviates from the ground law in the MCMD study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Deviation {
    Same,
    SameMeanLowerVar,
    SameMeanHigherVar,
    DiffMeanLowerVar,
    DiffMeanHigherVar,
    DiffRelationship,
}

impl Deviation {
    pub const ALL: [Deviation; 6] = [
        Deviation::Same,
        Deviation::SameMeanLowerVar,
        Deviation::SameMeanHigherVar,
        Deviation::DiffMeanLowerVar,
        Deviation::DiffMeanHigherVar,
        Deviation::DiffRelationship,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Deviation::Same => "same",
            Deviation::SameMeanLowerVar => "same-mean-lower-var",
            Deviation::SameMeanHigherVar => "same-mean-higher-var",
            Deviation::DiffMeanLowerVar => "diff-mean-lower-var",
            Deviation::DiffMeanHigherVar => "diff-mean-higher-var",
            Deviation::DiffRelationship => "diff-relationship",
        }
    }
}

impl FromStr for Deviation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Deviation::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario: {s}")))
    }
}

/// Noise structure of the ground law in the MCMD study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseProfile {
    Heteroscedastic,
    Homoscedastic,
}

impl NoiseProfile {
    pub const ALL: [NoiseProfile; 2] = [NoiseProfile::Heteroscedastic, NoiseProfile::Homoscedastic];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseProfile::Heteroscedastic => "heteroscedastic",
            NoiseProfile::Homoscedastic => "homoscedastic",
        }
    }

    fn sd(&self, x: f64) -> f64 {
        match self {
            NoiseProfile::Heteroscedastic => 0.2 + 0.2 * x,
            NoiseProfile::Homoscedastic => 0.5,
        }
    }
}

impl FromStr for NoiseProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown noise profile: {s}")))
    }
}

/// One scenario of the MCMD behavior study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StudyScenario {
    pub noise: NoiseProfile,
    pub deviation: Deviation,
}

/// Ground set of `n` pairs from `Y|X ~ N(sin x, sd(x)^2)` and a comparison
/// set of `m` pairs whose mean/spread deviate per the scenario: "lower" and
/// "higher" variance scale the ground sd by 0.5 and 2, "different mean" adds
/// 1.5, and "different relationship" flips the mean to `-sin x`.
pub fn gen_mcmd_study(
    scenario: StudyScenario,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(SampleSet, SampleSet)> {
    require_at_least(n, 2, "study ground set")?;
    require_at_least(m, 2, "study comparison set")?;
    let base = scenario.noise;
    let mut rng = seeded_stream(seed, &format!("synthgen/mcmd-study/ground/{}", base.name()));
    let ground = {
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| normal_draw(&mut rng, x.sin(), base.sd(x)))
            .collect();
        SampleSet::from_scalars(&xs, &ys)?
    };

    let (mean_shift, sd_scale, flip) = match scenario.deviation {
        Deviation::Same => (0.0, 1.0, false),
        Deviation::SameMeanLowerVar => (0.0, 0.5, false),
        Deviation::SameMeanHigherVar => (0.0, 2.0, false),
        Deviation::DiffMeanLowerVar => (1.5, 0.5, false),
        Deviation::DiffMeanHigherVar => (1.5, 2.0, false),
        Deviation::DiffRelationship => (0.0, 1.0, true),
    };
    let mut rng = seeded_stream(seed, &format!("synthgen/mcmd-study/comparison/{}", base.name()));
    let comparison = {
        let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let mean = if flip { -x.sin() } else { x.sin() + mean_shift };
                normal_draw(&mut rng, mean, base.sd(x) * sd_scale)
            })
            .collect();
        SampleSet::from_scalars(&xs, &ys)?
    };
    Ok((ground, comparison))
}

/// Dispersion-profile mean: `10 - 8 sin(x)`, so counts are low below `pi`
/// and high above it.
pub fn dispersion_mu(x: f64) -> f64 {
    10.0 - 8.0 * x.sin()
}

/// Dispersion-profile Double Poisson dispersion: over-dispersed (`phi = 0.5`)
/// at the low counts below `pi`, severely under-dispersed (`phi = 6`) at the
/// high counts above.
pub fn dispersion_phi(x: f64) -> f64 {
    if x < PI {
        0.5
    } else {
        6.0
    }
}

/// Count-regression DGP with region-dependent dispersion, plus four candidate
/// models: the exact Double Poisson, a moment-matched Gaussian, a Poisson with
/// the true mean, and a Negative Binomial that moment-matches where the data
/// are over-dispersed and falls back to Poisson where they are not.
pub fn gen_dispersion_profile(n: usize, seed: u64) -> Result<(LabeledDataset, Vec<ModelSpec>)> {
    require_at_least(n, 2, "dispersion dataset")?;
    let mut rng = seeded_stream(seed, "synthgen/dispersion");
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..2.0 * PI)]).collect();
    let dgp: Vec<PredictiveDistribution> = xs
        .iter()
        .map(|x| PredictiveDistribution::double_poisson(dispersion_mu(x[0]), dispersion_phi(x[0])))
        .collect::<Result<_>>()?;
    let ys: Vec<f64> = dgp.iter().map(|d| d.sample_with_rng(1, &mut rng)[0]).collect();

    let gaussian: Vec<PredictiveDistribution> = xs
        .iter()
        .map(|x| {
            let mu = dispersion_mu(x[0]);
            PredictiveDistribution::gaussian(mu, mu / dispersion_phi(x[0]))
        })
        .collect::<Result<_>>()?;
    let poisson: Vec<PredictiveDistribution> = xs
        .iter()
        .map(|x| PredictiveDistribution::poisson(dispersion_mu(x[0])))
        .collect::<Result<_>>()?;
    let negbinom: Vec<PredictiveDistribution> = xs
        .iter()
        .map(|x| {
            let mu = dispersion_mu(x[0]);
            let var = mu / dispersion_phi(x[0]);
            if var > mu {
                PredictiveDistribution::nb_from_moments(mu, var)
            } else {
                PredictiveDistribution::poisson(mu)
            }
        })
        .collect::<Result<_>>()?;

    let models = vec![
        ModelSpec { name: "doublepoisson".into(), dists: dgp },
        ModelSpec { name: "gaussian".into(), dists: gaussian },
        ModelSpec { name: "poisson".into(), dists: poisson },
        ModelSpec { name: "negbinom".into(), dists: negbinom },
    ];
    let dataset = LabeledDataset { xs, ys, dgp_name: "dispersion-profile".into(), seed };
    Ok((dataset, models))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{ece, pit_values};
    use crate::cce::{default_config, evaluate_model};
    use crate::kernel::KernelSpec;
    use crate::mcmd::{mcmd_profile, McmdConfig};

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn variance(v: &[f64]) -> f64 {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    }

    fn grid(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![2.0 * PI * i as f64 / (n - 1) as f64]).collect()
    }

    #[test]
    fn marginal_flaw_matches_derived_marginal() {
        let (ds, congruent, marginal) = gen_marginal_flaw(50_000, 3.0, 0).unwrap();
        assert!((variance(&ds.ys) - 10.0).abs() < 0.3, "var {}", variance(&ds.ys));
        match &marginal.dists[0] {
            PredictiveDistribution::Gaussian { mu, sigma2 } => {
                assert_eq!(*mu, 0.0);
                assert_eq!(*sigma2, 10.0);
            }
            _ => panic!("marginal model must be gaussian"),
        }
        assert!(marginal.dists.iter().all(|d| d == &marginal.dists[0]));
        assert_eq!(congruent.dists.len(), ds.len());
    }

    #[test]
    fn marginal_flaw_alpha_zero_models_coincide() {
        let n = 300;
        let mut diffs = Vec::new();
        for trial in 0..5 {
            let (ds, congruent, marginal) = gen_marginal_flaw(n, 0.0, 100 + trial).unwrap();
            assert_eq!(congruent.dists, marginal.dists);
            let gt = ds.sample_set().unwrap();
            let config = default_config(&gt, KernelSpec::rbf(0.5).unwrap()).unwrap();
            let a = evaluate_model(&gt, &congruent.predictions(&ds.xs).unwrap(), &config, 1, 7, None)
                .unwrap()
                .mean;
            let b = evaluate_model(&gt, &marginal.predictions(&ds.xs).unwrap(), &config, 1, 8, None)
                .unwrap()
                .mean;
            diffs.push(a - b);
        }
        let sd = variance(&diffs).sqrt();
        assert!(
            mean(&diffs).abs() < 2.0 * sd.max(1e-6),
            "diffs {diffs:?}"
        );
    }

    #[test]
    fn four_family_moments_and_sizes() {
        let cases = gen_four_family(2000, 1e-3, 0).unwrap();
        assert_eq!(cases.len(), 4);
        for case in &cases {
            assert_eq!(case.dataset.len(), 2000);
            let xbar = mean(&case.dataset.xs.iter().map(|x| x[0]).collect::<Vec<_>>());
            let ybar = mean(&case.dataset.ys);
            let sd = variance(&case.dataset.ys).sqrt();
            let tol = 2.0 * sd / (case.dataset.len() as f64).sqrt();
            assert!(
                (ybar - xbar).abs() < tol,
                "{}: ybar {ybar} vs xbar {xbar} (tol {tol})",
                case.model.name
            );
        }
    }

    #[test]
    fn four_family_gaussian_is_marginally_calibrated() {
        let cases = gen_four_family(2000, 1e-3, 0).unwrap();
        let gaussian = &cases[0];
        assert_eq!(gaussian.model.name, "gaussian");
        let pit = pit_values(&gaussian.model.dists, &gaussian.dataset.ys).unwrap();
        assert!(ece(&pit, 99, 1.0).unwrap() < 0.02);
    }

    #[test]
    fn reject_dgp_hand_values_and_window_mean() {
        assert!((reject_conditional_variance(2.0) - 0.125).abs() < 1e-15);
        assert!((reject_conditional_mean(0.0) + 3.0f64.sqrt()).abs() < 1e-15);

        let ds = gen_reject_dgp(100_000, 0).unwrap();
        let window: Vec<f64> = ds
            .xs
            .iter()
            .zip(&ds.ys)
            .filter(|(x, _)| (x[0] - PI).abs() < 0.1)
            .map(|(_, &y)| y)
            .collect();
        assert!(window.len() > 500);
        let want = reject_conditional_mean(PI);
        let se = (variance(&window) / window.len() as f64).sqrt();
        let got = mean(&window);
        // window width adds a small smearing term on top of the standard error
        assert!((got - want).abs() < 3.0 * se + 0.05, "{got} vs {want}");
    }

    #[test]
    fn hyperparam_pair_ys_track_their_means() {
        let (ground, _) = gen_hyperparam_pair(1000, 500, 0).unwrap();
        for (x, &y) in ground.conditioning().iter().zip(ground.outputs()) {
            assert!((y - x[0].cos()).abs() < 5.0 * 0.5);
        }
    }

    #[test]
    fn hyperparam_pair_is_distribution_distinct() {
        let (ground, comparison) = gen_hyperparam_pair(300, 200, 0).unwrap();
        let config = default_config(&ground, KernelSpec::rbf(0.5).unwrap()).unwrap();
        let profile = mcmd_profile(&ground, &comparison, &config, &grid(100)).unwrap();
        assert!(mean(&profile) > 0.1, "mean mcmd {}", mean(&profile));
    }

    #[test]
    fn larger_lambda_smooths_the_profile_toward_zero() {
        let (ground, comparison) = gen_hyperparam_pair(300, 200, 0).unwrap();
        let queries = grid(100);
        let gamma_y = crate::kernel::output_bandwidth(ground.outputs()).unwrap();
        let mut means = Vec::new();
        for lambda in [0.01, 1.0] {
            let config = McmdConfig::new(
                KernelSpec::rbf(0.5).unwrap(),
                KernelSpec::rbf(gamma_y).unwrap(),
                lambda,
                lambda,
            )
            .unwrap();
            means.push(mean(&mcmd_profile(&ground, &comparison, &config, &queries).unwrap()));
        }
        assert!(means[1] < means[0], "lambda smoothing failed: {means:?}");
    }

    #[test]
    fn mcmd_study_scenarios_are_all_constructible() {
        for noise in NoiseProfile::ALL {
            for deviation in Deviation::ALL {
                let (g, c) =
                    gen_mcmd_study(StudyScenario { noise, deviation }, 50, 30, 1).unwrap();
                assert_eq!(g.len(), 50);
                assert_eq!(c.len(), 30);
            }
        }
        assert!("same".parse::<Deviation>().is_ok());
        assert!("bogus".parse::<Deviation>().is_err());
        assert!("homoscedastic".parse::<NoiseProfile>().is_ok());
    }

    #[test]
    fn dispersion_profile_models_are_aligned() {
        let (ds, models) = gen_dispersion_profile(200, 0).unwrap();
        assert_eq!(models.len(), 4);
        for m in &models {
            assert_eq!(m.dists.len(), ds.len());
        }
        // NB falls back to Poisson exactly in the under-dispersed region
        let negbinom = models.iter().find(|m| m.name == "negbinom").unwrap();
        for (x, d) in ds.xs.iter().zip(&negbinom.dists) {
            if x[0] < PI {
                assert!(matches!(d, PredictiveDistribution::NegativeBinomial { .. }));
            } else {
                assert!(matches!(d, PredictiveDistribution::Poisson { .. }));
            }
        }
    }

    #[test]
    fn dispersion_profile_poisson_fails_hardest_in_underdispersed_region() {
        let (ds, models) = gen_dispersion_profile(500, 0).unwrap();
        let gt = ds.sample_set().unwrap();
        let config = default_config(&gt, KernelSpec::rbf(0.5).unwrap()).unwrap();
        let mut means = std::collections::HashMap::new();
        let mut poisson_regions = (0.0, 0.0);
        for (i, m) in models.iter().enumerate() {
            let report = evaluate_model(
                &gt,
                &m.predictions(&ds.xs).unwrap(),
                &config,
                1,
                1000 + i as u64,
                None,
            )
            .unwrap();
            if m.name == "poisson" {
                let (mut low, mut high) = (Vec::new(), Vec::new());
                for (x, &v) in ds.xs.iter().zip(&report.values) {
                    if x[0] < PI {
                        low.push(v);
                    } else {
                        high.push(v);
                    }
                }
                poisson_regions = (mean(&low), mean(&high));
            }
            means.insert(m.name.clone(), report.mean);
        }
        assert!(
            means["doublepoisson"] < means["poisson"],
            "exact DGP should beat the equidispersed model: {means:?}"
        );
        assert!(
            poisson_regions.1 > poisson_regions.0,
            "poisson should struggle most above pi: {poisson_regions:?}"
        );
    }

    #[test]
    fn generator_moments_match_their_dgps() {
        // dispersion profile: E[Y] = E[mu(X)] = 10 over Uniform(0, 2*pi)
        let (ds, _) = gen_dispersion_profile(50_000, 0).unwrap();
        let se = (variance(&ds.ys) / ds.len() as f64).sqrt();
        assert!((mean(&ds.ys) - 10.0).abs() < 3.0 * se, "dispersion mean {}", mean(&ds.ys));

        // study ground law: E[Y] = E[sin X] = 0 for either noise profile
        for noise in NoiseProfile::ALL {
            let scenario = StudyScenario { noise, deviation: Deviation::Same };
            let (ground, _) = gen_mcmd_study(scenario, 50_000, 2, 1).unwrap();
            let ys = ground.outputs();
            let se = (variance(ys) / ys.len() as f64).sqrt();
            assert!(mean(ys).abs() < 3.0 * se, "{}: mean {}", noise.name(), mean(ys));
        }

        // hyperparameter pair: comparison mean is E[X] - 5 = pi - 5
        let (_, comparison) = gen_hyperparam_pair(2, 50_000, 2).unwrap();
        let ys = comparison.outputs();
        let se = (variance(ys) / ys.len() as f64).sqrt();
        assert!((mean(ys) - (PI - 5.0)).abs() < 3.0 * se);
    }

    #[test]
    fn generators_are_deterministic_per_seed() {
        let (a, _, _) = gen_marginal_flaw(50, 3.0, 9).unwrap();
        let (b, _, _) = gen_marginal_flaw(50, 3.0, 9).unwrap();
        assert_eq!(a.ys, b.ys);
        let (c, _, _) = gen_marginal_flaw(50, 3.0, 10).unwrap();
        assert_ne!(a.ys, c.ys);

        let (d, _) = gen_dispersion_profile(50, 4).unwrap();
        let (e, _) = gen_dispersion_profile(50, 4).unwrap();
        assert_eq!(d.ys, e.ys);
    }
}
