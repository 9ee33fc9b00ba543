//! Named desk-scale experiment runners. Each writes CSV curve data plus a
//! `summary.json` (validated by `schemas/experiment-summary.schema.json`)
//! into its output directory and returns the summary for in-process callers.
//!
//! One-dimensional synthetic inputs use an RBF input kernel; the MCMD behavior
//! study fixes `gamma_x = 1`, the hyperparameter-pair studies use their stated
//! kernels, and everything else uses `gamma_x = 0.5`. The output kernel is
//! always the RBF bandwidth heuristic unless an experiment sweeps it.

use crate::commands::synthetic_config;
use crate::io::{fmt_float_csv, fmt_float_json, json_string, write_csv};
use crate::{CliError, CliResult};
use clap::ValueEnum;
use congruence::calibration::calibration_report;
use congruence::cce::{build_model_sample, cce_eval, evaluate_model, reject_sweep};
use congruence::kernel::{output_bandwidth, KernelSpec};
use congruence::mcmd::{downsample_indices, mcmd_profile, McmdConfig, SampleSet};
use congruence::synthgen::{
    gen_dispersion_profile, gen_four_family, gen_hyperparam_pair, gen_marginal_flaw,
    gen_mcmd_study, gen_reject_dgp, reject_stand_in_model, Deviation, NoiseProfile,
    StudyScenario,
};
use congruence::seeding::seeded_stream;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    Fig1Marginal,
    FourFamily,
    LambdaSweep,
    GammaSweep,
    KernelCompare,
    EllSweep,
    McmdStudy,
    DispersionProfile,
    Reject,
    DownsampleStability,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 10] = [
        ExperimentName::Fig1Marginal,
        ExperimentName::FourFamily,
        ExperimentName::LambdaSweep,
        ExperimentName::GammaSweep,
        ExperimentName::KernelCompare,
        ExperimentName::EllSweep,
        ExperimentName::McmdStudy,
        ExperimentName::DispersionProfile,
        ExperimentName::Reject,
        ExperimentName::DownsampleStability,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentName::Fig1Marginal => "fig1-marginal",
            ExperimentName::FourFamily => "four-family",
            ExperimentName::LambdaSweep => "lambda-sweep",
            ExperimentName::GammaSweep => "gamma-sweep",
            ExperimentName::KernelCompare => "kernel-compare",
            ExperimentName::EllSweep => "ell-sweep",
            ExperimentName::McmdStudy => "mcmd-study",
            ExperimentName::DispersionProfile => "dispersion-profile",
            ExperimentName::Reject => "reject",
            ExperimentName::DownsampleStability => "downsample-stability",
        }
    }
}

#[derive(Debug, Clone)]
pub enum MetricValue {
    Num(f64),
    Text(String),
}

/// Ordered metric map written to `summary.json`.
#[derive(Debug, Clone)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    metrics: Vec<(String, MetricValue)>,
}

impl Summary {
    fn new(experiment: &str, seed: u64) -> Self {
        Summary { experiment: experiment.to_string(), seed, metrics: Vec::new() }
    }

    fn push_num(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.push((key.into(), MetricValue::Num(v)));
    }

    fn push_text(&mut self, key: impl Into<String>, v: impl Into<String>) {
        self.metrics.push((key.into(), MetricValue::Text(v.into())));
    }

    pub fn num(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).and_then(|(_, v)| match v {
            MetricValue::Num(x) => Some(*x),
            MetricValue::Text(_) => None,
        })
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.metrics.iter().find(|(k, _)| k == key).and_then(|(_, v)| match v {
            MetricValue::Text(s) => Some(s.as_str()),
            MetricValue::Num(_) => None,
        })
    }

    pub fn to_json(&self) -> String {
        let body: Vec<String> = self
            .metrics
            .iter()
            .map(|(k, v)| {
                let value = match v {
                    MetricValue::Num(x) => fmt_float_json(*x),
                    MetricValue::Text(s) => json_string(s),
                };
                format!("{}:{}", json_string(k), value)
            })
            .collect();
        format!(
            "{{\"experiment\":{},\"seed\":{},\"metrics\":{{{}}}}}",
            json_string(&self.experiment),
            self.seed,
            body.join(",")
        )
    }
}

/// Tunables shared by all experiments; unset values fall back to each
/// experiment's default size.
#[derive(Debug, Clone)]
pub struct ExperimentParams {
    pub seed: u64,
    pub out: PathBuf,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub trials: Option<usize>,
    pub alpha: f64,
    pub epsilon: f64,
}

impl ExperimentParams {
    pub fn new(seed: u64, out: impl Into<PathBuf>) -> Self {
        ExperimentParams {
            seed,
            out: out.into(),
            n: None,
            m: None,
            trials: None,
            alpha: 3.0,
            epsilon: 1e-3,
        }
    }
}

/// Deterministic sub-seed stream for an experiment run.
struct SubSeeds(ChaCha8Rng);

impl SubSeeds {
    fn new(seed: u64, experiment: &str) -> Self {
        SubSeeds(seeded_stream(seed, &format!("experiment/{experiment}")))
    }

    fn next(&mut self) -> u64 {
        self.0.next_u64()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn grid_1d(lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| vec![lo + (hi - lo) * i as f64 / (count - 1) as f64])
        .collect()
}

/// Rows `(x, col_1(x), ..., col_k(x))` sorted by x, formatted for CSV.
fn profile_rows(xs: &[Vec<f64>], columns: &[&[f64]]) -> Vec<Vec<String>> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a][0].total_cmp(&xs[b][0]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|i| {
            let mut row = vec![fmt_float_csv(xs[i][0])];
            row.extend(columns.iter().map(|c| fmt_float_csv(c[i])));
            row
        })
        .collect()
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {}", dir.display(), e)))
}

pub fn run_experiment(name: ExperimentName, params: &ExperimentParams) -> CliResult<Summary> {
    ensure_dir(&params.out)?;
    let mut summary = Summary::new(name.name(), params.seed);
    match name {
        ExperimentName::Fig1Marginal => fig1_marginal(params, &mut summary)?,
        ExperimentName::FourFamily => four_family(params, &mut summary)?,
        ExperimentName::LambdaSweep => lambda_sweep(params, &mut summary)?,
        ExperimentName::GammaSweep => gamma_sweep(params, &mut summary)?,
        ExperimentName::KernelCompare => kernel_compare(params, &mut summary)?,
        ExperimentName::EllSweep => ell_sweep(params, &mut summary)?,
        ExperimentName::McmdStudy => mcmd_study(params, &mut summary)?,
        ExperimentName::DispersionProfile => dispersion_profile(params, &mut summary)?,
        ExperimentName::Reject => reject(params, &mut summary)?,
        ExperimentName::DownsampleStability => downsample_stability(params, &mut summary)?,
    }
    fs::write(params.out.join("summary.json"), summary.to_json() + "\n")?;
    Ok(summary)
}

/// Marginal-flaw reproduction: an input-blind model with the correct marginal
/// looks calibrated under ECE while its mean CCE gives it away.
fn fig1_marginal(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(2000);
    let (ds, congruent, marginal) = gen_marginal_flaw(n, p.alpha, p.seed)?;
    let gt = ds.sample_set()?;
    let config = synthetic_config(&gt, 0.5, 0.1)?;
    let mut seeds = SubSeeds::new(p.seed, "fig1-marginal");

    let mut profiles: Vec<Vec<f64>> = Vec::new();
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut means = Vec::new();
    let mut levels = Vec::new();
    for model in [&congruent, &marginal] {
        let report =
            evaluate_model(&gt, &model.predictions(&ds.xs)?, &config, 1, seeds.next(), None)?;
        let cal = calibration_report(&model.dists, &ds.ys, 99, 1.0)?;
        summary.push_num(format!("ece_{}", model.name), cal.ece);
        summary.push_num(format!("mean_nll_{}", model.name), cal.mean_nll);
        summary.push_num(format!("mean_cce_{}", model.name), report.mean);
        means.push(report.mean);
        profiles.push(report.values);
        levels = cal.levels.clone();
        curves.push(cal.empirical);
    }
    summary.push_num("cce_ratio", means[1] / means[0]);

    write_csv(
        &p.out.join("cce_profile.csv"),
        &["x", "cce_congruent", "cce_marginal"],
        &profile_rows(&ds.xs, &[&profiles[0], &profiles[1]]),
    )?;
    let rows: Vec<Vec<String>> = levels
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            vec![fmt_float_csv(l), fmt_float_csv(curves[0][j]), fmt_float_csv(curves[1][j])]
        })
        .collect();
    write_csv(
        &p.out.join("reliability.csv"),
        &["level", "empirical_congruent", "empirical_marginal"],
        &rows,
    )?;
    Ok(())
}

/// Four moment-matched families, each under its exact model: every CCE is
/// near zero while ECE penalizes the discrete families.
fn four_family(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(2000);
    let cases = gen_four_family(n, p.epsilon, p.seed)?;
    let mut seeds = SubSeeds::new(p.seed, "four-family");

    let mut eces = Vec::new();
    let mut levels = Vec::new();
    let mut curves = Vec::new();
    let mut names = Vec::new();
    for case in &cases {
        let gt = case.dataset.sample_set()?;
        let config = synthetic_config(&gt, 0.5, 0.1)?;
        let report = evaluate_model(
            &gt,
            &case.model.predictions(&case.dataset.xs)?,
            &config,
            1,
            seeds.next(),
            None,
        )?;
        let cal = calibration_report(&case.model.dists, &case.dataset.ys, 99, 1.0)?;
        summary.push_num(format!("ece_{}", case.model.name), cal.ece);
        summary.push_num(format!("mean_cce_{}", case.model.name), report.mean);
        summary.push_num(format!("mean_nll_{}", case.model.name), cal.mean_nll);
        write_csv(
            &p.out.join(format!("cce_{}.csv", case.model.name)),
            &["x", "cce"],
            &profile_rows(&case.dataset.xs, &[&report.values]),
        )?;
        eces.push(cal.ece);
        levels = cal.levels.clone();
        curves.push(cal.empirical);
        names.push(case.model.name.clone());
    }
    let min_ratio = eces[1..]
        .iter()
        .map(|&e| e / eces[0])
        .fold(f64::INFINITY, f64::min);
    summary.push_num("min_discrete_ece_ratio", min_ratio);

    let header: Vec<String> = std::iter::once("level".to_string())
        .chain(names.iter().map(|n| format!("empirical_{n}")))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = levels
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mut row = vec![fmt_float_csv(l)];
            row.extend(curves.iter().map(|c| fmt_float_csv(c[j])));
            row
        })
        .collect();
    write_csv(&p.out.join("reliability.csv"), &header_refs, &rows)?;
    Ok(())
}

const LAMBDA_GRID: [(&str, f64); 6] = [
    ("0.001", 0.001),
    ("0.01", 0.01),
    ("0.05", 0.05),
    ("0.1", 0.1),
    ("0.5", 0.5),
    ("1", 1.0),
];

/// Regularizer study on the fixed sample pair: the MCMD profile smooths
/// toward zero as lambda grows.
fn lambda_sweep(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(1000);
    let m = p.m.unwrap_or(500);
    let (ground, comparison) = gen_hyperparam_pair(n, m, p.seed)?;
    let queries = grid_1d(0.0, 2.0 * PI, 100);
    let gamma_y = output_bandwidth(ground.outputs())?;

    let mut sweep_rows = Vec::new();
    let mut profiles = Vec::new();
    for (label, lambda) in LAMBDA_GRID {
        let config = McmdConfig::new(
            KernelSpec::rbf(0.5)?,
            KernelSpec::rbf(gamma_y)?,
            lambda,
            lambda,
        )?;
        let profile = mcmd_profile(&ground, &comparison, &config, &queries)?;
        let avg = mean(&profile);
        summary.push_num(format!("mean_mcmd_lambda_{label}"), avg);
        sweep_rows.push(vec![label.to_string(), fmt_float_csv(avg)]);
        profiles.push(profile);
    }
    write_csv(&p.out.join("lambda_sweep.csv"), &["lambda", "mean_mcmd"], &sweep_rows)?;

    let header: Vec<String> = std::iter::once("x".to_string())
        .chain(LAMBDA_GRID.iter().map(|(l, _)| format!("mcmd_lambda_{l}")))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let cols: Vec<&[f64]> = profiles.iter().map(Vec::as_slice).collect();
    write_csv(&p.out.join("lambda_profiles.csv"), &header_refs, &profile_rows(&queries, &cols))?;
    Ok(())
}

const GAMMA_GRID: [(&str, f64); 6] = [
    ("0.1", 0.1),
    ("0.5", 0.5),
    ("1", 1.0),
    ("2", 2.0),
    ("5", 5.0),
    ("10", 10.0),
];

/// Bandwidth study: gamma varies simultaneously in both RBF kernels.
fn gamma_sweep(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(1000);
    let m = p.m.unwrap_or(500);
    let (ground, comparison) = gen_hyperparam_pair(n, m, p.seed)?;
    let queries = grid_1d(0.0, 2.0 * PI, 100);

    let mut sweep_rows = Vec::new();
    let mut profiles = Vec::new();
    for (label, gamma) in GAMMA_GRID {
        let config =
            McmdConfig::new(KernelSpec::rbf(gamma)?, KernelSpec::rbf(gamma)?, 0.1, 0.1)?;
        let profile = mcmd_profile(&ground, &comparison, &config, &queries)?;
        let avg = mean(&profile);
        summary.push_num(format!("mean_mcmd_gamma_{label}"), avg);
        sweep_rows.push(vec![label.to_string(), fmt_float_csv(avg)]);
        profiles.push(profile);
    }
    write_csv(&p.out.join("gamma_sweep.csv"), &["gamma", "mean_mcmd"], &sweep_rows)?;

    let header: Vec<String> = std::iter::once("x".to_string())
        .chain(GAMMA_GRID.iter().map(|(g, _)| format!("mcmd_gamma_{g}")))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let cols: Vec<&[f64]> = profiles.iter().map(Vec::as_slice).collect();
    write_csv(&p.out.join("gamma_profiles.csv"), &header_refs, &profile_rows(&queries, &cols))?;
    Ok(())
}

/// Kernel-family comparison on the fixed pair: RBF, Laplacian, and the
/// rescaled polynomial kernel, applied to both spaces.
fn kernel_compare(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(1000);
    let m = p.m.unwrap_or(500);
    let (ground, comparison) = gen_hyperparam_pair(n, m, p.seed)?;
    let queries = grid_1d(0.0, 2.0 * PI, 100);
    let gamma_y = output_bandwidth(ground.outputs())?;

    let kernels: [(&str, KernelSpec, KernelSpec); 3] = [
        ("rbf", KernelSpec::rbf(2.0)?, KernelSpec::rbf(gamma_y)?),
        ("laplacian", KernelSpec::laplacian(2.0)?, KernelSpec::laplacian(gamma_y)?),
        (
            "polynomial",
            KernelSpec::polynomial(0.02, 1.0, 3)?,
            KernelSpec::polynomial(0.02, 1.0, 3)?,
        ),
    ];
    let mut sweep_rows = Vec::new();
    let mut profiles = Vec::new();
    for (label, kx, ky) in kernels {
        let config = McmdConfig::new(kx, ky, 0.1, 0.1)?;
        let profile = mcmd_profile(&ground, &comparison, &config, &queries)?;
        let avg = mean(&profile);
        summary.push_num(format!("mean_mcmd_{label}"), avg);
        sweep_rows.push(vec![label.to_string(), fmt_float_csv(avg)]);
        profiles.push(profile);
    }
    write_csv(&p.out.join("kernel_compare.csv"), &["kernel", "mean_mcmd"], &sweep_rows)?;
    let cols: Vec<&[f64]> = profiles.iter().map(Vec::as_slice).collect();
    write_csv(
        &p.out.join("kernel_profiles.csv"),
        &["x", "mcmd_rbf", "mcmd_laplacian", "mcmd_polynomial"],
        &profile_rows(&queries, &cols),
    )?;
    Ok(())
}

/// Monte Carlo sample-count study on the dispersion setup: mean CCE across
/// ell in 1..=5, several trials each, for the candidates whose CCE at this
/// scale measures model misfit (poisson and negbinom). The near-congruent
/// models are excluded: their CCE is estimator floor, which shifts with the
/// model-sample size m = n*ell regardless of ell robustness.
fn ell_sweep(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(300);
    let trials = p.trials.unwrap_or(3);
    if trials < 2 {
        return Err(CliError::Usage("ell-sweep needs at least 2 trials".into()));
    }
    let (ds, models) = gen_dispersion_profile(n, p.seed)?;
    let gt = ds.sample_set()?;
    let config = synthetic_config(&gt, 0.5, 0.1)?;
    let mut seeds = SubSeeds::new(p.seed, "ell-sweep");

    let mut rows = Vec::new();
    for model in models.iter().filter(|m| m.name == "poisson" || m.name == "negbinom") {
        let preds = model.predictions(&ds.xs)?;
        // paired design: each trial draws ell = 5 samples per point once and
        // the smaller ell values reuse that trial's first ell draws per
        // point, so the series over ell isolates the ell effect instead of
        // rerolling independent draw noise
        let mut trial_series: Vec<Vec<f64>> = Vec::with_capacity(trials);
        for trial in 0..trials {
            let full = build_model_sample(&preds, 5, seeds.next())?;
            let mut series = Vec::with_capacity(5);
            for ell in 1..=5usize {
                let mut keep_x = Vec::with_capacity(n * ell);
                let mut keep_y = Vec::with_capacity(n * ell);
                for i in 0..n {
                    for k in 0..ell {
                        keep_x.push(full.conditioning()[i * 5 + k].clone());
                        keep_y.push(full.outputs()[i * 5 + k]);
                    }
                }
                let model_sample = SampleSet::new(keep_x, keep_y)?;
                let report = cce_eval(&gt, &model_sample, &config, gt.conditioning())?;
                series.push(report.mean);
                rows.push(vec![
                    model.name.clone(),
                    ell.to_string(),
                    trial.to_string(),
                    fmt_float_csv(report.mean),
                ]);
            }
            trial_series.push(series);
        }
        let mut per_ell_means = Vec::new();
        let mut per_ell_vars = Vec::new();
        for ell in 0..5 {
            let trial_means: Vec<f64> = trial_series.iter().map(|s| s[ell]).collect();
            let avg = mean(&trial_means);
            summary.push_num(format!("mean_cce_{}_ell{}", model.name, ell + 1), avg);
            summary.push_num(
                format!("sd_{}_ell{}", model.name, ell + 1),
                sample_variance(&trial_means).sqrt(),
            );
            per_ell_means.push(avg);
            per_ell_vars.push(sample_variance(&trial_means));
        }
        let range = per_ell_means.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - per_ell_means.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let pooled_sd = mean(&per_ell_vars).sqrt();
        summary.push_num(format!("range_{}", model.name), range);
        summary.push_num(format!("pooled_sd_{}", model.name), pooled_sd);
    }
    write_csv(&p.out.join("ell_sweep.csv"), &["model", "ell", "trial", "mean_cce"], &rows)?;
    Ok(())
}

/// MCMD behavior study: six comparison scenarios against heteroscedastic and
/// homoscedastic ground laws.
fn mcmd_study(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(1000);
    let m = p.m.unwrap_or(500);
    let queries = grid_1d(0.0, 2.0 * PI, 100);

    let mut table_rows = Vec::new();
    for noise in NoiseProfile::ALL {
        let mut profiles = Vec::new();
        for deviation in Deviation::ALL {
            let scenario = StudyScenario { noise, deviation };
            let (ground, comparison) = gen_mcmd_study(scenario, n, m, p.seed)?;
            let gamma_y = output_bandwidth(ground.outputs())?;
            let config =
                McmdConfig::new(KernelSpec::rbf(1.0)?, KernelSpec::rbf(gamma_y)?, 0.1, 0.1)?;
            let profile = mcmd_profile(&ground, &comparison, &config, &queries)?;
            let avg = mean(&profile);
            summary.push_num(format!("mean_mcmd_{}_{}", noise.name(), deviation.name()), avg);
            table_rows.push(vec![
                noise.name().to_string(),
                deviation.name().to_string(),
                fmt_float_csv(avg),
            ]);
            profiles.push(profile);
        }
        let header: Vec<String> = std::iter::once("x".to_string())
            .chain(Deviation::ALL.iter().map(|d| format!("mcmd_{}", d.name())))
            .collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let cols: Vec<&[f64]> = profiles.iter().map(Vec::as_slice).collect();
        write_csv(
            &p.out.join(format!("profiles_{}.csv", noise.name())),
            &header_refs,
            &profile_rows(&queries, &cols),
        )?;
    }
    write_csv(&p.out.join("mcmd_study.csv"), &["noise", "scenario", "mean_mcmd"], &table_rows)?;
    Ok(())
}

/// The dispersion-profile comparison: four candidate models on one count DGP,
/// scored by CCE, ECE, and NLL, with per-region CCE means.
fn dispersion_profile(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(2000);
    let (ds, models) = gen_dispersion_profile(n, p.seed)?;
    let gt = ds.sample_set()?;
    let config = synthetic_config(&gt, 0.5, 0.1)?;
    let mut seeds = SubSeeds::new(p.seed, "dispersion-profile");

    let mut profiles = Vec::new();
    let mut levels = Vec::new();
    let mut curves = Vec::new();
    let mut names = Vec::new();
    for model in &models {
        let report =
            evaluate_model(&gt, &model.predictions(&ds.xs)?, &config, 1, seeds.next(), None)?;
        let cal = calibration_report(&model.dists, &ds.ys, 99, 1.0)?;
        let (mut low, mut high) = (Vec::new(), Vec::new());
        for (x, &v) in ds.xs.iter().zip(&report.values) {
            if x[0] < PI {
                low.push(v);
            } else {
                high.push(v);
            }
        }
        summary.push_num(format!("mean_cce_{}", model.name), report.mean);
        summary.push_num(format!("ece_{}", model.name), cal.ece);
        summary.push_num(format!("mean_nll_{}", model.name), cal.mean_nll);
        summary.push_num(format!("cce_{}_low", model.name), mean(&low));
        summary.push_num(format!("cce_{}_high", model.name), mean(&high));
        profiles.push(report.values);
        levels = cal.levels.clone();
        curves.push(cal.empirical);
        names.push(model.name.clone());
    }

    let header: Vec<String> = std::iter::once("x".to_string())
        .chain(names.iter().map(|n| format!("cce_{n}")))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let cols: Vec<&[f64]> = profiles.iter().map(Vec::as_slice).collect();
    write_csv(&p.out.join("cce_profile.csv"), &header_refs, &profile_rows(&ds.xs, &cols))?;

    let header: Vec<String> = std::iter::once("level".to_string())
        .chain(names.iter().map(|n| format!("empirical_{n}")))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = levels
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mut row = vec![fmt_float_csv(l)];
            row.extend(curves.iter().map(|c| fmt_float_csv(c[j])));
            row
        })
        .collect();
    write_csv(&p.out.join("reliability.csv"), &header_refs, &rows)?;
    Ok(())
}

/// Reject-option experiment: CCE scored label-free on a held-out test split
/// (validation split as the ground sample) drives a threshold sweep over
/// retained-subset MAE and NLL.
fn reject(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(2000);
    let mut seeds = SubSeeds::new(p.seed, "reject");
    let val_seed = seeds.next();
    let test_seed = seeds.next();
    let draw_seed = seeds.next();

    let val = gen_reject_dgp(n, val_seed)?;
    let test = gen_reject_dgp(n, test_seed)?;
    let model_val = reject_stand_in_model(&val.xs)?;
    let model_test = reject_stand_in_model(&test.xs)?;

    let ground = val.sample_set()?;
    let config = synthetic_config(&ground, 0.5, 0.1)?;
    let model_sample = build_model_sample(&model_val.predictions(&val.xs)?, 1, draw_seed)?;
    let report = cce_eval(&ground, &model_sample, &config, &test.xs)?;

    let point_preds: Vec<f64> = model_test.dists.iter().map(|d| d.mean()).collect();
    let max_cce = report.values.iter().fold(0.0f64, |a, &b| a.max(b));
    let thresholds: Vec<f64> = (0..26).map(|i| max_cce * i as f64 / 25.0).collect();
    let sweep = reject_sweep(&report.values, &point_preds, &model_test.dists, &test.ys, &thresholds)?;

    let strictest = sweep
        .retained_fraction
        .iter()
        .position(|&f| f > 0.0)
        .expect("the max threshold retains everything");
    let monotone = sweep.retained_fraction.windows(2).all(|w| w[0] <= w[1]);
    let last = sweep.thresholds.len() - 1;
    summary.push_num("full_mae", sweep.mae[last]);
    summary.push_num("full_nll", sweep.nll[last]);
    summary.push_num("strictest_threshold", sweep.thresholds[strictest]);
    summary.push_num("strictest_retained_fraction", sweep.retained_fraction[strictest]);
    summary.push_num("strictest_mae", sweep.mae[strictest]);
    summary.push_num("strictest_nll", sweep.nll[strictest]);
    summary.push_num("retained_monotone", if monotone { 1.0 } else { 0.0 });

    let rows: Vec<Vec<String>> = (0..sweep.thresholds.len())
        .map(|i| {
            vec![
                fmt_float_csv(sweep.thresholds[i]),
                fmt_float_csv(sweep.retained_fraction[i]),
                fmt_float_csv(sweep.mae[i]),
                fmt_float_csv(sweep.nll[i]),
            ]
        })
        .collect();
    write_csv(
        &p.out.join("reject_sweep.csv"),
        &["threshold", "retained_fraction", "mae", "nll"],
        &rows,
    )?;
    Ok(())
}

const FRACTIONS: [(&str, f64); 4] = [("0.25", 0.25), ("0.5", 0.5), ("0.75", 0.75), ("1", 1.0)];

fn ordering(names: &[String], means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
    order
}

fn pair_label(names: &[String], a: usize, b: usize) -> String {
    let mut pair = [names[a].as_str(), names[b].as_str()];
    pair.sort_unstable();
    pair.join("+")
}

/// Downsampling stability: model ranking under mean CCE at 25/50/75/100% of
/// the data across seeded trials. Within a trial each model's Monte Carlo
/// sample is drawn once at full size; a fraction keeps the same realized
/// (x, y, model-draw) triples for a uniform subset of points, which is what
/// downsampling the test set means.
fn downsample_stability(p: &ExperimentParams, summary: &mut Summary) -> CliResult<()> {
    let n = p.n.unwrap_or(500);
    let trials = p.trials.unwrap_or(5);
    let (ds, models) = gen_dispersion_profile(n, p.seed)?;
    let names: Vec<String> = models.iter().map(|m| m.name.clone()).collect();
    let mut seeds = SubSeeds::new(p.seed, "downsample-stability");

    let mut rows = Vec::new();
    let mut agreeing = 0usize;
    for trial in 0..trials {
        // one draw seed per trial, shared across models: common random
        // numbers keep the ranking comparison from being dominated by
        // independent draw noise where two models' distributions coincide
        let trial_draw_seed = seeds.next();
        let full_samples: Vec<SampleSet> = models
            .iter()
            .map(|model| {
                let preds = model.predictions(&ds.xs)?;
                Ok(build_model_sample(&preds, 1, trial_draw_seed)?)
            })
            .collect::<CliResult<_>>()?;
        let mut best_worst: Vec<Vec<usize>> = Vec::new();
        for (label, frac) in FRACTIONS {
            let subsample_seed = seeds.next();
            let keep: Vec<usize> = if frac == 1.0 {
                (0..n).collect()
            } else {
                let k = ((n as f64 * frac).round() as usize).max(2);
                downsample_indices(n, k, subsample_seed)?
            };
            let gt = SampleSet::new(
                keep.iter().map(|&i| ds.xs[i].clone()).collect(),
                keep.iter().map(|&i| ds.ys[i]).collect(),
            )?;
            let config = synthetic_config(&gt, 0.5, 0.1)?;
            let mut means = Vec::new();
            for (model, full) in models.iter().zip(&full_samples) {
                let model_sample = SampleSet::new(
                    keep.iter().map(|&i| full.conditioning()[i].clone()).collect(),
                    keep.iter().map(|&i| full.outputs()[i]).collect(),
                )?;
                let report = cce_eval(&gt, &model_sample, &config, gt.conditioning())?;
                means.push(report.mean);
                rows.push(vec![
                    trial.to_string(),
                    label.to_string(),
                    model.name.clone(),
                    fmt_float_csv(report.mean),
                ]);
            }
            let order = ordering(&names, &means);
            let ranked: Vec<&str> = order.iter().map(|&i| names[i].as_str()).collect();
            summary.push_text(format!("ordering_trial{trial}_frac{label}"), ranked.join("<"));
            best_worst.push(order);
        }
        let quarter = &best_worst[0];
        let full = &best_worst[best_worst.len() - 1];
        summary.push_text(format!("best_full_trial{trial}"), names[full[0]].clone());
        summary.push_text(format!("worst_full_trial{trial}"), names[full[3]].clone());
        summary.push_text(format!("best_q25_trial{trial}"), names[quarter[0]].clone());
        summary.push_text(format!("worst_q25_trial{trial}"), names[quarter[3]].clone());
        summary.push_text(format!("best_pair_full_trial{trial}"), pair_label(&names, full[0], full[1]));
        summary.push_text(format!("worst_pair_full_trial{trial}"), pair_label(&names, full[2], full[3]));
        summary.push_text(format!("best_pair_q25_trial{trial}"), pair_label(&names, quarter[0], quarter[1]));
        summary.push_text(format!("worst_pair_q25_trial{trial}"), pair_label(&names, quarter[2], quarter[3]));
        // agreement at the level the ranking supports: which models are the
        // well-fit pair and which the poorly-fit pair
        let pairs_match = pair_label(&names, full[0], full[1]) == pair_label(&names, quarter[0], quarter[1])
            && pair_label(&names, full[2], full[3]) == pair_label(&names, quarter[2], quarter[3]);
        if pairs_match {
            agreeing += 1;
        }
    }
    summary.push_num("trials_agreeing", agreeing as f64);
    summary.push_num("trials_total", trials as f64);
    write_csv(
        &p.out.join("downsample.csv"),
        &["trial", "fraction", "model", "mean_cce"],
        &rows,
    )?;
    Ok(())
}
