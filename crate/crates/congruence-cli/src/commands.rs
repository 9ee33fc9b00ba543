//! The `synth`, `cce`, and `calibrate` subcommands.

use crate::io::{
    fmt_float_json, json_float_array, read_dataset, read_predictions, read_queries, write_csv,
    write_dataset, write_predictions,
};
use crate::{CliError, CliResult};
use clap::{Args, ValueEnum};
use congruence::calibration::{calibration_report, DEFAULT_ALPHA, DEFAULT_LEVELS};
use congruence::cce::{build_model_sample, cce_eval, ModelPrediction};
use congruence::kernel::{output_bandwidth, KernelSpec};
use congruence::mcmd::{downsample_indices, McmdConfig, SampleSet, DEFAULT_LAMBDA};
use congruence::synthgen::{
    gen_dispersion_profile, gen_four_family, gen_hyperparam_pair, gen_marginal_flaw,
    gen_mcmd_study, gen_reject_dgp, Deviation, NoiseProfile, StudyScenario,
};
use congruence::seeding::seeded_stream;
use rand::RngCore;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorName {
    MarginalFlaw,
    FourFamily,
    Reject,
    HyperparamPair,
    McmdStudy,
    DispersionProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelFamilyArg {
    Rbf,
    Laplacian,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Same,
    SameMeanLowerVar,
    SameMeanHigherVar,
    DiffMeanLowerVar,
    DiffMeanHigherVar,
    DiffRelationship,
}

impl From<ScenarioArg> for Deviation {
    fn from(s: ScenarioArg) -> Deviation {
        match s {
            ScenarioArg::Same => Deviation::Same,
            ScenarioArg::SameMeanLowerVar => Deviation::SameMeanLowerVar,
            ScenarioArg::SameMeanHigherVar => Deviation::SameMeanHigherVar,
            ScenarioArg::DiffMeanLowerVar => Deviation::DiffMeanLowerVar,
            ScenarioArg::DiffMeanHigherVar => Deviation::DiffMeanHigherVar,
            ScenarioArg::DiffRelationship => Deviation::DiffRelationship,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Heteroscedastic,
    Homoscedastic,
}

impl From<NoiseArg> for NoiseProfile {
    fn from(n: NoiseArg) -> NoiseProfile {
        match n {
            NoiseArg::Heteroscedastic => NoiseProfile::Heteroscedastic,
            NoiseArg::Homoscedastic => NoiseProfile::Homoscedastic,
        }
    }
}

/// `congruence synth <generator>`: write a dataset (and model parameter
/// tables where applicable) under `--out`.
#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub generator: GeneratorName,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset size (ground-set size for the pair generators).
    #[arg(long)]
    pub n: Option<usize>,
    /// Comparison-set size for the pair generators.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Conditional slope for marginal-flaw.
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Negative-binomial over-dispersion for four-family.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Scenario for mcmd-study.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    /// Noise profile for mcmd-study.
    #[arg(long, value_enum, default_value_t = NoiseArg::Heteroscedastic)]
    pub noise: NoiseArg,
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {}", dir.display(), e)))
}

fn write_sample_set(path: &Path, s: &SampleSet) -> CliResult<()> {
    write_dataset(path, s.conditioning(), s.outputs())
}

pub fn run_synth(args: &SynthArgs) -> CliResult<()> {
    ensure_dir(&args.out)?;
    let out = &args.out;
    match args.generator {
        GeneratorName::MarginalFlaw => {
            let n = args.n.unwrap_or(2000);
            let (ds, congruent, marginal) = gen_marginal_flaw(n, args.alpha, args.seed)?;
            write_dataset(&out.join("dataset.ndjson"), &ds.xs, &ds.ys)?;
            write_predictions(&out.join("model_congruent.ndjson"), &ds.xs, &congruent.dists)?;
            write_predictions(&out.join("model_marginal.ndjson"), &ds.xs, &marginal.dists)?;
        }
        GeneratorName::FourFamily => {
            let n = args.n.unwrap_or(2000);
            for case in gen_four_family(n, args.epsilon, args.seed)? {
                let name = &case.model.name;
                write_dataset(
                    &out.join(format!("dataset_{name}.ndjson")),
                    &case.dataset.xs,
                    &case.dataset.ys,
                )?;
                write_predictions(
                    &out.join(format!("model_{name}.ndjson")),
                    &case.dataset.xs,
                    &case.model.dists,
                )?;
            }
        }
        GeneratorName::Reject => {
            let n = args.n.unwrap_or(2000);
            let ds = gen_reject_dgp(n, args.seed)?;
            write_dataset(&out.join("dataset.ndjson"), &ds.xs, &ds.ys)?;
        }
        GeneratorName::HyperparamPair => {
            let n = args.n.unwrap_or(1000);
            let m = args.m.unwrap_or(500);
            let (ground, comparison) = gen_hyperparam_pair(n, m, args.seed)?;
            write_sample_set(&out.join("ground.ndjson"), &ground)?;
            write_sample_set(&out.join("comparison.ndjson"), &comparison)?;
        }
        GeneratorName::McmdStudy => {
            let scenario = args.scenario.ok_or_else(|| {
                CliError::Usage("mcmd-study requires --scenario".to_string())
            })?;
            let n = args.n.unwrap_or(1000);
            let m = args.m.unwrap_or(500);
            let scenario = StudyScenario {
                noise: args.noise.into(),
                deviation: scenario.into(),
            };
            let (ground, comparison) = gen_mcmd_study(scenario, n, m, args.seed)?;
            write_sample_set(&out.join("ground.ndjson"), &ground)?;
            write_sample_set(&out.join("comparison.ndjson"), &comparison)?;
        }
        GeneratorName::DispersionProfile => {
            let n = args.n.unwrap_or(2000);
            let (ds, models) = gen_dispersion_profile(n, args.seed)?;
            write_dataset(&out.join("dataset.ndjson"), &ds.xs, &ds.ys)?;
            for model in models {
                write_predictions(
                    &out.join(format!("model_{}.ndjson", model.name)),
                    &ds.xs,
                    &model.dists,
                )?;
            }
        }
    }
    Ok(())
}

/// `congruence cce`: evaluate per-query CCE of a prediction file against a
/// ground-truth dataset and write a JSON report.
#[derive(Debug, Args)]
pub struct CceArgs {
    /// Ground-truth dataset (NDJSON rows {"x": [...], "y": ...}).
    #[arg(long = "ground-truth")]
    pub ground_truth: PathBuf,
    /// Model predictions aligned with the evaluation inputs.
    #[arg(long, required_unless_present = "self_check", conflicts_with = "self_check")]
    pub predictions: Option<PathBuf>,
    /// Report output path (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional query inputs for label-free evaluation (NDJSON rows {"x": [...]}).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Uniformly subsample the ground truth (and aligned predictions) to this
    /// many pairs before evaluation.
    #[arg(long)]
    pub downsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Defaults to --lambda.
    #[arg(long)]
    pub lambda_prime: Option<f64>,
    /// Monte Carlo draws per prediction.
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    #[arg(long, value_enum, default_value_t = KernelFamilyArg::Polynomial)]
    pub kernel_x: KernelFamilyArg,
    /// Bandwidth for an rbf/laplacian input kernel.
    #[arg(long)]
    pub gamma_x: Option<f64>,
    /// Polynomial input-kernel degree.
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// Polynomial input-kernel offset.
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
    /// Polynomial input-kernel scale; defaults to 1/dim.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelFamilyArg::Rbf)]
    pub kernel_y: KernelFamilyArg,
    /// Output-kernel bandwidth; defaults to 1/(2 * var) of the ground-truth outputs.
    #[arg(long)]
    pub gamma_y: Option<f64>,
    /// Evaluate the ground truth against itself (sanity check; mean should be ~0).
    #[arg(long)]
    pub self_check: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn kernel_x_from_args(args: &CceArgs, dim: usize) -> CliResult<KernelSpec> {
    let need_gamma = || {
        args.gamma_x
            .ok_or_else(|| usage("--gamma-x is required for rbf/laplacian --kernel-x"))
    };
    Ok(match args.kernel_x {
        KernelFamilyArg::Rbf => KernelSpec::rbf(need_gamma()?)?,
        KernelFamilyArg::Laplacian => KernelSpec::laplacian(need_gamma()?)?,
        KernelFamilyArg::Polynomial => {
            let scale = args.scale.unwrap_or(1.0 / dim as f64);
            KernelSpec::polynomial(scale, args.offset, args.degree)?
        }
    })
}

pub fn run_cce(args: &CceArgs) -> CliResult<()> {
    if args.lambda <= 0.0 || args.lambda.is_nan() {
        return Err(usage("--lambda must be positive"));
    }
    if args.ell == 0 {
        return Err(usage("--ell must be at least 1"));
    }
    let lambda_prime = args.lambda_prime.unwrap_or(args.lambda);
    if lambda_prime <= 0.0 || lambda_prime.is_nan() {
        return Err(usage("--lambda-prime must be positive"));
    }

    let (gt_xs, gt_ys) = read_dataset(&args.ground_truth)?;
    let mut master = seeded_stream(args.seed, "cli/cce");
    let downsample_seed = master.next_u64();
    let draw_seed = master.next_u64();

    // Uniform downsampling keeps (x, y, prediction) triples aligned.
    let keep: Vec<usize> = match args.downsample {
        Some(k) => {
            if k == 0 || k > gt_xs.len() {
                return Err(CliError::Data(format!(
                    "--downsample {k} is outside 1..={}",
                    gt_xs.len()
                )));
            }
            downsample_indices(gt_xs.len(), k, downsample_seed)?
        }
        None => (0..gt_xs.len()).collect(),
    };
    let ground = SampleSet::new(
        keep.iter().map(|&i| gt_xs[i].clone()).collect(),
        keep.iter().map(|&i| gt_ys[i]).collect(),
    )?;

    let model_sample = if args.self_check {
        ground.clone()
    } else {
        let path = args.predictions.as_ref().expect("clap enforces presence");
        let (pred_xs, dists) = read_predictions(path)?;
        if args.downsample.is_some() && pred_xs.len() != gt_xs.len() {
            return Err(CliError::Data(format!(
                "--downsample needs predictions aligned with the ground truth ({} rows vs {})",
                pred_xs.len(),
                gt_xs.len()
            )));
        }
        let preds: Vec<ModelPrediction> = if args.downsample.is_some() {
            keep.iter()
                .map(|&i| ModelPrediction { embedding: pred_xs[i].clone(), dist: dists[i].clone() })
                .collect()
        } else {
            pred_xs
                .into_iter()
                .zip(dists)
                .map(|(embedding, dist)| ModelPrediction { embedding, dist })
                .collect()
        };
        build_model_sample(&preds, args.ell, draw_seed)?
    };

    let kernel_x = kernel_x_from_args(args, ground.dim())?;
    let gamma_y = match args.gamma_y {
        Some(g) => g,
        None => output_bandwidth(ground.outputs())?,
    };
    let kernel_y = match args.kernel_y {
        KernelFamilyArg::Rbf => KernelSpec::rbf(gamma_y)?,
        KernelFamilyArg::Laplacian => KernelSpec::laplacian(gamma_y)?,
        KernelFamilyArg::Polynomial => {
            return Err(usage("--kernel-y must be rbf or laplacian"));
        }
    };
    let config = McmdConfig::new(kernel_x, kernel_y, args.lambda, lambda_prime)?;

    let queries: Vec<Vec<f64>> = match &args.queries {
        Some(path) => read_queries(path)?,
        None => ground.conditioning().to_vec(),
    };
    let report = cce_eval(&ground, &model_sample, &config, &queries)?;

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let mut w = BufWriter::new(File::create(&args.out)?);
    let query_rows: Vec<String> = report.queries.iter().map(|q| json_float_array(q)).collect();
    writeln!(
        w,
        "{{\"mean\":{},\"values\":{},\"queries\":[{}]}}",
        fmt_float_json(report.mean),
        json_float_array(&report.values),
        query_rows.join(","),
    )?;
    Ok(())
}

/// `congruence calibrate`: PIT/ECE/NLL report plus a reliability-curve CSV.
#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Model predictions (NDJSON prediction rows).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Labels as a dataset file; only the y column is used.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory for calibration.json and reliability.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of confidence levels.
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    pub q: usize,
    /// ECE exponent.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

pub fn run_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    if args.q == 0 {
        return Err(usage("--q must be at least 1"));
    }
    if args.alpha <= 0.0 || args.alpha.is_nan() {
        return Err(usage("--alpha must be positive"));
    }
    let (_, dists) = read_predictions(&args.predictions)?;
    let (_, ys) = read_dataset(&args.labels)?;
    if dists.len() != ys.len() {
        return Err(CliError::Data(format!(
            "predictions and labels disagree on length: {} vs {}",
            dists.len(),
            ys.len()
        )));
    }
    let report = calibration_report(&dists, &ys, args.q, args.alpha)?;

    ensure_dir(&args.out)?;
    let mut w = BufWriter::new(File::create(args.out.join("calibration.json"))?);
    writeln!(
        w,
        "{{\"q\":{},\"alpha\":{},\"ece\":{},\"mean_nll\":{},\"levels\":{},\"empirical\":{},\"weights\":{},\"pit\":{}}}",
        args.q,
        fmt_float_json(report.alpha),
        fmt_float_json(report.ece),
        fmt_float_json(report.mean_nll),
        json_float_array(&report.levels),
        json_float_array(&report.empirical),
        json_float_array(&report.weights),
        json_float_array(&report.pit),
    )?;
    drop(w);

    let rows: Vec<Vec<String>> = report
        .levels
        .iter()
        .zip(&report.empirical)
        .map(|(&l, &e)| vec![crate::io::fmt_float_csv(l), crate::io::fmt_float_csv(e)])
        .collect();
    write_csv(&args.out.join("reliability.csv"), &["level", "empirical"], &rows)?;
    Ok(())
}

/// Paper-style evaluation config for one-dimensional synthetic inputs:
/// RBF input kernel, heuristic output bandwidth, equal regularizers.
pub fn synthetic_config(
    ground: &SampleSet,
    gamma_x: f64,
    lambda: f64,
) -> CliResult<McmdConfig> {
    let gamma_y = output_bandwidth(ground.outputs())?;
    Ok(McmdConfig::new(
        KernelSpec::rbf(gamma_x)?,
        KernelSpec::rbf(gamma_y)?,
        lambda,
        lambda,
    )?)
}
