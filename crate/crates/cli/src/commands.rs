use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use expandforge::augment::SelectionMode;
use expandforge::backends::{gen_toy_dataset, make_embedder, BackendConfig, Backends, LabeledDataset, TOY_CLASS_NAMES};
use expandforge::eval::{covering_radius, evaluate, train_classifier, ClassifierConfig, Metrics};
use expandforge::latentmath::{NoiseMode, Weights};
use expandforge::pipeline::{
    expand_dataset, read_dataset, read_manifest, to_canonical_json, with_workers, write_dataset, write_manifest,
    ExpansionConfig, MethodId,
};
use expandforge::Error;

use crate::{CmdResult, Failure};

const SEED_ENV: &str = "EXPANDFORGE_SEED";

#[derive(Debug, Args)]
pub struct ToygenArgs {
    /// Number of classes (2 to 8).
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Samples per class.
    #[arg(long, default_value_t = 25)]
    per_class: usize,
    /// Image side in pixels (8 to 64).
    #[arg(long, default_value_t = 16)]
    size: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn toygen(a: ToygenArgs) -> CmdResult {
    let data = gen_toy_dataset(a.classes, a.per_class, a.size, a.seed).map_err(|e| flag_error("toygen", e))?;
    write_dataset(&data, &a.out).map_err(|e| Failure::from_error("", e))?;
    println!("wrote {} samples to {}", data.len(), a.out.display());
    Ok(())
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ExpandArgs {
    /// Input GIFX dataset.
    #[arg(long = "in")]
    input: PathBuf,
    /// gif_embed, gif_latent, cutout, gridmask, randlite, selective_randlite or selective_cutout.
    #[arg(long)]
    method: MethodId,
    /// Synthetic variants per seed (K).
    #[arg(long, default_value_t = 5)]
    ratio: usize,
    /// L∞ radius of the perturbation ball [default: 0.1 for gif_embed, 5.0 for gif_latent].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Projected ascent steps.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Ascent step size.
    #[arg(long, default_value_t = 0.1)]
    step_size: f64,
    /// Weight of the class-consistency term.
    #[arg(long, default_value_t = 1.0)]
    lambda_con: f64,
    /// Weight of the entropy-gain term.
    #[arg(long, default_value_t = 1.0)]
    lambda_ent: f64,
    /// Weight of the diversity term.
    #[arg(long, default_value_t = 1.0)]
    lambda_div: f64,
    /// full, channel or token [default: full for gif_embed, channel for gif_latent].
    #[arg(long)]
    noise_mode: Option<NoiseMode>,
    /// Re-initializations for variants that change the predicted class.
    #[arg(long, default_value_t = 3)]
    retries: usize,
    /// sample_wise or sample_agnostic (selective methods).
    #[arg(long, default_value_t = SelectionMode::SampleWise)]
    selection: SelectionMode,
    /// Candidates per seed for selective methods [default: 4 × ratio].
    #[arg(long)]
    budget: Option<usize>,
    /// GIFX prior corpus for fitting the codec and zero-shot head [default: toy prior].
    #[arg(long)]
    prior: Option<PathBuf>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output GIFX dataset.
    #[arg(long)]
    out: PathBuf,
    /// Output manifest (canonical JSON).
    #[arg(long)]
    manifest: PathBuf,
}

fn flag_error(flag: &str, e: Error) -> Failure {
    Failure::from_error(&format!("--{flag}"), e)
}

fn read(path: &Path) -> Result<LabeledDataset, Failure> {
    read_dataset(path).map_err(|e| match e {
        Error::Io { .. } => Failure::from_error("", e),
        e => Failure::from_error(&path.display().to_string(), e),
    })
}

fn check_flags(a: &ExpandArgs) -> CmdResult {
    let finite_nonneg = |name: &str, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Failure::usage(format!("--{name}: must be a finite nonnegative number, got {v}")))
        }
    };
    if a.ratio == 0 {
        return Err(Failure::usage("--ratio: must be at least 1"));
    }
    if !(a.step_size > 0.0 && a.step_size.is_finite()) {
        return Err(Failure::usage(format!("--step-size: must be positive, got {}", a.step_size)));
    }
    if let Some(eps) = a.epsilon {
        if eps.is_nan() || eps < 0.0 {
            return Err(Failure::usage(format!("--epsilon: must be nonnegative, got {eps}")));
        }
    }
    finite_nonneg("lambda-con", a.lambda_con)?;
    finite_nonneg("lambda-ent", a.lambda_ent)?;
    finite_nonneg("lambda-div", a.lambda_div)?;
    if let Some(b) = a.budget {
        if b < a.ratio {
            return Err(Failure::usage(format!("--budget: {b} is below --ratio {}", a.ratio)));
        }
    }
    Ok(())
}

fn expansion_config(a: &ExpandArgs) -> ExpansionConfig {
    let mut c = ExpansionConfig::for_method(a.method).with_ratio(a.ratio);
    if let Some(eps) = a.epsilon {
        c.guidance.epsilon = eps;
    }
    if let Some(mode) = a.noise_mode {
        c.guidance.noise_mode = mode;
    }
    c.guidance.steps = a.steps;
    c.guidance.step_size = a.step_size;
    c.guidance.retries = a.retries;
    c.guidance.weights = Weights { con: a.lambda_con, ent: a.lambda_ent, div: a.lambda_div };
    c.selection = a.selection;
    c.candidate_budget = a.budget;
    c
}

fn backends_for(data: &LabeledDataset, prior: Option<&Path>) -> Result<Backends, Failure> {
    let config = BackendConfig::default();
    if let Some(path) = prior {
        let prior = read(path)?;
        return Backends::from_prior(&prior, &config).map_err(|e| Failure::from_error(&path.display().to_string(), e));
    }
    let (h, w, c) = data.image_shape().ok_or_else(|| Failure { code: 2, message: "input dataset is empty".into() })?;
    if h != w || c != 1 || data.classes() > TOY_CLASS_NAMES.len() {
        return Err(Failure {
            code: 2,
            message: format!(
                "input is {h}x{w}x{c} with {} classes; the built-in toy prior needs square single-channel images \
                 with at most {} classes, pass --prior",
                data.classes(),
                TOY_CLASS_NAMES.len()
            ),
        });
    }
    Backends::toy_prior(data.classes(), h, &config).map_err(|e| flag_error("prior", e))
}

pub fn expand(a: ExpandArgs) -> CmdResult {
    check_flags(&a)?;
    let data = read(&a.input)?;
    let config = expansion_config(&a);
    let backends = backends_for(&data, a.prior.as_deref())?;
    let (expanded, manifest) = with_workers(a.workers, || expand_dataset(&data, a.method, &config, &backends, a.seed))
        .map_err(|e| flag_error("workers", e))?
        .map_err(|e| Failure::from_error(&a.input.display().to_string(), e))?;
    write_dataset(&expanded, &a.out).map_err(|e| Failure::from_error("", e))?;
    write_manifest(&manifest, &a.manifest).map_err(|e| Failure::from_error("", e))?;
    manifest.verify_files(&a.input, &a.out).map_err(|e| Failure::from_error(&a.manifest.display().to_string(), e))?;
    println!(
        "wrote {} samples ({} synthetic) to {} and manifest {}",
        expanded.len(),
        manifest.record_count,
        a.out.display(),
        a.manifest.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainevalArgs {
    /// Training GIFX dataset.
    #[arg(long)]
    train: PathBuf,
    /// Held-out GIFX dataset.
    #[arg(long)]
    test: PathBuf,
    /// Expansion manifest of the training set; fills the method, ratio and seed columns.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Hidden units.
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Learning rate.
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Classifier initialization seed.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Output metrics JSON.
    #[arg(long)]
    out: PathBuf,
}

/// One row of a report: a training run and where its data came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    /// Method, with the guidance weights tag for guided runs; "none" for unexpanded data.
    pub method: String,
    pub ratio: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub covering_radius: f64,
    pub metrics: Metrics,
}

pub fn traineval(a: TrainevalArgs) -> CmdResult {
    let train = read(&a.train)?;
    let test = read(&a.test)?;
    let (method, ratio, seed) = match &a.manifest {
        Some(path) => {
            let m = read_manifest(path).map_err(|e| Failure::from_error(&path.display().to_string(), e))?;
            let label = if m.method.is_guided() {
                format!("{}:{}", m.method, m.config.guidance.weights.tag())
            } else {
                m.method.to_string()
            };
            (label, m.ratio_k, m.global_seed)
        }
        None => ("none".to_string(), 0, a.seed),
    };
    let config = ClassifierConfig { hidden: a.hidden, epochs: a.epochs, learning_rate: a.lr, seed: a.seed };
    config.validate().map_err(|e| Failure::from_error("classifier flags", e))?;
    let model =
        train_classifier(&train, &config).map_err(|e| Failure::from_error(&a.train.display().to_string(), e))?;
    let metrics = evaluate(&model, &test).map_err(|e| Failure::from_error(&a.test.display().to_string(), e))?;
    let shape = train.image_shape().unwrap_or((1, 1, 1));
    let embedder = make_embedder(shape, BackendConfig::default().embed_dim, BackendConfig::default().embed_seed)
        .map_err(|e| Failure::from_error(&a.train.display().to_string(), e))?;
    let embed = |d: &LabeledDataset| -> Result<Vec<Vec<f64>>, Error> {
        d.images().iter().map(|im| embedder.embed(im)).collect()
    };
    let radius = embed(&train)
        .and_then(|cover| covering_radius(&cover, &embed(&test)?))
        .map_err(|e| Failure::from_error(&a.test.display().to_string(), e))?;
    let file = MetricsFile {
        method,
        ratio,
        seed,
        train_size: train.len(),
        test_size: test.len(),
        covering_radius: radius,
        metrics,
    };
    let json = to_canonical_json(&file).map_err(|e| Failure::from_error("", e))?;
    fs::write(&a.out, json).map_err(|e| Failure::from_error("", Error::io(&a.out, e)))?;
    println!(
        "accuracy {:.4} macro {:.4} covering radius {:.4} -> {}",
        file.metrics.accuracy,
        file.metrics.macro_accuracy,
        file.covering_radius,
        a.out.display()
    );
    Ok(())
}
