use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{covering_radius, evaluate, train_classifier, ClassifierConfig, Metrics};
use crate::backends::{gen_toy_dataset, BackendConfig, Backends, LabeledDataset};
use crate::error::{Error, Result};
use crate::pipeline::{expand_dataset, ExpansionConfig, MethodId};
use crate::rng::Stream;

/// The default toy benchmark: 4 classes × 25 seeds at 16×16, a 200-sample
/// held-out test set, 5 global seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub classes: usize,
    pub per_class: usize,
    pub side: usize,
    pub test_size: usize,
    pub test_seed: u64,
    pub global_seeds: Vec<u64>,
    pub classifier: ClassifierConfig,
    pub backends: BackendConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            classes: 4,
            per_class: 25,
            side: 16,
            test_size: 200,
            test_seed: 0x7E57,
            global_seeds: vec![1, 2, 3, 4, 5],
            classifier: ClassifierConfig::default(),
            backends: BackendConfig::default(),
        }
    }
}

/// Outcome for one global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub global_seed: u64,
    pub train_size: usize,
    pub metrics: Metrics,
    pub covering_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub runs: Vec<RunResult>,
}

impl BenchmarkResult {
    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.metrics.accuracy).collect()
    }

    pub fn median_accuracy(&self) -> f64 {
        median(&self.accuracies())
    }

    pub fn median_macro_accuracy(&self) -> f64 {
        median(&self.runs.iter().map(|r| r.metrics.macro_accuracy).collect::<Vec<_>>())
    }
}

/// Median; the mean of the middle pair for even lengths, NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Shared state of a benchmark: backends, test set and its embeddings.
pub struct Benchmark {
    pub config: BenchmarkConfig,
    pub backends: Backends,
    pub test: LabeledDataset,
    probes: Vec<Vec<f64>>,
}

impl Benchmark {
    pub fn new(config: BenchmarkConfig) -> Result<Self> {
        if config.global_seeds.is_empty() {
            return Err(Error::Parameter("benchmark needs at least one global seed".into()));
        }
        let backends = Backends::toy_prior(config.classes, config.side, &config.backends)?;
        let per_class_test = config.test_size.div_ceil(config.classes);
        let test = gen_toy_dataset(config.classes, per_class_test, config.side, config.test_seed)?;
        let probes = embed_all(&backends, &test)?;
        Ok(Benchmark { config, backends, test, probes })
    }

    /// Seed set for one global seed.
    pub fn train_set(&self, global_seed: u64) -> Result<LabeledDataset> {
        let seed = Stream::root(global_seed).derive("train", 0).id();
        gen_toy_dataset(self.config.classes, self.config.per_class, self.config.side, seed)
    }

    /// Train on the original set (`method = None`) or its expansion, for every global seed.
    pub fn run(&self, method: Option<MethodId>, expansion: &ExpansionConfig) -> Result<BenchmarkResult> {
        let runs = self
            .config
            .global_seeds
            .par_iter()
            .map(|&g| {
                let train = self.train_set(g)?;
                let data = match method {
                    Some(m) => expand_dataset(&train, m, expansion, &self.backends, g)?.0,
                    None => train,
                };
                self.score(&data, g)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BenchmarkResult { runs })
    }

    /// Train a classifier on `data` and evaluate it on the test set.
    pub fn score(&self, data: &LabeledDataset, global_seed: u64) -> Result<RunResult> {
        let classifier = ClassifierConfig { seed: global_seed, ..self.config.classifier };
        let model = train_classifier(data, &classifier)?;
        Ok(RunResult {
            global_seed,
            train_size: data.len(),
            metrics: evaluate(&model, &self.test)?,
            covering_radius: covering_radius(&embed_all(&self.backends, data)?, &self.probes)?,
        })
    }

    pub fn probes(&self) -> &[Vec<f64>] {
        &self.probes
    }
}

pub fn embed_all(backends: &Backends, data: &LabeledDataset) -> Result<Vec<Vec<f64>>> {
    data.images().par_iter().map(|im| backends.embedder.embed(im)).collect()
}
