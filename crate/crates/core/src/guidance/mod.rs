//! Guided latent optimization: K perturbations per seed, projected gradient
//! ascent on the guidance objective, and the two end-to-end expansion flows.

mod flows;
mod optimize;

pub use flows::{expand_seed_embedding_flow, expand_seed_latent_flow, EmbeddingDecoder, Fallback, SeedExpansion};
pub use optimize::{init_perturbations, init_variant, optimize_guidance, GuidanceOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latentmath::{GuidanceScores, NoiseMode, Weights};

/// ε radius used by the embedding flow.
pub const EMBEDDING_FLOW_EPSILON: f64 = 0.1;
/// ε radius used by the codec-latent flow.
pub const LATENT_FLOW_EPSILON: f64 = 5.0;
/// Variants per seed.
pub const DEFAULT_RATIO: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub epsilon: f64,
    pub ratio_k: usize,
    pub steps: usize,
    pub step_size: f64,
    pub weights: Weights,
    pub noise_mode: NoiseMode,
    pub retries: usize,
}

impl GuidanceConfig {
    pub fn embedding_flow() -> Self {
        GuidanceConfig {
            epsilon: EMBEDDING_FLOW_EPSILON,
            ratio_k: DEFAULT_RATIO,
            steps: 10,
            step_size: 0.1,
            weights: Weights::default(),
            noise_mode: NoiseMode::Full,
            retries: 3,
        }
    }

    pub fn latent_flow() -> Self {
        GuidanceConfig { epsilon: LATENT_FLOW_EPSILON, noise_mode: NoiseMode::Channel, ..Self::embedding_flow() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Parameter(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if self.ratio_k == 0 {
            return Err(Error::Parameter("ratio_k must be at least 1".into()));
        }
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::Parameter(format!("step_size must be positive, got {}", self.step_size)));
        }
        self.weights.validate()
    }
}

/// Objective and component scores after every ascent step (index 0 is the start).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizationTrace {
    pub objective_per_step: Vec<f64>,
    pub scores_per_step: Vec<GuidanceScores>,
    /// Largest `‖f'_k − f‖∞` over the K variants at each step.
    pub max_deviation_per_step: Vec<f64>,
}

impl OptimizationTrace {
    pub fn initial(&self) -> f64 {
        self.objective_per_step[0]
    }

    pub fn last(&self) -> f64 {
        *self.objective_per_step.last().expect("trace holds the initial value")
    }
}

/// Provenance of one emitted variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub seed_index: usize,
    pub variant_index: usize,
    pub method: String,
    /// Stream ids of every initialization this variant went through.
    pub streams: Vec<u64>,
    pub seed_class: usize,
    pub variant_class: usize,
    /// This variant's share of the seed's scores at initialization and at emission.
    pub scores_initial: GuidanceScores,
    pub scores_final: GuidanceScores,
    pub consistent: bool,
    pub retry_count: usize,
    /// Set when the variant was replaced after exhausting its retries.
    pub fallback: Option<Fallback>,
    /// Whether a selection filter accepted the sample (always true for guided flows).
    pub qualified: bool,
}
