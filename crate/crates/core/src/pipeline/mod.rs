//! Whole-dataset expansion, the GIFX container and provenance manifests.

mod canonical;
mod expand;
mod gifx;
mod manifest;

pub use canonical::to_canonical_json;
pub use expand::{expand_dataset, seed_stream, with_workers};
pub use gifx::{
    dataset_digest, decode_dataset, encode_dataset, file_digest, read_dataset, sample_digest, write_dataset, MAGIC,
    VERSION,
};
pub use manifest::{read_manifest, write_manifest, ExpansionManifest, TOOL_VERSION};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentSpec, SelectionMode};
use crate::error::{Error, Result};
use crate::guidance::GuidanceConfig;

/// Expansion method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    GifEmbed,
    GifLatent,
    Cutout,
    Gridmask,
    Randlite,
    SelectiveRandlite,
    SelectiveCutout,
}

impl MethodId {
    pub const ALL: [MethodId; 7] = [
        MethodId::GifEmbed,
        MethodId::GifLatent,
        MethodId::Cutout,
        MethodId::Gridmask,
        MethodId::Randlite,
        MethodId::SelectiveRandlite,
        MethodId::SelectiveCutout,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::GifEmbed => "gif_embed",
            MethodId::GifLatent => "gif_latent",
            MethodId::Cutout => "cutout",
            MethodId::Gridmask => "gridmask",
            MethodId::Randlite => "randlite",
            MethodId::SelectiveRandlite => "selective_randlite",
            MethodId::SelectiveCutout => "selective_cutout",
        }
    }

    pub fn is_guided(self) -> bool {
        matches!(self, MethodId::GifEmbed | MethodId::GifLatent)
    }

    pub fn is_selective(self) -> bool {
        matches!(self, MethodId::SelectiveRandlite | MethodId::SelectiveCutout)
    }

    /// Augmentation used by the non-guided methods.
    pub fn default_augment(self) -> Option<AugmentSpec> {
        match self {
            MethodId::GifEmbed | MethodId::GifLatent => None,
            MethodId::Cutout | MethodId::SelectiveCutout => Some(AugmentSpec::DEFAULT_CUTOUT),
            MethodId::Gridmask => Some(AugmentSpec::DEFAULT_GRIDMASK),
            MethodId::Randlite | MethodId::SelectiveRandlite => Some(AugmentSpec::Randlite),
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method `{s}`")))
    }
}

/// Everything that parameterizes one expansion run besides the data and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Guidance settings; `ratio_k` here is the expansion ratio for every method.
    pub guidance: GuidanceConfig,
    pub augment: Option<AugmentSpec>,
    pub selection: SelectionMode,
    /// Candidates per seed for selective methods; `None` means 4 × K.
    pub candidate_budget: Option<usize>,
}

impl ExpansionConfig {
    pub fn for_method(method: MethodId) -> Self {
        let guidance = match method {
            MethodId::GifLatent => GuidanceConfig::latent_flow(),
            _ => GuidanceConfig::embedding_flow(),
        };
        ExpansionConfig {
            guidance,
            augment: method.default_augment(),
            selection: SelectionMode::SampleWise,
            candidate_budget: None,
        }
    }

    pub fn ratio_k(&self) -> usize {
        self.guidance.ratio_k
    }

    pub fn with_ratio(mut self, k: usize) -> Self {
        self.guidance.ratio_k = k;
        self
    }

    pub fn budget(&self) -> usize {
        self.candidate_budget.unwrap_or(crate::augment::DEFAULT_BUDGET_FACTOR * self.ratio_k())
    }

    pub fn validate(&self, method: MethodId) -> Result<()> {
        self.guidance.validate()?;
        match (method.is_guided(), self.augment) {
            (false, None) => return Err(Error::Parameter(format!("method {method} needs an augmentation"))),
            (false, Some(spec)) => spec.validate()?,
            (true, _) => {}
        }
        if method.is_selective() && self.budget() < self.ratio_k() {
            return Err(Error::Parameter(format!(
                "candidate budget {} is below the expansion ratio {}",
                self.budget(),
                self.ratio_k()
            )));
        }
        Ok(())
    }
}
