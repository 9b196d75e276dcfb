//! Desk-scale stand-ins for the large prior models: a procedural toy-image
//! generator, a PCA codec (encoder/decoder), a seeded orthonormal embedder and
//! a prototype zero-shot head.

mod codec;
mod embedder;
mod head;
mod image;
mod linalg;
mod toy;

pub use codec::LinearCodec;
pub use embedder::{make_embedder, Embedder, EMBED_CENTER};
pub use head::{fit_prototype_head, ZeroShotHead};
pub use image::{Image, LabeledDataset};
pub use toy::{gen_toy_dataset, TOY_CLASS_NAMES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latentmath::ScoringMap;

/// Sizes and seeds of the prior models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub latent_tokens: usize,
    pub latent_channels: usize,
    pub embed_dim: usize,
    pub tau: f64,
    pub embed_seed: u64,
    /// Seed of the toy prior corpus the codec and head are fitted on.
    pub prior_seed: u64,
    pub prior_per_class: usize,
    pub exemplars_per_class: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            latent_tokens: 4,
            latent_channels: 8,
            embed_dim: 32,
            tau: 1.0,
            embed_seed: 0x5EED,
            prior_seed: 0x9A10,
            prior_per_class: 50,
            exemplars_per_class: 5,
        }
    }
}

impl BackendConfig {
    pub fn latent_dim(&self) -> usize {
        self.latent_tokens * self.latent_channels
    }
}

/// The fitted codec, embedder and head, immutable after construction.
#[derive(Debug, Clone)]
pub struct Backends {
    pub codec: LinearCodec,
    pub embedder: Embedder,
    pub head: ZeroShotHead,
}

impl Backends {
    /// Fit on a prior corpus: the codec uses every sample, the head the first
    /// `exemplars_per_class` samples of each class.
    pub fn from_prior(prior: &LabeledDataset, config: &BackendConfig) -> Result<Self> {
        let shape = prior.image_shape().ok_or_else(|| Error::Input("prior corpus is empty".into()))?;
        let codec = LinearCodec::fit(prior, config.latent_dim(), (config.latent_tokens, config.latent_channels))?;
        let embedder = make_embedder(shape, config.embed_dim, config.embed_seed)?;
        let mut taken = vec![0usize; prior.classes()];
        let mut picks = Vec::new();
        for (i, &label) in prior.labels().iter().enumerate() {
            if taken[label] < config.exemplars_per_class {
                taken[label] += 1;
                picks.push(i);
            }
        }
        let head = fit_prototype_head(&prior.select(&picks)?, &embedder, config.tau)?;
        Ok(Backends { codec, embedder, head })
    }

    /// Backends fitted on a toy prior corpus disjoint from any data seed.
    pub fn toy_prior(classes: usize, side: usize, config: &BackendConfig) -> Result<Self> {
        let prior = gen_toy_dataset(classes, config.prior_per_class, side, config.prior_seed)?;
        Backends::from_prior(&prior, config)
    }

    pub fn check_dataset(&self, dataset: &LabeledDataset) -> Result<()> {
        if let Some(shape) = dataset.image_shape() {
            if shape != self.codec.image_shape() || shape != self.embedder.input_shape() {
                return Err(Error::Shape(format!(
                    "dataset images are {shape:?}, backends expect {:?}",
                    self.codec.image_shape()
                )));
            }
        }
        if dataset.classes() != self.head.classes() {
            return Err(Error::Shape(format!(
                "dataset has {} classes, zero-shot head has {}",
                dataset.classes(),
                self.head.classes()
            )));
        }
        Ok(())
    }

    pub fn codec_scoring(&self) -> CodecScoring<'_> {
        CodecScoring { codec: &self.codec, embedder: &self.embedder }
    }
}

/// Latent → decoded image (clamped) → embedding. Backward treats the clamp as identity.
#[derive(Debug, Clone, Copy)]
pub struct CodecScoring<'a> {
    pub codec: &'a LinearCodec,
    pub embedder: &'a Embedder,
}

impl ScoringMap for CodecScoring<'_> {
    fn input_len(&self) -> usize {
        self.codec.latent_dim()
    }

    fn output_len(&self) -> usize {
        self.embedder.embed_dim()
    }

    fn embed(&self, latent: &[f64]) -> Vec<f64> {
        let pixels: Vec<f64> = self.codec.decode_pixels(latent).iter().map(|p| p.clamp(0.0, 1.0)).collect();
        self.embedder.embed_pixels(&pixels)
    }

    fn pullback(&self, _latent: &[f64], grad: &[f64]) -> Vec<f64> {
        self.codec.pull_pixels(&self.embedder.lift(grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latentmath::argmax;

    #[test]
    fn prototype_head_classifies_held_out_probes() {
        // Regression baseline: 5 exemplars per class on the default toy setup.
        let backends = Backends::toy_prior(4, 16, &BackendConfig::default()).unwrap();
        let probes = gen_toy_dataset(4, 50, 16, 4242).unwrap();
        let correct = probes
            .iter()
            .filter(|(im, label)| {
                let e = backends.embedder.embed(im).unwrap();
                argmax(backends.head.predict(&e).unwrap().probs()) == *label
            })
            .count();
        let acc = correct as f64 / probes.len() as f64;
        eprintln!("prototype head probe accuracy: {acc:.3}");
        assert!(acc >= 0.8, "probe accuracy {acc}");
    }

    #[test]
    fn deterministic_fit() {
        let a = Backends::toy_prior(4, 16, &BackendConfig::default()).unwrap();
        let b = Backends::toy_prior(4, 16, &BackendConfig::default()).unwrap();
        assert_eq!(a.codec.basis(), b.codec.basis());
        assert_eq!(a.embedder, b.embedder);
        assert_eq!(a.head, b.head);
    }
}
