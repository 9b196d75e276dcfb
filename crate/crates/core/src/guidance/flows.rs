//! End-to-end expansion of one seed image.
//!
//! The embedding flow perturbs the scoring embedding directly and decodes once
//! at the end. The latent flow perturbs the codec latent and re-embeds the
//! decoded intermediate image at every evaluation. Both share the
//! consistency retry-then-fallback contract: a variant whose predicted class
//! differs from the seed's is re-initialized (others frozen) up to
//! `retries` times, then replaced by the seed reconstruction, or by a
//! verbatim copy of the seed when even the reconstruction changes class.

use serde::{Deserialize, Serialize};

use super::optimize::{ascend, init_variant};
use super::{GuidanceConfig, OptimizationTrace, VariantRecord};
use crate::backends::{Backends, Embedder, Image, LinearCodec};
use crate::error::{Error, Result};
use crate::latentmath::{
    apply_perturbations, diversity_terms, GuidanceObjective, GuidanceScores, IdentityMap, Latent, Prediction,
    ScoringMap,
};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    Reconstruction,
    SeedCopy,
}

/// The K images and records produced for one seed.
#[derive(Debug, Clone)]
pub struct SeedExpansion {
    pub images: Vec<Image>,
    pub records: Vec<VariantRecord>,
    /// Trace of the first (pre-retry) optimization.
    pub trace: OptimizationTrace,
}

/// Maps an optimized embedding back to pixels: the minimum-norm pixel change
/// realizing the embedding offset is added to the seed, then projected
/// through the codec onto the image manifold.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingDecoder<'a> {
    pub codec: &'a LinearCodec,
    pub embedder: &'a Embedder,
}

impl EmbeddingDecoder<'_> {
    pub fn new<'a>(codec: &'a LinearCodec, embedder: &'a Embedder) -> Result<EmbeddingDecoder<'a>> {
        if codec.image_shape() != embedder.input_shape() {
            return Err(Error::Shape(format!(
                "codec images {:?} vs embedder input {:?}",
                codec.image_shape(),
                embedder.input_shape()
            )));
        }
        Ok(EmbeddingDecoder { codec, embedder })
    }

    pub fn decode(&self, seed_pixels: &[f64], seed_embedding: &[f64], embedding: &[f64]) -> Result<Image> {
        let delta: Vec<f64> = embedding.iter().zip(seed_embedding).map(|(a, b)| a - b).collect();
        let lifted = self.embedder.lift(&delta);
        let pixels: Vec<f64> = seed_pixels.iter().zip(&lifted).map(|(p, d)| (p + d).clamp(0.0, 1.0)).collect();
        let projected = self.codec.decode_pixels(&self.codec.encode_pixels(&pixels));
        let (h, w, c) = self.codec.image_shape();
        Image::from_f64_clamped(h, w, c, &projected)
    }
}

struct Flow<'a, M: ScoringMap> {
    method: &'static str,
    map: M,
    backends: &'a Backends,
    seed_latent: Latent,
    seed_pred: Prediction,
}

/// Algorithm-1 style: optimize in the embedder space, decode afterward.
pub fn expand_seed_embedding_flow(
    seed_image: &Image,
    backends: &Backends,
    config: &GuidanceConfig,
    stream: Stream,
    seed_index: usize,
) -> Result<SeedExpansion> {
    let decoder = EmbeddingDecoder::new(&backends.codec, &backends.embedder)?;
    let embedding = backends.embedder.embed(seed_image)?;
    let seed_pred = backends.head.predict(&embedding)?;
    let flow = Flow {
        method: "gif_embed",
        map: IdentityMap { dim: embedding.len() },
        backends,
        seed_latent: Latent::row(embedding.clone())?,
        seed_pred,
    };
    let seed_pixels = seed_image.to_f64();
    flow.run(config, stream, seed_index, seed_image, |l| decoder.decode(&seed_pixels, &embedding, l.values()))
}

/// Algorithm-2 style: optimize the codec latent, scoring the decoded intermediate image.
pub fn expand_seed_latent_flow(
    seed_image: &Image,
    backends: &Backends,
    config: &GuidanceConfig,
    stream: Stream,
    seed_index: usize,
) -> Result<SeedExpansion> {
    let seed_latent = backends.codec.encode(seed_image)?;
    let seed_pred = backends.head.predict(&backends.embedder.embed(seed_image)?)?;
    let flow = Flow { method: "gif_latent", map: backends.codec_scoring(), backends, seed_latent, seed_pred };
    let codec = &backends.codec;
    flow.run(config, stream, seed_index, seed_image, |l| codec.decode(l))
}

impl<M: ScoringMap> Flow<'_, M> {
    fn run<D>(
        &self,
        config: &GuidanceConfig,
        stream: Stream,
        seed_index: usize,
        seed_image: &Image,
        decode: D,
    ) -> Result<SeedExpansion>
    where
        D: Fn(&Latent) -> Result<Image>,
    {
        config.validate()?;
        let objective = GuidanceObjective::new(&self.map, &self.backends.head, self.seed_pred.clone(), config.weights)?;
        let seed_class = self.seed_pred.argmax_class();
        let k = config.ratio_k;
        let shape = self.seed_latent.shape();

        let mut streams: Vec<Vec<u64>> = vec![Vec::new(); k];
        let mut params = Vec::with_capacity(k);
        for (v, ids) in streams.iter_mut().enumerate() {
            let s = stream.derive("variant", v as u64);
            ids.push(s.id());
            params.push(init_variant(shape, config.noise_mode, s)?);
        }
        let initial_latents = apply_perturbations(&self.seed_latent, &params, config.epsilon)?;
        let initial_preds = objective.predictions(&initial_latents)?;
        let scores_initial = self.per_variant_scores(&initial_preds, &initial_latents, config)?;

        let mut outcome = ascend(&self.seed_latent, params, &vec![false; k], &objective, config)?;
        let trace = outcome.trace.clone();
        let mut retry_count = vec![0usize; k];
        for attempt in 1..=config.retries {
            let preds = objective.predictions(&outcome.latents)?;
            let bad: Vec<bool> = preds.iter().map(|p| p.argmax_class() != seed_class).collect();
            if !bad.iter().any(|&b| b) {
                break;
            }
            let mut params = outcome.params.clone();
            for v in (0..k).filter(|&v| bad[v]) {
                let s = stream.derive("variant", v as u64).derive("retry", attempt as u64);
                streams[v].push(s.id());
                params[v] = init_variant(shape, config.noise_mode, s)?;
                retry_count[v] += 1;
            }
            let frozen: Vec<bool> = bad.iter().map(|b| !b).collect();
            outcome = ascend(&self.seed_latent, params, &frozen, &objective, config)?;
        }

        let mut latents = outcome.latents;
        let mut preds = objective.predictions(&latents)?;
        let mut fallback = vec![None; k];
        let reconstruction_consistent = objective.predict(&self.seed_latent)?.argmax_class() == seed_class;
        for v in 0..k {
            if preds[v].argmax_class() != seed_class {
                retry_count[v] += 1;
                latents[v] = self.seed_latent.clone();
                if reconstruction_consistent {
                    preds[v] = objective.predict(&latents[v])?;
                    fallback[v] = Some(Fallback::Reconstruction);
                } else {
                    preds[v] = self.seed_pred.clone();
                    fallback[v] = Some(Fallback::SeedCopy);
                }
            }
        }
        let scores_final = self.per_variant_scores(&preds, &latents, config)?;

        let mut images = Vec::with_capacity(k);
        let mut records = Vec::with_capacity(k);
        for v in 0..k {
            images.push(match fallback[v] {
                Some(Fallback::SeedCopy) => seed_image.clone(),
                _ => decode(&latents[v])?,
            });
            records.push(VariantRecord {
                seed_index,
                variant_index: v,
                method: self.method.to_string(),
                streams: std::mem::take(&mut streams[v]),
                seed_class,
                variant_class: preds[v].argmax_class(),
                scores_initial: scores_initial[v],
                scores_final: scores_final[v],
                consistent: preds[v].argmax_class() == seed_class,
                retry_count: retry_count[v],
                fallback: fallback[v],
                qualified: true,
            });
        }
        Ok(SeedExpansion { images, records, trace })
    }

    fn per_variant_scores(
        &self,
        preds: &[Prediction],
        latents: &[Latent],
        config: &GuidanceConfig,
    ) -> Result<Vec<GuidanceScores>> {
        let div = diversity_terms(latents)?;
        let j = self.seed_pred.argmax_class();
        let h = self.seed_pred.entropy();
        Ok(preds
            .iter()
            .zip(div)
            .map(|(p, d)| GuidanceScores::new(p.probs()[j], p.entropy() - h, d, config.weights))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{gen_toy_dataset, BackendConfig};

    fn backends() -> Backends {
        Backends::toy_prior(4, 16, &BackendConfig::default()).unwrap()
    }

    #[test]
    fn embedding_flow_contract() {
        let b = backends();
        let seeds = gen_toy_dataset(4, 3, 16, 77).unwrap();
        let config = GuidanceConfig::embedding_flow();
        for (i, im) in seeds.images().iter().enumerate() {
            let out = expand_seed_embedding_flow(im, &b, &config, Stream::root(1).derive("seed", i as u64), i).unwrap();
            assert_eq!(out.images.len(), config.ratio_k);
            assert_eq!(out.records.len(), config.ratio_k);
            for r in &out.records {
                assert!(r.consistent);
                assert_eq!(r.variant_class, r.seed_class);
                assert!(r.retry_count <= config.retries + 1);
                assert_eq!(r.method, "gif_embed");
            }
        }
    }

    #[test]
    fn latent_flow_contract() {
        let b = backends();
        let seeds = gen_toy_dataset(4, 3, 16, 78).unwrap();
        let config = GuidanceConfig::latent_flow();
        for (i, im) in seeds.images().iter().enumerate() {
            let out = expand_seed_latent_flow(im, &b, &config, Stream::root(2).derive("seed", i as u64), i).unwrap();
            assert_eq!(out.images.len(), config.ratio_k);
            for (im, r) in out.images.iter().zip(&out.records) {
                assert!(im.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
                assert!(r.consistent);
            }
            assert!(out.trace.max_deviation_per_step.iter().all(|d| *d <= config.epsilon));
        }
    }

    #[test]
    fn fallback_emits_consistent_records() {
        // No retries and a huge radius force fallbacks on at least some seeds.
        let b = backends();
        let seeds = gen_toy_dataset(4, 4, 16, 79).unwrap();
        let config = GuidanceConfig { epsilon: 50.0, retries: 0, ..GuidanceConfig::latent_flow() };
        let mut fallbacks = 0;
        for (i, im) in seeds.images().iter().enumerate() {
            let out = expand_seed_latent_flow(im, &b, &config, Stream::root(3).derive("seed", i as u64), i).unwrap();
            for r in &out.records {
                assert!(r.consistent);
                assert!(r.retry_count <= 1);
                fallbacks += usize::from(r.fallback.is_some());
            }
        }
        assert!(fallbacks > 0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let b = backends();
        let im = Image::filled(8, 8, 1, 0.5).unwrap();
        let config = GuidanceConfig::latent_flow();
        assert!(matches!(expand_seed_latent_flow(&im, &b, &config, Stream::root(0), 0), Err(Error::Shape(_))));
        assert!(matches!(expand_seed_embedding_flow(&im, &b, &config, Stream::root(0), 0), Err(Error::Shape(_))));
    }

    #[test]
    fn deterministic_per_stream() {
        let b = backends();
        let ds = gen_toy_dataset(4, 1, 16, 80).unwrap();
        let im = &ds.images()[2];
        let config = GuidanceConfig::latent_flow();
        let x = expand_seed_latent_flow(im, &b, &config, Stream::root(5), 0).unwrap();
        let y = expand_seed_latent_flow(im, &b, &config, Stream::root(5), 0).unwrap();
        assert_eq!(x.images, y.images);
        assert_eq!(x.records, y.records);
    }
}
