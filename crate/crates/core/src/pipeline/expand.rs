use rayon::prelude::*;

use super::{dataset_digest, sample_digest, ExpansionConfig, ExpansionManifest, MethodId, TOOL_VERSION};
use crate::augment::{selective_expand, AugmentSpec};
use crate::backends::{Backends, Image, LabeledDataset};
use crate::error::{Error, Result};
use crate::guidance::{expand_seed_embedding_flow, expand_seed_latent_flow, VariantRecord};
use crate::latentmath::{GuidanceScores, Weights};
use crate::rng::Stream;

/// Stream for one seed, keyed by the seed's content rather than its position.
pub fn seed_stream(global_seed: u64, image: &Image, label: usize) -> Stream {
    Stream::root(global_seed).derive("seed", sample_digest(image, label))
}

/// Run `f` on a pool of `workers` threads (0 = one per core).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Originals followed by `K·N` synthetic samples grouped by seed, plus the manifest.
pub fn expand_dataset(
    dataset: &LabeledDataset,
    method: MethodId,
    config: &ExpansionConfig,
    backends: &Backends,
    global_seed: u64,
) -> Result<(LabeledDataset, ExpansionManifest)> {
    if dataset.is_empty() {
        return Err(Error::Input("cannot expand an empty dataset".into()));
    }
    config.validate(method)?;
    backends.check_dataset(dataset)?;
    let streams: Vec<Stream> = dataset.iter().map(|(im, l)| seed_stream(global_seed, im, l)).collect();

    let (images, records) = match (method, config.augment) {
        (MethodId::GifEmbed | MethodId::GifLatent, _) => {
            let per_seed = dataset
                .images()
                .par_iter()
                .enumerate()
                .map(|(i, im)| match method {
                    MethodId::GifEmbed => expand_seed_embedding_flow(im, backends, &config.guidance, streams[i], i),
                    _ => expand_seed_latent_flow(im, backends, &config.guidance, streams[i], i),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut images = Vec::new();
            let mut records = Vec::new();
            for s in per_seed {
                images.extend(s.images);
                records.extend(s.records);
            }
            (images, records)
        }
        (_, Some(spec)) if method.is_selective() => {
            let sel = selective_expand(
                dataset,
                &spec,
                &backends.embedder,
                &backends.head,
                config.ratio_k(),
                config.selection,
                config.budget(),
                &streams,
                method.name(),
            )?;
            (sel.images, sel.records)
        }
        (_, Some(spec)) => random_augment(dataset, &spec, backends, config.ratio_k(), &streams, method)?,
        (_, None) => return Err(Error::Parameter(format!("method {method} needs an augmentation"))),
    };

    let labels: Vec<usize> = records.iter().map(|r| dataset.labels()[r.seed_index]).collect();
    let expanded = dataset.extended(images, labels)?;
    let manifest = ExpansionManifest {
        tool_version: TOOL_VERSION.to_string(),
        global_seed,
        method,
        config: *config,
        seed_count: dataset.len(),
        ratio_k: config.ratio_k(),
        record_count: records.len(),
        records,
        original_digest: dataset_digest(dataset),
        expanded_digest: dataset_digest(&expanded),
    };
    manifest.check()?;
    Ok((expanded, manifest))
}

fn random_augment(
    dataset: &LabeledDataset,
    spec: &AugmentSpec,
    backends: &Backends,
    k: usize,
    streams: &[Stream],
    method: MethodId,
) -> Result<(Vec<Image>, Vec<VariantRecord>)> {
    let weights = Weights { con: 1.0, ent: 1.0, div: 0.0 };
    let per_seed = dataset
        .images()
        .par_iter()
        .enumerate()
        .map(|(i, im)| {
            let seed_pred = backends.head.predict(&backends.embedder.embed(im)?)?;
            let j = seed_pred.argmax_class();
            let mut out = Vec::with_capacity(k);
            for v in 0..k {
                let stream = streams[i].derive("variant", v as u64);
                let image = spec.apply(im, stream);
                let pred = backends.head.predict(&backends.embedder.embed(&image)?)?;
                let gain = pred.entropy() - seed_pred.entropy();
                let scores = GuidanceScores::new(pred.probs()[j], gain, 0.0, weights);
                let consistent = pred.argmax_class() == j;
                let record = VariantRecord {
                    seed_index: i,
                    variant_index: v,
                    method: method.name().to_string(),
                    streams: vec![stream.id()],
                    seed_class: j,
                    variant_class: pred.argmax_class(),
                    scores_initial: scores,
                    scores_final: scores,
                    consistent,
                    retry_count: 0,
                    fallback: None,
                    qualified: consistent && gain > 0.0,
                };
                out.push((image, record));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seed.into_iter().flatten().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{gen_toy_dataset, BackendConfig};

    #[test]
    fn count_and_preservation_contract() {
        let backends = Backends::toy_prior(4, 16, &BackendConfig::default()).unwrap();
        let data = gen_toy_dataset(4, 2, 16, 11).unwrap();
        for method in MethodId::ALL {
            let config = ExpansionConfig::for_method(method).with_ratio(3);
            let (out, manifest) = expand_dataset(&data, method, &config, &backends, 5).unwrap();
            assert_eq!(out.len(), 4 * data.len(), "{method}");
            assert_eq!(&out.images()[..data.len()], data.images());
            assert_eq!(manifest.record_count, 3 * data.len());
            for (r, &l) in manifest.records.iter().zip(&out.labels()[data.len()..]) {
                assert_eq!(l, data.labels()[r.seed_index]);
            }
        }
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let backends = Backends::toy_prior(4, 16, &BackendConfig::default()).unwrap();
        let config = ExpansionConfig::for_method(MethodId::Cutout);
        let empty = LabeledDataset::new(vec![], vec![], vec!["a".into(), "b".into()]).unwrap();
        assert!(matches!(expand_dataset(&empty, MethodId::Cutout, &config, &backends, 0), Err(Error::Input(_))));
        let small = gen_toy_dataset(4, 1, 8, 0).unwrap();
        assert!(matches!(expand_dataset(&small, MethodId::Cutout, &config, &backends, 0), Err(Error::Shape(_))));
    }
}
