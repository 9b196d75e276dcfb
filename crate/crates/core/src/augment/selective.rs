//! Selective expansion: generate augmentation candidates per seed and keep
//! those with the seed's zero-shot prediction and strictly higher entropy.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AugmentSpec;
use crate::backends::{Embedder, Image, LabeledDataset, ZeroShotHead};
use crate::error::{Error, Result};
use crate::guidance::VariantRecord;
use crate::latentmath::{GuidanceScores, Weights};
use crate::rng::Stream;

/// Budget multiplier when none is given: candidates per seed = 4 × quota.
pub const DEFAULT_BUDGET_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Every seed gets exactly `quota` samples.
    #[default]
    SampleWise,
    /// Global top `N·quota` regardless of seed.
    SampleAgnostic,
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::SampleWise => "sample_wise",
            SelectionMode::SampleAgnostic => "sample_agnostic",
        })
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "sample_wise" => Ok(SelectionMode::SampleWise),
            "sample_agnostic" => Ok(SelectionMode::SampleAgnostic),
            other => Err(Error::Parameter(format!("unknown selection mode `{other}`"))),
        }
    }
}

/// What the selection rule needs to know about one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub seed_index: usize,
    pub stream_id: u64,
    pub entropy: f64,
    pub entropy_gain: f64,
    pub consistent: bool,
}

impl CandidateScore {
    /// Same predicted class as the seed and strictly higher entropy.
    pub fn qualified(&self) -> bool {
        self.consistent && self.entropy_gain > 0.0
    }

    fn tier(&self) -> u8 {
        if self.qualified() {
            0
        } else if self.consistent {
            1
        } else {
            2
        }
    }
}

/// Preference order: qualified by gain, then consistent by entropy, then the rest; ties by stream id.
fn preference(a: &CandidateScore, b: &CandidateScore) -> Ordering {
    a.tier()
        .cmp(&b.tier())
        .then_with(|| match a.tier() {
            0 => b.entropy_gain.total_cmp(&a.entropy_gain),
            1 => b.entropy.total_cmp(&a.entropy),
            _ => Ordering::Equal,
        })
        .then(a.stream_id.cmp(&b.stream_id))
}

/// Indices of the selected candidates, grouped by seed (ascending) in preference order.
pub fn select_candidates(candidates: &[CandidateScore], seeds: usize, quota: usize, mode: SelectionMode) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| preference(&candidates[i], &candidates[j]));
    let mut picked: Vec<usize> = match mode {
        SelectionMode::SampleWise => {
            let mut taken = vec![0usize; seeds];
            order
                .into_iter()
                .filter(|&i| {
                    let s = candidates[i].seed_index;
                    let keep = taken[s] < quota;
                    taken[s] += usize::from(keep);
                    keep
                })
                .collect()
        }
        SelectionMode::SampleAgnostic => order.into_iter().take(seeds * quota).collect(),
    };
    // Stable regroup by seed keeps the preference order within each seed.
    picked.sort_by_key(|&i| candidates[i].seed_index);
    picked
}

/// Synthetic samples chosen by [`selective_expand`].
#[derive(Debug, Clone)]
pub struct Selection {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub records: Vec<VariantRecord>,
}

impl Selection {
    /// Number of selected samples per seed.
    pub fn per_seed_counts(&self, seeds: usize) -> Vec<usize> {
        let mut counts = vec![0; seeds];
        for r in &self.records {
            counts[r.seed_index] += 1;
        }
        counts
    }
}

struct Candidate {
    image: Image,
    score: CandidateScore,
    class: usize,
    consistency: f64,
}

/// Expand `seeds` by augmentation plus zero-shot filtering.
///
/// `seed_streams[i]` seeds the candidate draws for seed `i`; candidate `c`
/// uses `seed_streams[i].derive("candidate", c)`.
#[allow(clippy::too_many_arguments)]
pub fn selective_expand(
    seeds: &LabeledDataset,
    augmenter: &AugmentSpec,
    embedder: &Embedder,
    head: &ZeroShotHead,
    quota_k: usize,
    mode: SelectionMode,
    candidate_budget: usize,
    seed_streams: &[Stream],
    method: &str,
) -> Result<Selection> {
    if quota_k == 0 {
        return Err(Error::Parameter("quota_k must be at least 1".into()));
    }
    if candidate_budget < quota_k {
        return Err(Error::Parameter(format!("candidate_budget {candidate_budget} is below quota_k {quota_k}")));
    }
    if seed_streams.len() != seeds.len() {
        return Err(Error::Shape(format!("{} streams for {} seeds", seed_streams.len(), seeds.len())));
    }
    augmenter.validate()?;

    let per_seed: Vec<(usize, Vec<Candidate>)> = seeds
        .images()
        .par_iter()
        .enumerate()
        .map(|(i, im)| {
            let seed_pred = head.predict(&embedder.embed(im)?)?;
            let j = seed_pred.argmax_class();
            let h = seed_pred.entropy();
            let cands = (0..candidate_budget)
                .map(|c| {
                    let stream = seed_streams[i].derive("candidate", c as u64);
                    let image = augmenter.apply(im, stream);
                    let pred = head.predict(&embedder.embed(&image)?)?;
                    Ok(Candidate {
                        score: CandidateScore {
                            seed_index: i,
                            stream_id: stream.id(),
                            entropy: pred.entropy(),
                            entropy_gain: pred.entropy() - h,
                            consistent: pred.argmax_class() == j,
                        },
                        class: pred.argmax_class(),
                        consistency: pred.probs()[j],
                        image,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((j, cands))
        })
        .collect::<Result<_>>()?;

    let mut seed_classes = Vec::with_capacity(per_seed.len());
    let mut all: Vec<Candidate> = Vec::with_capacity(seeds.len() * candidate_budget);
    for (j, cands) in per_seed {
        seed_classes.push(j);
        all.extend(cands);
    }
    let scores: Vec<CandidateScore> = all.iter().map(|c| c.score).collect();
    let picked = select_candidates(&scores, seeds.len(), quota_k, mode);

    let weights = Weights { con: 1.0, ent: 1.0, div: 0.0 };
    let mut per_seed_rank = vec![0usize; seeds.len()];
    let mut out = Selection { images: Vec::new(), labels: Vec::new(), records: Vec::new() };
    for i in picked {
        let c = &all[i];
        let s = c.score.seed_index;
        let scores = GuidanceScores::new(c.consistency, c.score.entropy_gain, 0.0, weights);
        out.images.push(c.image.clone());
        out.labels.push(seeds.labels()[s]);
        out.records.push(VariantRecord {
            seed_index: s,
            variant_index: per_seed_rank[s],
            method: method.to_string(),
            streams: vec![c.score.stream_id],
            seed_class: seed_classes[s],
            variant_class: c.class,
            scores_initial: scores,
            scores_final: scores,
            consistent: c.score.consistent,
            retry_count: 0,
            fallback: None,
            qualified: c.score.qualified(),
        });
        per_seed_rank[s] += 1;
    }
    Ok(out)
}
