//! Zero-shot predictions and the three guidance scores.

use serde::{Deserialize, Serialize};

use super::kernels::{argmax, entropy_unchecked, kl_unchecked, softmax, softmax_unchecked, SIMPLEX_TOL};
use super::latent::Latent;
use crate::error::{Error, Result};

/// Per-class affinities, their softmax and the predicted class.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    affinities: Vec<f64>,
    probs: Vec<f64>,
    argmax_class: usize,
}

impl Prediction {
    /// Softmax of cosine affinities at temperature `tau`.
    pub fn from_affinities(affinities: Vec<f64>, tau: f64) -> Result<Self> {
        if affinities.len() < 2 {
            return Err(Error::Shape(format!("need at least 2 classes, got {}", affinities.len())));
        }
        let probs = softmax(&affinities, tau)?;
        let argmax_class = argmax(&probs);
        Ok(Prediction { affinities, probs, argmax_class })
    }

    /// A prediction given directly by its probabilities; affinities mirror them.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Shape(format!("need at least 2 classes, got {}", probs.len())));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Simplex(format!("{probs:?}")));
        }
        let argmax_class = argmax(&probs);
        Ok(Prediction { affinities: probs.clone(), probs, argmax_class })
    }

    pub fn affinities(&self) -> &[f64] {
        &self.affinities
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn argmax_class(&self) -> usize {
        self.argmax_class
    }

    pub fn classes(&self) -> usize {
        self.probs.len()
    }

    pub fn entropy(&self) -> f64 {
        entropy_unchecked(&self.probs)
    }
}

/// Nonnegative weights of consistency, entropy gain and diversity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub con: f64,
    pub ent: f64,
    pub div: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { con: 1.0, ent: 1.0, div: 1.0 }
    }
}

impl Weights {
    pub const ZERO: Weights = Weights { con: 0.0, ent: 0.0, div: 0.0 };

    pub fn new(con: f64, ent: f64, div: f64) -> Result<Self> {
        let w = Weights { con, ent, div };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("con", self.con), ("ent", self.ent), ("div", self.div)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parameter(format!("weight λ_{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Short tag such as `con+ent+div` or `none`.
    pub fn tag(&self) -> String {
        let parts: Vec<&str> = [("con", self.con), ("ent", self.ent), ("div", self.div)]
            .iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(n, _)| *n)
            .collect();
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Component scores and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceScores {
    pub s_con: f64,
    pub s_ent: f64,
    pub s_div: f64,
    pub total: f64,
    pub weights: Weights,
}

impl GuidanceScores {
    pub fn new(s_con: f64, s_ent: f64, s_div: f64, weights: Weights) -> Self {
        let total = weights.con * s_con + weights.ent * s_ent + weights.div * s_div;
        GuidanceScores { s_con, s_ent, s_div, total, weights }
    }

    pub fn is_finite(&self) -> bool {
        self.s_con.is_finite() && self.s_ent.is_finite() && self.s_div.is_finite() && self.total.is_finite()
    }
}

fn same_classes(s: &Prediction, s_prime: &Prediction) -> Result<()> {
    if s.classes() != s_prime.classes() {
        return Err(Error::Shape(format!("{} vs {} classes", s.classes(), s_prime.classes())));
    }
    Ok(())
}

/// Probability the perturbed prediction assigns to the seed's predicted class.
pub fn consistency_score(s: &Prediction, s_prime: &Prediction) -> Result<f64> {
    same_classes(s, s_prime)?;
    Ok(s_prime.probs[s.argmax_class])
}

/// `H(s') − H(s)` in nats.
pub fn entropy_gain(s: &Prediction, s_prime: &Prediction) -> Result<f64> {
    same_classes(s, s_prime)?;
    Ok(s_prime.entropy() - s.entropy())
}

/// Sum over variants of `KL(softmax(f'_k) ‖ softmax(mean_k f'_k))` on flattened latents.
pub fn diversity_score(variants: &[Latent]) -> Result<f64> {
    let first = variants.first().ok_or_else(|| Error::Shape("diversity of zero variants".into()))?;
    if let Some(bad) = variants.iter().find(|v| v.shape() != first.shape()) {
        return Err(Error::Shape(format!("variant shapes {:?} and {:?}", first.shape(), bad.shape())));
    }
    let mean = mean_latent(variants);
    let reference = softmax_unchecked(&mean, 1.0);
    Ok(variants.iter().map(|v| kl_unchecked(&softmax_unchecked(v.values(), 1.0), &reference)).sum())
}

/// Per-variant terms `KL(softmax(f'_k) ‖ softmax(f̄))`; they sum to [`diversity_score`].
pub fn diversity_terms(variants: &[Latent]) -> Result<Vec<f64>> {
    diversity_score(variants)?;
    let reference = softmax_unchecked(&mean_latent(variants), 1.0);
    Ok(variants.iter().map(|v| kl_unchecked(&softmax_unchecked(v.values(), 1.0), &reference)).collect())
}

pub(crate) fn mean_latent(variants: &[Latent]) -> Vec<f64> {
    let k = variants.len() as f64;
    let mut mean = vec![0.0; variants[0].len()];
    for v in variants {
        for (m, x) in mean.iter_mut().zip(v.values()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= k;
    }
    mean
}

/// Weighted sum of consistency, entropy gain and diversity across the K variants of one seed.
pub fn guidance_objective(
    s: &Prediction,
    s_primes: &[Prediction],
    variants: &[Latent],
    weights: Weights,
) -> Result<GuidanceScores> {
    if s_primes.is_empty() || s_primes.len() != variants.len() {
        return Err(Error::Shape(format!("{} predictions for {} variants", s_primes.len(), variants.len())));
    }
    let mut s_con = 0.0;
    let mut s_ent = 0.0;
    for sp in s_primes {
        s_con += consistency_score(s, sp)?;
        s_ent += entropy_gain(s, sp)?;
    }
    let s_div = diversity_score(variants)?;
    Ok(GuidanceScores::new(s_con, s_ent, s_div, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pred(p: &[f64]) -> Prediction {
        Prediction::from_probs(p.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-6
    }

    #[test]
    fn consistency_examples() {
        let s = pred(&[0.7, 0.2, 0.1]);
        assert!(close(consistency_score(&s, &pred(&[0.4, 0.5, 0.1])).unwrap(), 0.4));
        assert!(close(consistency_score(&s, &s).unwrap(), 0.7));
        let tie = pred(&[0.5, 0.5]);
        assert_eq!(tie.argmax_class(), 0);
        assert!(close(consistency_score(&tie, &pred(&[0.3, 0.7])).unwrap(), 0.3));
        assert!(matches!(consistency_score(&s, &tie), Err(Error::Shape(_))));
    }

    #[test]
    fn entropy_gain_examples() {
        let s = pred(&[0.9, 0.1]);
        assert_eq!(entropy_gain(&s, &s).unwrap(), 0.0);
        assert!(close(entropy_gain(&s, &pred(&[0.5, 0.5])).unwrap(), 0.368064));
        let uniform = pred(&[0.25; 4]);
        let onehot = pred(&[0.0, 1.0, 0.0, 0.0]);
        assert!(close(entropy_gain(&uniform, &onehot).unwrap(), -(4f64.ln())));
    }

    #[test]
    fn diversity_examples() {
        let a = Latent::row(vec![0.4, -1.0, 2.0]).unwrap();
        assert_eq!(diversity_score(&[a.clone(), a.clone(), a.clone()]).unwrap(), 0.0);
        assert_eq!(diversity_score(std::slice::from_ref(&a)).unwrap(), 0.0);
        let f1 = Latent::row(vec![1.0, 0.0]).unwrap();
        let f2 = Latent::row(vec![0.0, 1.0]).unwrap();
        assert!(close(diversity_score(&[f1, f2]).unwrap(), 0.221888));
        let other = Latent::row(vec![1.0]).unwrap();
        assert!(matches!(diversity_score(&[a, other]), Err(Error::Shape(_))));
        assert!(diversity_score(&[]).is_err());
    }

    #[test]
    fn objective_examples() {
        let s = pred(&[0.9, 0.1]);
        let v = Latent::row(vec![0.5, 0.25]).unwrap();
        let w = Weights::new(2.0, 1.0, 1.0).unwrap();
        let g =
            guidance_objective(&s, &[s.clone(), s.clone(), s.clone()], &[v.clone(), v.clone(), v.clone()], w).unwrap();
        assert!(close(g.total, 2.0 * 3.0 * 0.9));
        let zero = guidance_objective(&s, &[pred(&[0.5, 0.5])], &[v], Weights::ZERO).unwrap();
        assert_eq!(zero.total, 0.0);
    }

    #[test]
    fn objective_composite_two_variants() {
        // Oracle values from an independent numpy evaluation.
        let s = pred(&[0.9, 0.1]);
        let sp = [pred(&[0.5, 0.5]), pred(&[0.7, 0.3])];
        let f = [Latent::row(vec![1.0, 0.0]).unwrap(), Latent::row(vec![0.0, 1.0]).unwrap()];
        let unit = guidance_objective(&s, &sp, &f, Weights::default()).unwrap();
        assert!(close(unit.s_con, 1.2));
        assert!(close(unit.s_ent, 0.653845536));
        assert!(close(unit.s_div, 0.221888143));
        assert!(close(unit.total, 2.075733679));
        let weighted = guidance_objective(&s, &sp, &f, Weights::new(2.0, 0.5, 3.0).unwrap()).unwrap();
        assert!(close(weighted.total, 3.392587198));
    }

    #[test]
    fn weights_validation_and_tags() {
        assert!(Weights::new(-1.0, 0.0, 0.0).is_err());
        assert!(Weights::new(f64::NAN, 0.0, 0.0).is_err());
        assert_eq!(Weights::ZERO.tag(), "none");
        assert_eq!(Weights::default().tag(), "con+ent+div");
        assert_eq!(Weights::new(1.0, 1.0, 0.0).unwrap().tag(), "con+ent");
    }

    proptest! {
        #[test]
        fn diversity_permutation_invariant(
            vals in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 6), 1..6),
            rot in 0usize..6,
        ) {
            let lats: Vec<Latent> = vals.iter().map(|v| Latent::row(v.clone()).unwrap()).collect();
            let mut perm = lats.clone();
            perm.rotate_left(rot % lats.len());
            perm.reverse();
            let a = diversity_score(&lats).unwrap();
            let b = diversity_score(&perm).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
