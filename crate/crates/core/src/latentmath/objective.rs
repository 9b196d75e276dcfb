//! The guidance objective as a differentiable function of the perturbation
//! parameters, with its hand-derived gradient and a central-difference oracle.
//!
//! Each variant latent `x` is mapped to a scoring embedding `e = map(x)`,
//! scored against the zero-shot head by cosine affinity and softmax, and the
//! K variants are coupled through the diversity term. Gradients flow back to
//! `(z, b)` through `f' = (1 + z)⊙f + b`; the ε-ball clamp (and any clamp
//! inside the map) is treated as the identity on the backward pass.

use super::kernels::{dot, norm, softmax_unchecked};
use super::latent::{perturb_and_project, Latent, PerturbationParams};
use super::scores::{guidance_objective, mean_latent, GuidanceScores, Prediction, Weights};
use crate::backends::ZeroShotHead;
use crate::error::{Error, Result};

/// Maps a flattened latent into the space the zero-shot head scores.
pub trait ScoringMap: Send + Sync {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn embed(&self, latent: &[f64]) -> Vec<f64>;
    /// Transposed Jacobian applied to `grad` at `latent`.
    fn pullback(&self, latent: &[f64], grad: &[f64]) -> Vec<f64>;
}

/// The latent already lives in the scoring space.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap {
    pub dim: usize,
}

impl ScoringMap for IdentityMap {
    fn input_len(&self) -> usize {
        self.dim
    }

    fn output_len(&self) -> usize {
        self.dim
    }

    fn embed(&self, latent: &[f64]) -> Vec<f64> {
        latent.to_vec()
    }

    fn pullback(&self, _latent: &[f64], grad: &[f64]) -> Vec<f64> {
        grad.to_vec()
    }
}

/// `e = W·x + c` with `W` stored row-major (`outputs × inputs`).
#[derive(Debug, Clone)]
pub struct AffineMap {
    inputs: usize,
    outputs: usize,
    weight: Vec<f64>,
    offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(outputs: usize, inputs: usize, weight: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        if weight.len() != inputs * outputs || offset.len() != outputs {
            return Err(Error::Shape(format!(
                "affine map {outputs}x{inputs} got {} weights and {} offsets",
                weight.len(),
                offset.len()
            )));
        }
        Ok(AffineMap { inputs, outputs, weight, offset })
    }
}

impl ScoringMap for AffineMap {
    fn input_len(&self) -> usize {
        self.inputs
    }

    fn output_len(&self) -> usize {
        self.outputs
    }

    fn embed(&self, latent: &[f64]) -> Vec<f64> {
        self.weight.chunks(self.inputs).zip(&self.offset).map(|(row, c)| dot(row, latent) + c).collect()
    }

    fn pullback(&self, _latent: &[f64], grad: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inputs];
        for (row, g) in self.weight.chunks(self.inputs).zip(grad) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += g * w;
            }
        }
        out
    }
}

/// Scores a set of K variant latents and differentiates with respect to them.
pub trait LatentObjective {
    fn scores(&self, variants: &[Latent]) -> Result<GuidanceScores>;
    /// Gradient of the total w.r.t. each (flattened) variant latent.
    fn latent_gradient(&self, variants: &[Latent]) -> Result<Vec<Vec<f64>>>;
}

/// Consistency + entropy gain + diversity of K variants of one seed.
pub struct GuidanceObjective<'a, M: ScoringMap + ?Sized> {
    map: &'a M,
    head: &'a ZeroShotHead,
    seed: Prediction,
    weights: Weights,
}

impl<'a, M: ScoringMap + ?Sized> GuidanceObjective<'a, M> {
    pub fn new(map: &'a M, head: &'a ZeroShotHead, seed: Prediction, weights: Weights) -> Result<Self> {
        weights.validate()?;
        if map.output_len() != head.embed_dim() {
            return Err(Error::Shape(format!(
                "scoring map emits {} dims, head expects {}",
                map.output_len(),
                head.embed_dim()
            )));
        }
        if seed.classes() != head.classes() {
            return Err(Error::Shape(format!(
                "seed prediction has {} classes, head has {}",
                seed.classes(),
                head.classes()
            )));
        }
        Ok(GuidanceObjective { map, head, seed, weights })
    }

    pub fn seed_prediction(&self) -> &Prediction {
        &self.seed
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    fn check_input(&self, latent: &Latent) -> Result<()> {
        if latent.len() != self.map.input_len() {
            return Err(Error::Shape(format!(
                "latent has {} values, scoring map expects {}",
                latent.len(),
                self.map.input_len()
            )));
        }
        Ok(())
    }

    pub fn predict(&self, latent: &Latent) -> Result<Prediction> {
        self.check_input(latent)?;
        self.head.predict(&self.map.embed(latent.values()))
    }

    pub fn predictions(&self, variants: &[Latent]) -> Result<Vec<Prediction>> {
        variants.iter().map(|v| self.predict(v)).collect()
    }

    fn prediction_gradient(&self, latent: &Latent) -> Result<Vec<f64>> {
        let e = self.map.embed(latent.values());
        let n = norm(&e);
        let pred = self.head.predict(&e)?;
        let p = pred.probs();
        let a = pred.affinities();
        let tau = self.head.tau();

        // dJ/dp
        let mut g_p: Vec<f64> = p.iter().map(|&pi| -self.weights.ent * (pi.ln() + 1.0)).collect();
        g_p[self.seed.argmax_class()] += self.weights.con;
        // through softmax(a / tau)
        let pg = dot(p, &g_p);
        let g_a: Vec<f64> = p.iter().zip(&g_p).map(|(pi, gi)| pi * (gi - pg) / tau).collect();
        // through a_c = w_c·e / (|w_c| |e|)
        let mut g_e = vec![0.0; e.len()];
        for (c, &gc) in g_a.iter().enumerate() {
            if gc == 0.0 {
                continue;
            }
            let w = self.head.prototype(c);
            let wn = norm(w);
            for ((ge, wi), ei) in g_e.iter_mut().zip(w).zip(&e) {
                *ge += gc * (wi / (wn * n) - a[c] * ei / (n * n));
            }
        }
        Ok(self.map.pullback(latent.values(), &g_e))
    }
}

impl<M: ScoringMap + ?Sized> LatentObjective for GuidanceObjective<'_, M> {
    fn scores(&self, variants: &[Latent]) -> Result<GuidanceScores> {
        let preds = self.predictions(variants)?;
        guidance_objective(&self.seed, &preds, variants, self.weights)
    }

    fn latent_gradient(&self, variants: &[Latent]) -> Result<Vec<Vec<f64>>> {
        if variants.is_empty() {
            return Err(Error::Shape("no variants".into()));
        }
        for v in variants {
            self.check_input(v)?;
        }
        let mut grads: Vec<Vec<f64>> = if self.weights.con == 0.0 && self.weights.ent == 0.0 {
            variants.iter().map(|v| vec![0.0; v.len()]).collect()
        } else {
            variants.iter().map(|v| self.prediction_gradient(v)).collect::<Result<_>>()?
        };

        if self.weights.div != 0.0 {
            // KL(q_k || r) with q_k = softmax(x_k), r = softmax(mean x):
            //   d/dx_k = q_k ⊙ (u_k − q_k·u_k) + r − mean_j q_j,  u_k = x_k − mean x
            let k = variants.len() as f64;
            let mean = mean_latent(variants);
            let r = softmax_unchecked(&mean, 1.0);
            let qs: Vec<Vec<f64>> = variants.iter().map(|v| softmax_unchecked(v.values(), 1.0)).collect();
            let mut q_mean = vec![0.0; mean.len()];
            for q in &qs {
                for (m, qi) in q_mean.iter_mut().zip(q) {
                    *m += qi / k;
                }
            }
            for ((g, v), q) in grads.iter_mut().zip(variants).zip(&qs) {
                let u: Vec<f64> = v.values().iter().zip(&mean).map(|(x, m)| x - m).collect();
                let qu = dot(q, &u);
                for i in 0..g.len() {
                    g[i] += self.weights.div * (q[i] * (u[i] - qu) + r[i] - q_mean[i]);
                }
            }
        }
        Ok(grads)
    }
}

/// Project every variant's perturbation around `seed`.
pub fn apply_perturbations(seed: &Latent, params: &[PerturbationParams], epsilon: f64) -> Result<Vec<Latent>> {
    params.iter().map(|p| perturb_and_project(seed, p, epsilon)).collect()
}

/// Objective total as a function of the perturbation parameters.
pub fn params_objective<O: LatentObjective + ?Sized>(
    objective: &O,
    seed: &Latent,
    params: &[PerturbationParams],
    epsilon: f64,
) -> Result<GuidanceScores> {
    objective.scores(&apply_perturbations(seed, params, epsilon)?)
}

/// Gradient of the objective w.r.t. each variant's `(z, b)`, tied by noise mode.
///
/// The projection is straight-through: `∂f'/∂z = f`, `∂f'/∂b = 1` everywhere.
pub fn params_gradient<O: LatentObjective + ?Sized>(
    objective: &O,
    seed: &Latent,
    params: &[PerturbationParams],
    epsilon: f64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let variants = apply_perturbations(seed, params, epsilon)?;
    let grads = objective.latent_gradient(&variants)?;
    let (t, d) = seed.shape();
    Ok(grads
        .into_iter()
        .zip(params)
        .map(|(g, p)| {
            let mut gz: Vec<f64> = g.iter().zip(seed.values()).map(|(gi, fi)| gi * fi).collect();
            let mut gb = g;
            p.mode().tie(t, d, &mut gz);
            p.mode().tie(t, d, &mut gb);
            (gz, gb)
        })
        .collect())
}

/// Default step for [`objective_gradient_fd`].
pub const FD_STEP: f64 = 1e-5;

/// Central-difference gradient `(f(x + h·e_i) − f(x − h·e_i)) / 2h`.
pub fn objective_gradient_fd<F>(mut objective: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Parameter(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = objective(&probe)?;
        probe[i] = x[i] - h;
        let minus = objective(&probe)?;
        probe[i] = x[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NumericInput(format!("objective non-finite near coordinate {i}")));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latentmath::NoiseMode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fd_examples() {
        let g = objective_gradient_fd(|_| Ok(3.0), &[1.0, 2.0], FD_STEP).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let c = [0.5, -2.0, 7.0];
        let g = objective_gradient_fd(|x| Ok(dot(&c, x)), &[1.0, 2.0, 3.0], FD_STEP).unwrap();
        for (gi, ci) in g.iter().zip(&c) {
            assert!((gi - ci).abs() < 1e-9);
        }
        let g = objective_gradient_fd(|x| Ok(dot(x, x)), &[1.0, 2.0], FD_STEP).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn fd_errors() {
        assert!(matches!(objective_gradient_fd(|_| Ok(0.0), &[1.0], 0.0), Err(Error::Parameter(_))));
        assert!(matches!(objective_gradient_fd(|_| Ok(f64::NAN), &[1.0], 1e-5), Err(Error::NumericInput(_))));
    }

    fn random_head(rng: &mut ChaCha8Rng, classes: usize, dim: usize) -> ZeroShotHead {
        let rows: Vec<f64> = (0..classes * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        ZeroShotHead::from_rows(classes, dim, rows, 1.0).unwrap()
    }

    #[test]
    fn channel_mode_gradient_matches_shared_parameter_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (t, d, e, c) = (3, 4, 5, 3);
        let head = random_head(&mut rng, c, e);
        let weight: Vec<f64> = (0..e * t * d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let map = AffineMap::new(e, t * d, weight, vec![0.1; e]).unwrap();
        let seed = Latent::new(t, d, (0..t * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let seed_pred = head.predict(&map.embed(seed.values())).unwrap();
        let obj = GuidanceObjective::new(&map, &head, seed_pred, Weights::default()).unwrap();

        // Shared parameters: d values of z and d values of b per variant.
        let k = 2;
        let theta: Vec<f64> = (0..k * 2 * d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let build = |theta: &[f64]| -> Vec<PerturbationParams> {
            (0..k)
                .map(|v| {
                    let zs = &theta[v * 2 * d..v * 2 * d + d];
                    let bs = &theta[v * 2 * d + d..(v + 1) * 2 * d];
                    let z: Vec<f64> = (0..t).flat_map(|_| zs.iter().copied()).collect();
                    let b: Vec<f64> = (0..t).flat_map(|_| bs.iter().copied()).collect();
                    PerturbationParams::new(t, d, z, b, NoiseMode::Channel).unwrap()
                })
                .collect()
        };
        let fd = objective_gradient_fd(
            |th| Ok(params_objective(&obj, &seed, &build(th), f64::INFINITY)?.total),
            &theta,
            FD_STEP,
        )
        .unwrap();
        let analytic = params_gradient(&obj, &seed, &build(&theta), f64::INFINITY).unwrap();
        for v in 0..k {
            for j in 0..d {
                let gz = analytic[v].0[j];
                let gb = analytic[v].1[j];
                assert!((gz - fd[v * 2 * d + j]).abs() < 1e-6, "z {v} {j}");
                assert!((gb - fd[v * 2 * d + d + j]).abs() < 1e-6, "b {v} {j}");
            }
        }
    }

    #[test]
    fn zero_weights_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let head = random_head(&mut rng, 3, 4);
        let map = IdentityMap { dim: 4 };
        let seed = Latent::row(vec![0.3, -0.2, 0.5, 0.1]).unwrap();
        let obj = GuidanceObjective::new(&map, &head, head.predict(seed.values()).unwrap(), Weights::ZERO).unwrap();
        let variants = vec![seed.clone(), Latent::row(vec![1.0, 0.0, 0.0, 0.0]).unwrap()];
        for g in obj.latent_gradient(&variants).unwrap() {
            assert!(g.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let head = random_head(&mut rng, 3, 4);
        let map = IdentityMap { dim: 5 };
        let seed_pred = Prediction::from_probs(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(matches!(GuidanceObjective::new(&map, &head, seed_pred, Weights::default()), Err(Error::Shape(_))));
    }
}
