use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{GuidanceConfig, OptimizationTrace};
use crate::error::{Error, Result};
use crate::latentmath::{apply_perturbations, params_gradient, Latent, LatentObjective, NoiseMode, PerturbationParams};
use crate::rng::Stream;

/// Draw `z ~ U[0,1)`, `b ~ N(0,1)` for one variant, broadcast per `mode`.
pub fn init_variant(shape: (usize, usize), mode: NoiseMode, stream: Stream) -> Result<PerturbationParams> {
    let (t, d) = shape;
    let mut rng = stream.rng();
    let free = match mode {
        NoiseMode::Full => t * d,
        NoiseMode::Channel => d,
        NoiseMode::Token => t,
    };
    let z_free: Vec<f64> = (0..free).map(|_| rng.random::<f64>()).collect();
    let b_free: Vec<f64> = (0..free).map(|_| StandardNormal.sample(&mut rng)).collect();
    let broadcast = |v: &[f64]| -> Vec<f64> {
        match mode {
            NoiseMode::Full => v.to_vec(),
            NoiseMode::Channel => (0..t).flat_map(|_| v.iter().copied()).collect(),
            NoiseMode::Token => v.iter().flat_map(|&x| std::iter::repeat_n(x, d)).collect(),
        }
    };
    PerturbationParams::new(t, d, broadcast(&z_free), broadcast(&b_free), mode)
}

/// K independent initializations; variant `v` draws from `stream.derive("variant", v)`.
pub fn init_perturbations(
    shape: (usize, usize),
    k: usize,
    mode: NoiseMode,
    stream: Stream,
) -> Result<Vec<PerturbationParams>> {
    if k == 0 {
        return Err(Error::Parameter("need at least one variant".into()));
    }
    (0..k).map(|v| init_variant(shape, mode, stream.derive("variant", v as u64))).collect()
}

/// Result of one guided optimization.
#[derive(Debug, Clone)]
pub struct GuidanceOutcome {
    pub latents: Vec<Latent>,
    pub params: Vec<PerturbationParams>,
    pub trace: OptimizationTrace,
}

/// Initialize K perturbations of `seed` and run `config.steps` projected
/// gradient-ascent steps on all of them jointly.
pub fn optimize_guidance<O: LatentObjective + ?Sized>(
    seed: &Latent,
    objective: &O,
    config: &GuidanceConfig,
    stream: Stream,
) -> Result<GuidanceOutcome> {
    config.validate()?;
    let params = init_perturbations(seed.shape(), config.ratio_k, config.noise_mode, stream)?;
    let frozen = vec![false; params.len()];
    ascend(seed, params, &frozen, objective, config)
}

/// Ascend from `params`, leaving variants with `frozen[k]` untouched.
pub(crate) fn ascend<O: LatentObjective + ?Sized>(
    seed: &Latent,
    mut params: Vec<PerturbationParams>,
    frozen: &[bool],
    objective: &O,
    config: &GuidanceConfig,
) -> Result<GuidanceOutcome> {
    let mut trace = OptimizationTrace::default();
    let mut latents = apply_perturbations(seed, &params, config.epsilon)?;
    record(&mut trace, seed, &latents, objective, 0)?;
    for step in 1..=config.steps {
        let grads = params_gradient(objective, seed, &params, config.epsilon)?;
        for ((p, (gz, gb)), &fixed) in params.iter_mut().zip(&grads).zip(frozen) {
            if fixed {
                continue;
            }
            if gz.iter().chain(gb).any(|g| !g.is_finite()) {
                return Err(Error::Divergence { step });
            }
            p.step(config.step_size, gz, gb);
        }
        latents = apply_perturbations(seed, &params, config.epsilon).map_err(|e| match e {
            Error::NumericInput(_) => Error::Divergence { step },
            other => other,
        })?;
        record(&mut trace, seed, &latents, objective, step)?;
    }
    Ok(GuidanceOutcome { latents, params, trace })
}

fn record<O: LatentObjective + ?Sized>(
    trace: &mut OptimizationTrace,
    seed: &Latent,
    latents: &[Latent],
    objective: &O,
    step: usize,
) -> Result<()> {
    let scores = objective.scores(latents).map_err(|e| match e {
        Error::NumericInput(_) | Error::DegenerateVector(_) => Error::Divergence { step },
        other => other,
    })?;
    if !scores.is_finite() {
        return Err(Error::Divergence { step });
    }
    trace.objective_per_step.push(scores.total);
    trace.scores_per_step.push(scores);
    trace.max_deviation_per_step.push(latents.iter().map(|l| l.linf_distance(seed)).fold(0.0, f64::max));
    Ok(())
}
