//! Latent matrices, perturbation parameters and the ε-ball projection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `tokens × channels` real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    tokens: usize,
    channels: usize,
    values: Vec<f64>,
}

impl Latent {
    pub fn new(tokens: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if tokens == 0 || channels == 0 {
            return Err(Error::Shape(format!("latent shape {tokens}x{channels} is empty")));
        }
        if values.len() != tokens * channels {
            return Err(Error::Shape(format!(
                "latent {tokens}x{channels} needs {} values, got {}",
                tokens * channels,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericInput(format!("latent value {i} is {}", values[i])));
        }
        Ok(Latent { tokens, channels, values })
    }

    /// Single-token latent, the shape used for embedding-space optimization.
    pub fn row(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Latent::new(1, n, values)
    }

    pub fn zeros(tokens: usize, channels: usize) -> Self {
        Latent { tokens, channels, values: vec![0.0; tokens * channels] }
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.tokens, self.channels)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, token: usize, channel: usize) -> f64 {
        self.values[token * self.channels + channel]
    }

    /// Largest absolute elementwise difference.
    pub fn linf_distance(&self, other: &Latent) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// How noise and bias are shared across the latent matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Independent value per entry.
    #[default]
    Full,
    /// One value per channel column, shared by all tokens.
    Channel,
    /// One value per token row, shared by all channels.
    Token,
}

impl NoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::Full => "full",
            NoiseMode::Channel => "channel",
            NoiseMode::Token => "token",
        }
    }

    /// Replace `grad` (gradient w.r.t. every entry) by the gradient w.r.t. the
    /// shared parameter each entry is tied to.
    pub fn tie(self, tokens: usize, channels: usize, grad: &mut [f64]) {
        match self {
            NoiseMode::Full => {}
            NoiseMode::Channel => {
                for d in 0..channels {
                    let s: f64 = (0..tokens).map(|t| grad[t * channels + d]).sum();
                    for t in 0..tokens {
                        grad[t * channels + d] = s;
                    }
                }
            }
            NoiseMode::Token => {
                for row in grad.chunks_mut(channels) {
                    let s: f64 = row.iter().sum();
                    row.fill(s);
                }
            }
        }
    }

    fn respects(self, tokens: usize, channels: usize, m: &[f64]) -> bool {
        match self {
            NoiseMode::Full => true,
            NoiseMode::Channel => (1..tokens).all(|t| m[t * channels..(t + 1) * channels] == m[..channels]),
            NoiseMode::Token => m.chunks(channels).all(|row| row.iter().all(|v| *v == row[0])),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "pixel" => Ok(NoiseMode::Full),
            "channel" => Ok(NoiseMode::Channel),
            "token" => Ok(NoiseMode::Token),
            other => Err(Error::Parameter(format!("unknown noise mode `{other}` (full, channel, token)"))),
        }
    }
}

/// Multiplicative noise `z` and additive bias `b` for one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationParams {
    tokens: usize,
    channels: usize,
    pub(crate) z: Vec<f64>,
    pub(crate) b: Vec<f64>,
    mode: NoiseMode,
}

impl PerturbationParams {
    pub fn new(tokens: usize, channels: usize, z: Vec<f64>, b: Vec<f64>, mode: NoiseMode) -> Result<Self> {
        let n = tokens * channels;
        if n == 0 || z.len() != n || b.len() != n {
            return Err(Error::Shape(format!("perturbation for {tokens}x{channels} got z={} b={}", z.len(), b.len())));
        }
        if !mode.respects(tokens, channels, &z) || !mode.respects(tokens, channels, &b) {
            return Err(Error::Parameter(format!("z/b are not broadcast along the {mode} axis")));
        }
        Ok(PerturbationParams { tokens, channels, z, b, mode })
    }

    /// The identity perturbation `z = 0, b = 0`.
    pub fn identity(tokens: usize, channels: usize, mode: NoiseMode) -> Self {
        let n = tokens * channels;
        PerturbationParams { tokens, channels, z: vec![0.0; n], b: vec![0.0; n], mode }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.tokens, self.channels)
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    /// Gradient step `z += rate·gz`, `b += rate·gb` with gradients already tied.
    pub(crate) fn step(&mut self, rate: f64, gz: &[f64], gb: &[f64]) {
        for (z, g) in self.z.iter_mut().zip(gz) {
            *z += rate * g;
        }
        for (b, g) in self.b.iter_mut().zip(gb) {
            *b += rate * g;
        }
    }
}

/// `clamp((1 + z)⊙f + b, f − ε, f + ε)`, elementwise.
///
/// The clamp is applied to the offset from `f` and then nudged so that the
/// floating-point difference `f' − f` never exceeds `ε`.
pub fn perturb_and_project(f: &Latent, params: &PerturbationParams, epsilon: f64) -> Result<Latent> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::Parameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if f.shape() != params.shape() {
        return Err(Error::Shape(format!("latent {:?} vs perturbation {:?}", f.shape(), params.shape())));
    }
    let values = f
        .values
        .iter()
        .zip(params.z.iter().zip(&params.b))
        .map(|(&fi, (&zi, &bi))| project_one(fi, (1.0 + zi) * fi + bi, epsilon))
        .collect::<Vec<_>>();
    Latent::new(f.tokens, f.channels, values)
}

fn project_one(center: f64, value: f64, epsilon: f64) -> f64 {
    if value.is_nan() {
        return value;
    }
    if (value - center).abs() <= epsilon {
        return value;
    }
    let mut out = if value > center { center + epsilon } else { center - epsilon };
    if out.is_infinite() {
        return value;
    }
    while out - center > epsilon {
        out = out.next_down();
    }
    while center - out > epsilon {
        out = out.next_up();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lat(v: &[f64]) -> Latent {
        Latent::row(v.to_vec()).unwrap()
    }

    fn params(z: &[f64], b: &[f64]) -> PerturbationParams {
        PerturbationParams::new(1, z.len(), z.to_vec(), b.to_vec(), NoiseMode::Full).unwrap()
    }

    #[test]
    fn identity_perturbation() {
        let f = lat(&[0.3, -2.0, 7.5]);
        for eps in [0.0, 0.1, f64::INFINITY] {
            let out = perturb_and_project(&f, &PerturbationParams::identity(1, 3, NoiseMode::Full), eps).unwrap();
            assert_eq!(out, f);
        }
    }

    #[test]
    fn direct_formula_and_clamp() {
        let f = lat(&[1.0, 2.0]);
        let p = params(&[0.5, -0.25], &[0.1, 0.0]);
        let free = perturb_and_project(&f, &p, f64::INFINITY).unwrap();
        assert!((free.values()[0] - 1.6).abs() < 1e-12);
        assert!((free.values()[1] - 1.5).abs() < 1e-12);
        let clamped = perturb_and_project(&f, &p, 0.2).unwrap();
        assert!((clamped.values()[0] - 1.2).abs() < 1e-12);
        assert!((clamped.values()[1] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = lat(&[1.0, 2.0]);
        let p = params(&[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(perturb_and_project(&f, &p, -0.1), Err(Error::Parameter(_))));
        let wrong = params(&[0.0], &[0.0]);
        assert!(matches!(perturb_and_project(&f, &wrong, 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn broadcast_invariants_checked() {
        // 2 tokens x 2 channels, channel mode wants equal rows.
        let ok = PerturbationParams::new(2, 2, vec![0.1, 0.2, 0.1, 0.2], vec![0.0; 4], NoiseMode::Channel);
        assert!(ok.is_ok());
        let bad = PerturbationParams::new(2, 2, vec![0.1, 0.2, 0.3, 0.2], vec![0.0; 4], NoiseMode::Channel);
        assert!(matches!(bad, Err(Error::Parameter(_))));
        let tok = PerturbationParams::new(2, 2, vec![0.1, 0.1, 0.3, 0.3], vec![0.0; 4], NoiseMode::Token);
        assert!(tok.is_ok());
    }

    #[test]
    fn tie_sums_along_shared_axis() {
        let mut g = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        NoiseMode::Channel.tie(2, 3, &mut g);
        assert_eq!(g, vec![5.0, 7.0, 9.0, 5.0, 7.0, 9.0]);
        let mut g = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        NoiseMode::Token.tie(2, 3, &mut g);
        assert_eq!(g, vec![6.0, 6.0, 6.0, 15.0, 15.0, 15.0]);
    }

    proptest! {
        #[test]
        fn projection_stays_in_ball(
            f in prop::collection::vec(-10.0f64..10.0, 1..16),
            seed in any::<u64>(),
            eps in 0.0f64..3.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = f.len();
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let base = lat(&f);
            let out = perturb_and_project(&base, &params(&z, &b), eps).unwrap();
            for (o, c) in out.values().iter().zip(base.values()) {
                prop_assert!((o - c).abs() <= eps);
            }
        }
    }
}
