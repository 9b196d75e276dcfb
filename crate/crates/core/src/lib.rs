//! Guided dataset expansion.
//!
//! Each seed image is encoded into a latent, perturbed K times under an
//! L∞ ε-ball constraint, and the perturbations are optimized by projected
//! gradient ascent on a consistency + entropy-gain + diversity objective
//! scored by a zero-shot prototype head. Augmentation baselines, selective
//! expansion, a binary dataset container with provenance manifests and a
//! small downstream evaluation harness complete the toolkit.

pub mod augment;
pub mod backends;
pub mod error;
pub mod eval;
pub mod guidance;
pub mod latentmath;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/perturbation.md")]
    mod perturbation {}
    #[doc = include_str!("../../../book/src/objective.md")]
    mod objective {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/augmentation.md")]
    mod augmentation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
