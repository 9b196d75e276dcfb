//! Pure numerical kernels: softmax, entropy, KL, cosine, the ε-ball
//! perturbation, the three guidance scores and the objective gradient.

mod kernels;
mod latent;
mod objective;
mod scores;

pub use kernels::{argmax, cosine, dot, entropy, kl_divergence, norm, softmax, KL_FLOOR, SIMPLEX_TOL};
pub use latent::{perturb_and_project, Latent, NoiseMode, PerturbationParams};
pub use objective::{
    apply_perturbations, objective_gradient_fd, params_gradient, params_objective, AffineMap, GuidanceObjective,
    IdentityMap, LatentObjective, ScoringMap, FD_STEP,
};
pub use scores::{
    consistency_score, diversity_score, diversity_terms, entropy_gain, guidance_objective, GuidanceScores, Prediction,
    Weights,
};
