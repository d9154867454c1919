//! Denoising diffusion: cosine noise schedule, forward noising, learned-variance
//! reverse steps and ancestral sampling around a pluggable denoiser.

mod denoiser;
mod oracle;
mod process;
mod schedule;

pub use denoiser::{Denoiser, DenoiserOutput};
pub use oracle::{GaussianOracle, OracleVariance};
pub use process::{
    p_mean_variance, posterior_mean_variance, q_sample, reverse_step, sample, standard_normal, ModelPrediction,
};
pub use schedule::{NoiseSchedule, BETA_MAX, COSINE_OFFSET, DEFAULT_TRAIN_STEPS};
