use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of training diffusion steps of the reference model.
pub const DEFAULT_TRAIN_STEPS: usize = 4000;
/// Small offset `s` in the cosine schedule.
pub const COSINE_OFFSET: f64 = 0.008;
pub const BETA_MAX: f64 = 0.999;

/// Per-step noise levels of a (possibly respaced) diffusion chain.
///
/// Index `i` runs over the chain's own steps; `model_timestep(i)` is the
/// timestep the denoiser was trained with for that step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSchedule<T> {
    betas: Vec<T>,
    alphas: Vec<T>,
    alpha_bar: Vec<T>,
    model_timesteps: Vec<usize>,
}

impl<T: Scalar> NoiseSchedule<T> {
    /// Cosine schedule: `f(t) = cos²(((t/T + s)/(1 + s))·π/2)`, betas from
    /// successive ratios of `f`, clipped at 0.999.
    pub fn cosine(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Invalid("diffusion step count must be >= 1".into()));
        }
        let n = steps as f64;
        let f = |t: f64| {
            let x = (t / n + COSINE_OFFSET) / (1.0 + COSINE_OFFSET) * std::f64::consts::FRAC_PI_2;
            x.cos().powi(2)
        };
        let betas = (0..steps)
            .map(|t| (1.0 - f(t as f64 + 1.0) / f(t as f64)).min(BETA_MAX))
            .collect::<Vec<_>>();
        Ok(Self::from_betas(&betas, (0..steps).collect()))
    }

    fn from_betas(betas: &[f64], model_timesteps: Vec<usize>) -> Self {
        let betas: Vec<T> = betas.iter().map(|b| T::lit(*b)).collect();
        let alphas: Vec<T> = betas.iter().map(|b| T::one() - *b).collect();
        let mut alpha_bar = Vec::with_capacity(alphas.len());
        let mut acc = T::one();
        for a in &alphas {
            acc *= *a;
            alpha_bar.push(acc);
        }
        NoiseSchedule {
            betas,
            alphas,
            alpha_bar,
            model_timesteps,
        }
    }

    /// Subsequence of `steps` evenly strided timesteps with betas recomputed so
    /// the retained `alpha_bar` values are reproduced.
    pub fn respaced(&self, steps: usize) -> Result<Self> {
        let total = self.len();
        if steps == 0 || steps > total {
            return Err(Error::Range {
                name: "inference_steps",
                value: steps as f64,
                range: "[1, T]",
            });
        }
        if steps == total {
            return Ok(self.clone());
        }
        // Even stride over [0, T-1], always keeping the first and last step.
        let picks: Vec<usize> = if steps == 1 {
            vec![total - 1]
        } else {
            (0..steps)
                .map(|i| ((i as f64) * (total - 1) as f64 / (steps - 1) as f64).round() as usize)
                .collect()
        };
        let mut last = 1.0;
        let mut betas = Vec::with_capacity(steps);
        for &t in &picks {
            let ab = self.alpha_bar[t].to_f64_lossy();
            betas.push(1.0 - ab / last);
            last = ab;
        }
        let model_timesteps = picks.iter().map(|t| self.model_timesteps[*t]).collect();
        Ok(Self::from_betas(&betas, model_timesteps))
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[T] {
        &self.alpha_bar
    }

    pub fn model_timesteps(&self) -> &[usize] {
        &self.model_timesteps
    }

    pub fn beta(&self, t: usize) -> T {
        self.betas[t]
    }

    pub fn alpha(&self, t: usize) -> T {
        self.alphas[t]
    }

    pub fn alpha_bar(&self, t: usize) -> T {
        self.alpha_bar[t]
    }

    /// `alpha_bar[t-1]`, with 1 before the first step.
    pub fn alpha_bar_prev(&self, t: usize) -> T {
        if t == 0 {
            T::one()
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn model_timestep(&self, t: usize) -> usize {
        self.model_timesteps[t]
    }

    /// Chain index of a model timestep, if present.
    pub fn index_of_model_timestep(&self, model_t: usize) -> Option<usize> {
        self.model_timesteps.binary_search(&model_t).ok()
    }

    /// Variance of `q(x_{t-1} | x_t, x_0)`.
    pub fn posterior_variance(&self, t: usize) -> T {
        (T::one() - self.alpha_bar_prev(t)) / (T::one() - self.alpha_bar(t)) * self.beta(t)
    }

    /// Log posterior variance, with the zero at `t = 0` replaced by the value at `t = 1`.
    pub fn posterior_log_variance_clipped(&self, t: usize) -> T {
        if t == 0 {
            if self.len() > 1 {
                self.posterior_variance(1).ln()
            } else {
                self.beta(0).ln()
            }
        } else {
            self.posterior_variance(t).ln()
        }
    }

    /// Coefficients `(c_x0, c_xt)` of the posterior mean.
    pub fn posterior_coefficients(&self, t: usize) -> (T, T) {
        let ab = self.alpha_bar(t);
        let ab_prev = self.alpha_bar_prev(t);
        let denom = T::one() - ab;
        (
            ab_prev.sqrt() * self.beta(t) / denom,
            self.alpha(t).sqrt() * (T::one() - ab_prev) / denom,
        )
    }
}
