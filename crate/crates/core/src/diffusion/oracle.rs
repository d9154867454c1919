use ndarray::{Array2, Zip};

use super::{Denoiser, DenoiserOutput, NoiseSchedule};
use crate::error::{check_shape, Error, Result};
use crate::scalar::Scalar;

/// How the analytic oracle fills the variance-interpolation output `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleVariance {
    /// `v` chosen so the reverse-step variance equals the exact reverse
    /// transition variance `β̃_t + c_x0²·Var[x0 | x_t]`.
    #[default]
    Exact,
    /// `v = 0`: always the posterior variance `β̃_t`.
    Posterior,
}

/// Bayes-optimal denoiser for data `x0 ~ N(mean, variance·I)`.
///
/// The oracle must be built with the same (possibly respaced) schedule the
/// sampler runs, since the exact `v` depends on that chain's betas.
#[derive(Debug, Clone)]
pub struct GaussianOracle<T> {
    mean: Array2<T>,
    variance: T,
    schedule: NoiseSchedule<T>,
    mode: OracleVariance,
}

impl<T: Scalar> GaussianOracle<T> {
    pub fn new(mean: Array2<T>, variance: T, schedule: NoiseSchedule<T>) -> Result<Self> {
        if !(variance.is_finite() && variance > T::zero()) {
            return Err(Error::Range {
                name: "oracle variance",
                value: variance.to_f64_lossy(),
                range: "(0, inf)",
            });
        }
        Ok(GaussianOracle {
            mean,
            variance,
            schedule,
            mode: OracleVariance::Exact,
        })
    }

    /// Oracle with the same prior mean everywhere.
    pub fn uniform(shape: (usize, usize), mean: T, variance: T, schedule: NoiseSchedule<T>) -> Result<Self> {
        Self::new(Array2::from_elem(shape, mean), variance, schedule)
    }

    pub fn with_variance_mode(mut self, mode: OracleVariance) -> Self {
        self.mode = mode;
        self
    }

    pub fn mean(&self) -> &Array2<T> {
        &self.mean
    }

    pub fn variance(&self) -> T {
        self.variance
    }

    pub fn schedule(&self) -> &NoiseSchedule<T> {
        &self.schedule
    }

    /// Shrinkage gain `√ᾱσ²/(ᾱσ² + 1 - ᾱ)` of `E[x0 | x_t]`.
    fn gain(&self, ab: T) -> T {
        ab.sqrt() * self.variance / (ab * self.variance + T::one() - ab)
    }

    /// `E[x0 | x_t]` under the Gaussian prior at noise level `ab`.
    pub fn posterior_x0(&self, x_t: &Array2<T>, ab: T) -> Array2<T> {
        let k = self.gain(ab);
        let s = ab.sqrt();
        Zip::from(&self.mean).and(x_t).map_collect(|m, x| *m + k * (*x - s * *m))
    }

    /// `Var[x0 | x_t]` (identical for every pixel).
    pub fn posterior_x0_variance(&self, ab: T) -> T {
        self.variance * (T::one() - ab) / (ab * self.variance + T::one() - ab)
    }

    fn exact_v(&self, index: usize) -> T {
        let s = &self.schedule;
        if index == 0 {
            return T::zero();
        }
        let tilde = s.posterior_variance(index);
        let beta = s.beta(index);
        let (c0, _) = s.posterior_coefficients(index);
        let target = tilde + c0 * c0 * self.posterior_x0_variance(s.alpha_bar(index));
        let span = (beta / tilde).ln();
        if span.abs() < T::lit(1e-12) {
            return T::zero();
        }
        ((target / tilde).ln() / span).max(T::zero()).min(T::one())
    }
}

impl<T: Scalar> Denoiser<T> for GaussianOracle<T> {
    fn predict(&self, x_t: &Array2<T>, model_t: usize) -> Result<DenoiserOutput<T>> {
        check_shape(self.mean.dim(), x_t.dim())?;
        let index = self
            .schedule
            .index_of_model_timestep(model_t)
            .ok_or_else(|| Error::Denoiser(format!("oracle has no chain step for model timestep {model_t}")))?;
        let ab = self.schedule.alpha_bar(index);
        let ex0 = self.posterior_x0(x_t, ab);
        let (s, n) = (ab.sqrt(), (T::one() - ab).sqrt());
        let eps = Zip::from(x_t).and(&ex0).map_collect(|x, e| (*x - s * *e) / n);
        let v = match self.mode {
            OracleVariance::Exact => self.exact_v(index),
            OracleVariance::Posterior => T::zero(),
        };
        Ok(DenoiserOutput {
            eps,
            v: Array2::from_elem(x_t.dim(), v),
        })
    }
}
