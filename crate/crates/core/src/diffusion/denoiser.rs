use ndarray::Array2;

use crate::error::Result;
use crate::scalar::Scalar;

/// Noise prediction and variance-interpolation weight for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserOutput<T> {
    /// Predicted noise.
    pub eps: Array2<T>,
    /// Weight `v` in `log σ² = v·log β + (1 - v)·log β̃`; clamped to `[0, 1]` by the sampler.
    pub v: Array2<T>,
}

/// Trained (or analytic) noise predictor, evaluated in the model domain.
///
/// `model_t` is the timestep the network was trained with, not the index in a
/// respaced chain. Implementations must be deterministic.
pub trait Denoiser<T: Scalar>: Send + Sync {
    fn predict(&self, x_t: &Array2<T>, model_t: usize) -> Result<DenoiserOutput<T>>;
}

impl<T: Scalar, D: Denoiser<T> + ?Sized> Denoiser<T> for &D {
    fn predict(&self, x_t: &Array2<T>, model_t: usize) -> Result<DenoiserOutput<T>> {
        (**self).predict(x_t, model_t)
    }
}

impl<T: Scalar, D: Denoiser<T> + ?Sized> Denoiser<T> for Box<D> {
    fn predict(&self, x_t: &Array2<T>, model_t: usize) -> Result<DenoiserOutput<T>> {
        (**self).predict(x_t, model_t)
    }
}

impl<T: Scalar, D: Denoiser<T> + ?Sized> Denoiser<T> for std::sync::Arc<D> {
    fn predict(&self, x_t: &Array2<T>, model_t: usize) -> Result<DenoiserOutput<T>> {
        (**self).predict(x_t, model_t)
    }
}
