use ndarray::{Array2, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Denoiser, NoiseSchedule};
use crate::error::{check_shape, Error, Result};
use crate::scalar::Scalar;

fn check_step<T: Scalar>(schedule: &NoiseSchedule<T>, t: usize) -> Result<()> {
    if t < schedule.len() {
        Ok(())
    } else {
        Err(Error::Range {
            name: "t",
            value: t as f64,
            range: "[0, T)",
        })
    }
}

/// Standard normal draws of the given shape.
pub fn standard_normal<T: Scalar, R: Rng + ?Sized>(shape: (usize, usize), rng: &mut R) -> Array2<T> {
    Array2::from_shape_simple_fn(shape, || T::lit(rng.sample::<f64, _>(StandardNormal)))
}

/// `x_t = √ᾱ_t·x0 + √(1-ᾱ_t)·ε`.
pub fn q_sample<T: Scalar>(schedule: &NoiseSchedule<T>, x0: &Array2<T>, t: usize, eps: &Array2<T>) -> Result<Array2<T>> {
    check_step(schedule, t)?;
    check_shape(x0.dim(), eps.dim())?;
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (T::one() - ab).sqrt());
    Ok(Zip::from(x0).and(eps).map_collect(|x, e| a * *x + b * *e))
}

/// Mean and variance of `q(x_{t-1} | x_t, x_0)`; undefined at `t = 0`.
pub fn posterior_mean_variance<T: Scalar>(
    schedule: &NoiseSchedule<T>,
    x0: &Array2<T>,
    x_t: &Array2<T>,
    t: usize,
) -> Result<(Array2<T>, T)> {
    check_step(schedule, t)?;
    if t == 0 {
        return Err(Error::Invalid("posterior at t = 0 has no previous step".into()));
    }
    check_shape(x0.dim(), x_t.dim())?;
    let (c0, ct) = schedule.posterior_coefficients(t);
    let mean = Zip::from(x0).and(x_t).map_collect(|a, b| c0 * *a + ct * *b);
    Ok((mean, schedule.posterior_variance(t)))
}

/// Model mean/variance of the reverse step at chain index `t`.
#[derive(Debug, Clone)]
pub struct ModelPrediction<T> {
    pub mean: Array2<T>,
    pub variance: Array2<T>,
    pub log_variance: Array2<T>,
    /// Clamped estimate of the clean sample.
    pub pred_x0: Array2<T>,
}

pub fn p_mean_variance<T: Scalar, D: Denoiser<T> + ?Sized>(
    schedule: &NoiseSchedule<T>,
    denoiser: &D,
    x_t: &Array2<T>,
    t: usize,
) -> Result<ModelPrediction<T>> {
    check_step(schedule, t)?;
    let out = denoiser.predict(x_t, schedule.model_timestep(t))?;
    check_shape(x_t.dim(), out.eps.dim())?;
    check_shape(x_t.dim(), out.v.dim())?;
    if out.eps.iter().chain(out.v.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Denoiser(format!("non-finite prediction at model timestep {}", schedule.model_timestep(t))));
    }

    let ab = schedule.alpha_bar(t);
    let (sqrt_ab, sqrt_one_minus) = (ab.sqrt(), (T::one() - ab).sqrt());
    let one = T::one();
    let pred_x0 = Zip::from(x_t)
        .and(&out.eps)
        .map_collect(|x, e| ((*x - sqrt_one_minus * *e) / sqrt_ab).max(-one).min(one));

    let (c0, ct) = schedule.posterior_coefficients(t);
    let mean = Zip::from(&pred_x0).and(x_t).map_collect(|a, b| c0 * *a + ct * *b);

    let log_beta = schedule.beta(t).ln();
    let log_tilde = schedule.posterior_log_variance_clipped(t);
    let log_variance = out.v.mapv(|v| {
        let v = v.max(T::zero()).min(one);
        v * log_beta + (one - v) * log_tilde
    });
    let variance = log_variance.mapv(|l| l.exp());
    Ok(ModelPrediction {
        mean,
        variance,
        log_variance,
        pred_x0,
    })
}

/// One ancestral step `x_t -> x_{t-1}`; the step at `t = 0` adds no noise.
pub fn reverse_step<T: Scalar, D: Denoiser<T> + ?Sized, R: Rng + ?Sized>(
    schedule: &NoiseSchedule<T>,
    denoiser: &D,
    x_t: &Array2<T>,
    t: usize,
    rng: &mut R,
) -> Result<Array2<T>> {
    let pred = p_mean_variance(schedule, denoiser, x_t, t)?;
    if t == 0 {
        return Ok(pred.mean);
    }
    let z: Array2<T> = standard_normal(x_t.dim(), rng);
    let half = T::lit(0.5);
    let next = Zip::from(&pred.mean)
        .and(&pred.log_variance)
        .and(&z)
        .map_collect(|m, lv, z| *m + (*lv * half).exp() * *z);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Denoiser(format!("non-finite latent at step {t}")));
    }
    Ok(next)
}

/// Ancestral sampling from pure noise down to `x_0`.
pub fn sample<T: Scalar, D: Denoiser<T> + ?Sized, R: Rng + ?Sized>(
    schedule: &NoiseSchedule<T>,
    denoiser: &D,
    shape: (usize, usize),
    rng: &mut R,
) -> Result<Array2<T>> {
    let mut x = standard_normal(shape, rng);
    for t in (0..schedule.len()).rev() {
        x = reverse_step(schedule, denoiser, &x, t, rng)?;
    }
    Ok(x)
}
