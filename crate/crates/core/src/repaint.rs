//! Masked inpainting with an unconditional denoiser.
//!
//! At every downward step the known pixels are replaced by the input noised
//! to the matching level; periodically the chain is pushed back up `jump`
//! steps with single-step forward noise and re-denoised, which lets the
//! synthesized region harmonize with the known one. The final merge uses
//! the raw input, so kept pixels come back unchanged.

use ndarray::{Array2, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{q_sample, reverse_step, standard_normal, Denoiser, NoiseSchedule};
use crate::error::{Error, Result};
use crate::grid::{Image, KeepMask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepaintConfig {
    pub jump_length: usize,
    pub resamples: usize,
    pub inference_steps: usize,
}

impl Default for RepaintConfig {
    fn default() -> Self {
        RepaintConfig {
            jump_length: 10,
            resamples: 10,
            inference_steps: 250,
        }
    }
}

impl RepaintConfig {
    pub fn validate(&self, train_steps: usize) -> Result<()> {
        if self.inference_steps == 0 || self.inference_steps > train_steps {
            return Err(Error::Range {
                name: "inference_steps",
                value: self.inference_steps as f64,
                range: "[1, T]",
            });
        }
        if self.jump_length == 0 || self.jump_length > self.inference_steps {
            return Err(Error::Range {
                name: "jump_length",
                value: self.jump_length as f64,
                range: "[1, inference_steps]",
            });
        }
        if self.resamples == 0 {
            return Err(Error::Range {
                name: "resamples",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        Ok(())
    }

    /// The respaced chain this configuration runs over `train`.
    pub fn chain<T: Scalar>(&self, train: &NoiseSchedule<T>) -> Result<NoiseSchedule<T>> {
        self.validate(train.len())?;
        train.respaced(self.inference_steps)
    }
}

/// Visiting order of chain states, from `steps - 1` down to 0.
///
/// Whenever the walk reaches a multiple of `jump` that still leaves room for
/// a full jump below `steps - 1`, it climbs back up `jump` states and
/// descends again, `resamples - 1` times in total for that point.
pub fn repaint_time_sequence(steps: usize, jump: usize, resamples: usize) -> Result<Vec<usize>> {
    if jump == 0 || jump > steps || resamples == 0 {
        return Err(Error::Invalid(format!(
            "need steps >= jump >= 1 and resamples >= 1 (steps={steps}, jump={jump}, resamples={resamples})"
        )));
    }
    let mut remaining = vec![0usize; steps];
    let mut p = 0;
    while p + jump < steps {
        remaining[p] = resamples - 1;
        p += jump;
    }
    let mut seq = Vec::with_capacity(steps + 2 * jump * (resamples - 1) * (steps / jump));
    let mut t = steps - 1;
    seq.push(t);
    while t > 0 {
        t -= 1;
        seq.push(t);
        if remaining[t] > 0 {
            remaining[t] -= 1;
            for _ in 0..jump {
                t += 1;
                seq.push(t);
            }
        }
    }
    Ok(seq)
}

fn merge<T: Scalar>(keep: &Array2<bool>, known: &Array2<T>, unknown: Array2<T>) -> Array2<T> {
    let mut out = unknown;
    Zip::from(&mut out).and(keep).and(known).for_each(|o, k, v| {
        if *k {
            *o = *v;
        }
    });
    out
}

/// Synthesizes the pixels where `keep` is false; the rest of `input` is returned as is.
///
/// `train` is the denoiser's training schedule; it is respaced to
/// `config.inference_steps`.
pub fn inpaint<T: Scalar, D: Denoiser<T> + ?Sized, R: Rng + ?Sized>(
    train: &NoiseSchedule<T>,
    denoiser: &D,
    input: &Image<T>,
    keep: &KeepMask,
    config: &RepaintConfig,
    rng: &mut R,
) -> Result<Image<T>> {
    keep.check_matches(input.shape())?;
    let chain = config.chain(train)?;
    if keep.is_noop() {
        return Ok(input.clone());
    }
    let shape = input.shape();
    let known = input.to_model_domain();
    let keep = keep.as_array();
    let seq = repaint_time_sequence(chain.len(), config.jump_length, config.resamples)?;

    let mut x: Array2<T> = standard_normal(shape, rng);
    for pair in seq.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        if to + 1 == from {
            let unknown = reverse_step(&chain, denoiser, &x, from, rng)?;
            let eps = standard_normal(shape, rng);
            let known_t = q_sample(&chain, &known, to, &eps)?;
            x = merge(keep, &known_t, unknown);
        } else {
            debug_assert_eq!(to, from + 1);
            let eps: Array2<T> = standard_normal(shape, rng);
            let (a, b) = (chain.alpha(to).sqrt(), chain.beta(to).sqrt());
            Zip::from(&mut x).and(&eps).for_each(|x, e| *x = a * *x + b * *e);
        }
    }
    let unknown = reverse_step(&chain, denoiser, &x, 0, rng)?;
    let x = merge(keep, &known, unknown);

    let mut out = Image::from_model_domain(&x).into_pixels();
    Zip::from(&mut out).and(keep).and(input.pixels()).for_each(|o, k, v| {
        if *k {
            *o = *v;
        }
    });
    Image::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::GaussianOracle;
    use crate::rng::seeded;

    #[test]
    fn no_resampling_is_plain_descent() {
        let seq = repaint_time_sequence(6, 2, 1).unwrap();
        assert_eq!(seq, vec![5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(repaint_time_sequence(5, 0, 1).is_err());
        assert!(repaint_time_sequence(5, 6, 1).is_err());
        assert!(repaint_time_sequence(5, 2, 0).is_err());
        assert!(RepaintConfig { jump_length: 10, resamples: 1, inference_steps: 5000 }.validate(4000).is_err());
    }

    #[test]
    fn steps_are_unit_down_or_jump_up() {
        for (n, j, r) in [(10, 5, 2), (250, 10, 10), (17, 3, 4), (8, 8, 3)] {
            let seq = repaint_time_sequence(n, j, r).unwrap();
            assert_eq!(seq[0], n - 1);
            assert_eq!(*seq.last().unwrap(), 0);
            let mut k = 0;
            while k + 1 < seq.len() {
                let (a, b) = (seq[k], seq[k + 1]);
                if b + 1 == a {
                    k += 1;
                } else {
                    // an upward excursion is exactly `j` unit steps
                    for i in 0..j {
                        assert_eq!(seq[k + 1 + i], a + i + 1);
                    }
                    k += j;
                }
            }
            assert!(seq.iter().all(|t| *t < n));
        }
    }

    #[test]
    fn keep_region_preserved_and_single_pixel_synthesized() {
        let train = NoiseSchedule::<f64>::cosine(40).unwrap();
        let config = RepaintConfig { jump_length: 4, resamples: 2, inference_steps: 20 };
        let chain = config.chain(&train).unwrap();
        let oracle = GaussianOracle::uniform((8, 8), -0.2, 0.05, chain).unwrap();
        let input = Image::from_fn(8, 8, |(r, c)| ((r * 8 + c) as f64) / 64.0).unwrap();
        let mut keep = Array2::from_elem((8, 8), true);
        keep[[3, 4]] = false;
        let out = inpaint(&train, &oracle, &input, &KeepMask::new(keep), &config, &mut seeded(4)).unwrap();
        for ((r, c), v) in out.pixels().indexed_iter() {
            if (r, c) != (3, 4) {
                assert_eq!(*v, input.pixels()[[r, c]]);
            }
        }
        assert_ne!(out.pixels()[[3, 4]], input.pixels()[[3, 4]]);
    }

    #[test]
    fn full_keep_is_noop_and_shape_checked() {
        let train = NoiseSchedule::<f64>::cosine(10).unwrap();
        let config = RepaintConfig { jump_length: 2, resamples: 1, inference_steps: 10 };
        let oracle = GaussianOracle::uniform((4, 4), 0.0, 0.1, train.clone()).unwrap();
        let input = Image::from_fn(4, 4, |_| 0.3).unwrap();
        let out = inpaint(&train, &oracle, &input, &KeepMask::full(4, 4), &config, &mut seeded(0)).unwrap();
        assert_eq!(out, input);
        assert!(inpaint(&train, &oracle, &input, &KeepMask::full(3, 4), &config, &mut seeded(0)).is_err());
    }
}
