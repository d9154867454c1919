//! Runs an exported diffusion U-Net through tract.
//!
//! The graph takes `x` of shape `[1, 1, H, W]` (f32, model domain) and an
//! int64 timestep of shape `[1]`, and returns `[1, 2, H, W]`: predicted noise
//! in channel 0 and the raw variance output in channel 1. The raw output is
//! in `[-1, 1]` and is mapped to the interpolation weight as `(raw + 1) / 2`.

use std::path::Path;

use echoaug::diffusion::{Denoiser, DenoiserOutput};
use echoaug::{Error, Result, Scalar};
use ndarray::Array2;
use tract_onnx::prelude::*;

type Plan = SimplePlan<TypedFact, Box<dyn TypedOp>, Graph<TypedFact, Box<dyn TypedOp>>>;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot load {path}: {source}")]
    Model { path: String, source: TractError },
    #[error("model output has shape {0:?}, expected [1, 2, H, W]")]
    Output(Vec<usize>),
}

pub struct OnnxDenoiser {
    plan: Plan,
    shape: (usize, usize),
}

impl std::fmt::Debug for OnnxDenoiser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxDenoiser").field("shape", &self.shape).finish()
    }
}

fn err(e: TractError) -> Error {
    Error::Denoiser(format!("{e:#}"))
}

impl OnnxDenoiser {
    /// Loads and optimizes the graph for inputs of `shape`.
    pub fn load(path: &Path, shape: (usize, usize)) -> std::result::Result<Self, LoadError> {
        let build = || -> TractResult<Plan> {
            onnx()
                .model_for_path(path)?
                .with_input_fact(0, f32::fact([1, 1, shape.0, shape.1]).into())?
                .with_input_fact(1, i64::fact([1]).into())?
                .into_optimized()?
                .into_runnable()
        };
        let plan = build().map_err(|source| LoadError::Model {
            path: path.display().to_string(),
            source,
        })?;
        let denoiser = OnnxDenoiser { plan, shape };
        // one probe run validates the output layout up front
        let probe = denoiser
            .run(&vec![0.0; shape.0 * shape.1], 0)
            .map_err(|source| LoadError::Model {
                path: path.display().to_string(),
                source,
            })?;
        if probe.shape() != [1, 2, shape.0, shape.1] {
            return Err(LoadError::Output(probe.shape().to_vec()));
        }
        Ok(denoiser)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn run(&self, x: &[f32], model_t: usize) -> TractResult<Tensor> {
        let input = Tensor::from_shape(&[1, 1, self.shape.0, self.shape.1], x)?;
        let t = tensor1(&[model_t as i64]);
        let mut out = self.plan.run(tvec!(input.into(), t.into()))?;
        Ok(out.remove(0).into_tensor())
    }
}

impl<T: Scalar> Denoiser<T> for OnnxDenoiser {
    fn predict(&self, x_t: &Array2<T>, model_t: usize) -> Result<DenoiserOutput<T>> {
        if x_t.dim() != self.shape {
            return Err(Error::Shape {
                expected: self.shape,
                actual: x_t.dim(),
            });
        }
        let input: Vec<f32> = x_t.iter().map(|v| v.to_f32().unwrap_or(f32::NAN)).collect();
        let out = self.run(&input, model_t).map_err(err)?;
        let values = out.as_slice::<f32>().map_err(err)?;
        let plane = self.shape.0 * self.shape.1;
        if values.len() != 2 * plane {
            return Err(Error::Denoiser(format!("model output has {} values, expected {}", values.len(), 2 * plane)));
        }
        let channel = |c: usize, f: fn(f32) -> f32| {
            Array2::from_shape_fn(self.shape, |(r, col)| T::lit(f64::from(f(values[c * plane + r * self.shape.1 + col]))))
        };
        Ok(DenoiserOutput {
            eps: channel(0, |v| v),
            v: channel(1, |v| (v + 1.0) / 2.0),
        })
    }
}
