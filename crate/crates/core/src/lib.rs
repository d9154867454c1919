//! Generative augmentation of fan-beam ultrasound frames.
//!
//! The crate bundles the sector geometry and transforms, a cosine-schedule
//! diffusion sampler with learned variance, RePaint-style masked inpainting,
//! the augmentation pipeline that ties them together, and the evaluation
//! side: segmentation and similarity metrics, biplane ejection fraction with
//! Bland-Altman agreement, and the statistics of a blinded realism survey.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for callers that do not care.

pub mod diffusion;
pub mod ef;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod repaint;
pub mod rng;
pub mod scalar;
pub mod survey;
pub mod transform;

pub use error::{Error, Result};
pub use geometry::{sector_mask, SectorGeometry};
pub use grid::{Image, KeepMask, Label, LabelMask};
pub use scalar::Scalar;
pub use transform::{apply_transform, AugmentationKind, AugmentationSpec, Frame};

pub type Image32 = grid::Image<f32>;
pub type Image64 = grid::Image<f64>;
pub type Frame32 = transform::Frame<f32>;
pub type Frame64 = transform::Frame<f64>;
pub type Geometry32 = geometry::SectorGeometry<f32>;
pub type Geometry64 = geometry::SectorGeometry<f64>;
pub type Schedule32 = diffusion::NoiseSchedule<f32>;
pub type Schedule64 = diffusion::NoiseSchedule<f64>;
pub type DiscStack64 = ef::DiscStack<f64>;
