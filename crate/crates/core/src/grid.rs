//! Image, label and keep-mask rasters.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::scalar::Scalar;

/// Segmentation classes used by the label masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Background = 0,
    Lv = 1,
    Myo = 2,
    La = 3,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Background, Label::Lv, Label::Myo, Label::La];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Label> {
        Label::ALL.get(code as usize).copied()
    }

    /// Parses `lv`, `myo`, `la`, `background` or a numeric class code.
    pub fn parse(s: &str) -> Option<Label> {
        match s.to_ascii_lowercase().as_str() {
            "background" | "bg" => Some(Label::Background),
            "lv" => Some(Label::Lv),
            "myo" => Some(Label::Myo),
            "la" => Some(Label::La),
            other => other.parse::<u8>().ok().and_then(Label::from_code),
        }
    }
}

/// Grayscale intensities in `[0, 1]`, row-major `(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    pixels: Array2<T>,
}

impl<T: Scalar> Image<T> {
    /// Wraps `pixels`, rejecting non-finite or out-of-range intensities.
    pub fn new(pixels: Array2<T>) -> Result<Self> {
        if let Some(bad) = pixels
            .iter()
            .find(|v| !v.is_finite() || **v < T::zero() || **v > T::one())
        {
            return Err(Error::Range {
                name: "pixel",
                value: bad.to_f64_lossy(),
                range: "[0, 1]",
            });
        }
        Ok(Image { pixels })
    }

    /// Wraps `pixels` after clamping every entry into `[0, 1]` (NaN maps to 0).
    pub fn from_clamped(mut pixels: Array2<T>) -> Self {
        pixels.mapv_inplace(|v| {
            if v.is_nan() {
                T::zero()
            } else {
                v.max(T::zero()).min(T::one())
            }
        });
        Image { pixels }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Image {
            pixels: Array2::zeros((rows, cols)),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut((usize, usize)) -> T) -> Result<Self> {
        Image::new(Array2::from_shape_fn((rows, cols), f))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn pixels(&self) -> &Array2<T> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array2<T> {
        self.pixels
    }

    /// Linear map `[0, 1] -> [-1, 1]` into the diffusion model domain.
    pub fn to_model_domain(&self) -> Array2<T> {
        let two = T::lit(2.0);
        self.pixels.mapv(|v| two * v - T::one())
    }

    /// Inverse of [`Image::to_model_domain`], clamping into `[0, 1]`.
    pub fn from_model_domain(x: &Array2<T>) -> Self {
        let half = T::lit(0.5);
        Image::from_clamped(x.mapv(|v| (v + T::one()) * half))
    }

    pub fn cast<U: Scalar>(&self) -> Image<U> {
        Image {
            pixels: self.pixels.mapv(|v| U::lit(v.to_f64_lossy())),
        }
    }
}

/// Per-pixel class codes (see [`Label`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    classes: Array2<u8>,
}

impl LabelMask {
    pub fn new(classes: Array2<u8>) -> Result<Self> {
        if let Some(bad) = classes.iter().find(|c| Label::from_code(**c).is_none()) {
            return Err(Error::Range {
                name: "label class",
                value: *bad as f64,
                range: "{0, 1, 2, 3}",
            });
        }
        Ok(LabelMask { classes })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        LabelMask {
            classes: Array2::zeros((rows, cols)),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut((usize, usize)) -> u8) -> Result<Self> {
        LabelMask::new(Array2::from_shape_fn((rows, cols), f))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.classes.dim()
    }

    pub fn classes(&self) -> &Array2<u8> {
        &self.classes
    }

    pub fn into_classes(self) -> Array2<u8> {
        self.classes
    }

    pub fn get(&self, row: usize, col: usize) -> Label {
        Label::from_code(self.classes[[row, col]]).unwrap_or(Label::Background)
    }

    /// Binary indicator of `label`.
    pub fn indicator(&self, label: Label) -> Array2<bool> {
        let code = label.code();
        self.classes.mapv(|c| c == code)
    }

    pub fn count(&self, label: Label) -> usize {
        let code = label.code();
        self.classes.iter().filter(|c| **c == code).count()
    }
}

/// Inpainting mask: `true` keeps the input pixel, `false` synthesizes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeepMask {
    keep: Array2<bool>,
}

impl KeepMask {
    pub fn new(keep: Array2<bool>) -> Self {
        KeepMask { keep }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        KeepMask {
            keep: Array2::from_elem((rows, cols), true),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.keep.dim()
    }

    pub fn as_array(&self) -> &Array2<bool> {
        &self.keep
    }

    pub fn keeps(&self, row: usize, col: usize) -> bool {
        self.keep[[row, col]]
    }

    /// Number of pixels to be synthesized.
    pub fn synthesized_count(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }

    /// True when nothing would be synthesized.
    pub fn is_noop(&self) -> bool {
        self.synthesized_count() == 0
    }

    pub fn check_matches(&self, shape: (usize, usize)) -> Result<()> {
        check_shape(shape, self.shape())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn image_rejects_out_of_range() {
        assert!(Image::new(array![[0.0f64, 1.2]]).is_err());
        assert!(Image::new(array![[0.0f64, f64::NAN]]).is_err());
        assert!(Image::new(array![[0.0f64, 1.0]]).is_ok());
    }

    #[test]
    fn model_domain_roundtrip() {
        let img = Image::new(array![[0.0f64, 0.25], [0.5, 1.0]]).unwrap();
        let back = Image::from_model_domain(&img.to_model_domain());
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn label_mask_rejects_unknown_class() {
        assert!(LabelMask::new(array![[0u8, 4]]).is_err());
        let m = LabelMask::new(array![[0u8, 1], [3, 1]]).unwrap();
        assert_eq!(m.count(Label::Lv), 2);
        assert_eq!(m.get(1, 0), Label::La);
    }

    #[test]
    fn label_parse() {
        assert_eq!(Label::parse("LV"), Some(Label::Lv));
        assert_eq!(Label::parse("2"), Some(Label::Myo));
        assert_eq!(Label::parse("rv"), None);
    }
}
