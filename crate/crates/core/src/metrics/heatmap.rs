use ndarray::Array2;

use crate::error::{check_shape, Error, Result};
use crate::grid::{Label, LabelMask};

/// Fraction of `masks` labelling each pixel as LV.
pub fn lv_heatmap(masks: &[LabelMask]) -> Result<Array2<f64>> {
    let first = masks.first().ok_or_else(|| Error::Invalid("heatmap of zero masks".into()))?;
    let mut acc = Array2::<f64>::zeros(first.shape());
    for m in masks {
        check_shape(first.shape(), m.shape())?;
        acc.zip_mut_with(m.classes(), |a, c| {
            if *c == Label::Lv.code() {
                *a += 1.0;
            }
        });
    }
    let n = masks.len() as f64;
    acc.mapv_inplace(|v| v / n);
    Ok(acc)
}
