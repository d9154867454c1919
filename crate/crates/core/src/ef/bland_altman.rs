use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normal quantile for 95% limits of agreement.
pub const LOA_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlandAltmanStats<T> {
    pub n: usize,
    pub bias: T,
    pub sd: T,
    pub loa_low: T,
    pub loa_high: T,
}

/// One plot point: pair mean against pair difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlandAltmanPoint<T> {
    pub mean: T,
    pub difference: T,
}

/// Bias and limits of agreement of `auto - manual` over `(auto, manual)` pairs.
pub fn bland_altman<T: Scalar>(pairs: &[(T, T)]) -> Result<(BlandAltmanStats<T>, Vec<BlandAltmanPoint<T>>)> {
    if pairs.len() < 2 {
        return Err(Error::Invalid(format!("Bland-Altman needs at least 2 pairs, got {}", pairs.len())));
    }
    let n = T::from_usize_lossy(pairs.len());
    let half = T::lit(0.5);
    let points: Vec<BlandAltmanPoint<T>> = pairs
        .iter()
        .map(|(a, m)| BlandAltmanPoint {
            mean: (*a + *m) * half,
            difference: *a - *m,
        })
        .collect();
    let bias = points.iter().map(|p| p.difference).sum::<T>() / n;
    let var = points.iter().map(|p| (p.difference - bias).powi(2)).sum::<T>() / (n - T::one());
    let sd = var.sqrt();
    let z = T::lit(LOA_Z);
    Ok((
        BlandAltmanStats {
            n: pairs.len(),
            bias,
            sd,
            loa_low: bias - z * sd,
            loa_high: bias + z * sd,
        },
        points,
    ))
}
