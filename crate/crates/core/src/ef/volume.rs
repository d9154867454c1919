use super::DiscStack;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Biplane disc volume in mL: `π/4 · Σ a_i·b_i · L/N` with `L` the longer
/// of the two long axes.
pub fn biplane_volume<T: Scalar>(a2c: &DiscStack<T>, a4c: &DiscStack<T>) -> Result<T> {
    if a2c.len() != a4c.len() {
        return Err(Error::Invalid(format!(
            "disc counts differ between views ({} vs {})",
            a2c.len(),
            a4c.len()
        )));
    }
    let length = a2c.long_axis_mm().max(a4c.long_axis_mm());
    let thickness = length / T::from_usize_lossy(a2c.len());
    let area_sum: T = a2c
        .diameters_mm()
        .iter()
        .zip(a4c.diameters_mm())
        .map(|(a, b)| *a * *b)
        .sum();
    Ok(T::FRAC_PI_4() * area_sum * thickness / T::lit(1000.0))
}

/// EF as a fraction. `flagged` marks physiologically inconsistent volumes
/// (ESV negative or above EDV); the value is still computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EjectionFraction<T> {
    pub value: T,
    pub flagged: bool,
}

pub fn ef_fraction<T: Scalar>(edv: T, esv: T) -> Result<EjectionFraction<T>> {
    if !(edv.is_finite() && edv > T::zero()) {
        return Err(Error::Range {
            name: "edv",
            value: edv.to_f64_lossy(),
            range: "(0, inf)",
        });
    }
    Ok(EjectionFraction {
        value: (edv - esv) / edv,
        flagged: esv < T::zero() || esv > edv,
    })
}
