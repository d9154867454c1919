use ndarray::Array2;

use crate::error::{check_shape, Error, Result};
use crate::geometry::mask_perimeter;
use crate::grid::{Label, LabelMask};
use crate::scalar::Scalar;

/// Dice overlap of `label` in `a` and `b`; 1 when both are empty.
pub fn dice(a: &LabelMask, b: &LabelMask, label: Label) -> Result<f64> {
    check_shape(a.shape(), b.shape())?;
    let code = label.code();
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (x, y) in a.classes().iter().zip(b.classes()) {
        let (ia, ib) = (*x == code, *y == code);
        na += usize::from(ia);
        nb += usize::from(ib);
        both += usize::from(ia && ib);
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Label pixels 4-adjacent to a non-label pixel; the image border counts as non-label.
pub fn boundary_pixels(mask: &LabelMask, label: Label) -> Array2<bool> {
    mask_perimeter(&mask.indicator(label))
}

/// Exact squared Euclidean distance (in pixels²) to the nearest `true` pixel,
/// by separable lower envelopes of parabolas. `None` everywhere when `features` is empty.
pub fn squared_distance_transform(features: &Array2<bool>) -> Option<Array2<f64>> {
    if !features.iter().any(|f| *f) {
        return None;
    }
    let (rows, cols) = features.dim();
    let mut grid = features.mapv(|f| if f { 0.0 } else { f64::INFINITY });
    let mut buf = Vec::new();
    let mut out = Vec::new();
    for c in 0..cols {
        buf.clear();
        buf.extend((0..rows).map(|r| grid[[r, c]]));
        envelope_1d(&buf, &mut out);
        for r in 0..rows {
            grid[[r, c]] = out[r];
        }
    }
    for r in 0..rows {
        buf.clear();
        buf.extend((0..cols).map(|c| grid[[r, c]]));
        envelope_1d(&buf, &mut out);
        for c in 0..cols {
            grid[[r, c]] = out[c];
        }
    }
    Some(grid)
}

fn envelope_1d(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(i) => i,
        None => return,
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut j = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let d = q as f64 - v[j] as f64;
        *slot = d * d + f[v[j]];
    }
}

fn directed_sq(from: &Array2<bool>, to_dt: &Array2<f64>) -> f64 {
    from.indexed_iter()
        .filter(|(_, b)| **b)
        .map(|(idx, _)| to_dt[idx])
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the `label` boundaries of `a` and
/// `b`, in millimetres.
pub fn hausdorff_mm<T: Scalar>(a: &LabelMask, b: &LabelMask, label: Label, mm_per_px: T) -> Result<T> {
    check_shape(a.shape(), b.shape())?;
    if !(mm_per_px.is_finite() && mm_per_px > T::zero()) {
        return Err(Error::Range {
            name: "mm_per_px",
            value: mm_per_px.to_f64_lossy(),
            range: "(0, inf)",
        });
    }
    let ba = boundary_pixels(a, label);
    let bb = boundary_pixels(b, label);
    let (dt_a, dt_b) = match (squared_distance_transform(&ba), squared_distance_transform(&bb)) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            return Err(Error::Segmentation(format!(
                "label {:?} missing from {} mask",
                label,
                if a.count(label) == 0 { "first" } else { "second" }
            )))
        }
    };
    let sq = directed_sq(&ba, &dt_b).max(directed_sq(&bb, &dt_a));
    Ok(T::lit(sq.sqrt()) * mm_per_px)
}
