use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{check_shape, Error, Result};
use crate::grid::Image;
use crate::scalar::Scalar;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn gaussian_kernel<T: Scalar>() -> Vec<T> {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|w| T::lit(w / sum)).collect()
}

/// Separable "valid" filtering: output is `(rows - 10, cols - 10)`.
fn filter_valid<T: Scalar>(img: &Array2<T>, kernel: &[T]) -> Array2<T> {
    let (rows, cols) = img.dim();
    let k = kernel.len();
    let horiz = Array2::from_shape_fn((rows, cols - k + 1), |(r, c)| {
        kernel.iter().enumerate().map(|(i, w)| *w * img[[r, c + i]]).sum()
    });
    Array2::from_shape_fn((rows - k + 1, cols - k + 1), |(r, c)| {
        kernel.iter().enumerate().map(|(i, w)| *w * horiz[[r + i, c]]).sum()
    })
}

/// Mean SSIM over all fully-contained 11×11 Gaussian windows (σ = 1.5),
/// dynamic range 1.
pub fn ssim<T: Scalar>(x: &Image<T>, y: &Image<T>) -> Result<T> {
    check_shape(x.shape(), y.shape())?;
    let (rows, cols) = x.shape();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::Invalid(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {rows}x{cols}"
        )));
    }
    let kernel = gaussian_kernel::<T>();
    let (xp, yp) = (x.pixels(), y.pixels());
    let mu_x = filter_valid(xp, &kernel);
    let mu_y = filter_valid(yp, &kernel);
    let xx = filter_valid(&(xp * xp), &kernel);
    let yy = filter_valid(&(yp * yp), &kernel);
    let xy = filter_valid(&(xp * yp), &kernel);
    let c1 = T::lit(SSIM_K1 * SSIM_K1);
    let c2 = T::lit(SSIM_K2 * SSIM_K2);
    let two = T::lit(2.0);
    let mut total = T::zero();
    for (idx, mx) in mu_x.indexed_iter() {
        let my = mu_y[idx];
        let sxx = xx[idx] - *mx * *mx;
        let syy = yy[idx] - my * my;
        let sxy = xy[idx] - *mx * my;
        total += ((two * *mx * my + c1) * (two * sxy + c2)) / ((*mx * *mx + my * my + c1) * (sxx + syy + c2));
    }
    Ok(total / T::from_usize_lossy(mu_x.len()))
}

/// Top-`k` corpus entries by SSIM against `query`, best first; ties keep
/// corpus order. `k` larger than the corpus returns everything.
pub fn most_similar<T: Scalar>(query: &Image<T>, corpus: &[Image<T>], k: usize) -> Result<Vec<(usize, T)>> {
    if corpus.is_empty() {
        return Err(Error::Invalid("empty retrieval corpus".into()));
    }
    let mut scored = corpus
        .par_iter()
        .enumerate()
        .map(|(i, img)| ssim(query, img).map(|s| (i, s)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(seed: usize) -> Image<f64> {
        Image::from_fn(24, 24, |(r, c)| (((r * 31 + c * 17 + seed * 7) % 23) as f64) / 22.0).unwrap()
    }

    #[test]
    fn self_similarity_is_one() {
        let x = pattern(1);
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_image_scores_lower() {
        let x = pattern(2);
        let inv = Image::from_clamped(x.pixels().mapv(|v| 1.0 - v));
        assert!(ssim(&x, &inv).unwrap() < 1.0);
    }

    #[test]
    fn too_small_or_mismatched() {
        let x = Image::<f64>::zeros(8, 8);
        assert!(ssim(&x, &x).is_err());
        assert!(ssim(&pattern(0), &Image::zeros(24, 25)).is_err());
    }

    #[test]
    fn retrieval_ranks_exact_match_first() {
        let corpus: Vec<_> = (0..6).map(pattern).collect();
        let top = most_similar(&corpus[3], &corpus, 3).unwrap();
        assert_eq!(top[0].0, 3);
        assert!((top[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(top.len(), 3);
        assert!(most_similar(&corpus[0], &corpus, 0).unwrap().is_empty());
        assert_eq!(most_similar(&corpus[0], &corpus, 100).unwrap().len(), 6);
        assert!(most_similar(&corpus[0], &[], 1).is_err());
    }
}
