//! Randomized sector transforms applied before inpainting, plus the
//! preprocessing used to build the diffusion training set.
//!
//! Every transform is expressed as an inverse coordinate map (output pixel
//! to source position). Chained transforms are composed and resampled once;
//! the intermediate canvases still crop, so content pushed off the canvas by
//! one step is not recovered by a later one. Alongside the resampled frame,
//! each output pixel records whether it had a source on the canvas and
//! whether that source lay inside the original sector.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::geometry::{sector_mask, SectorGeometry};
use crate::grid::{Image, LabelMask};
use crate::scalar::Scalar;

pub const DEPTH_RANGE_PX: (f64, f64) = (0.0, 150.0);
pub const TILT_RANGE_DEG: (f64, f64) = (-30.0, 30.0);
pub const WIDTH_RANGE: (f64, f64) = (0.5, 1.5);
pub const TRANSLATION_RANGE_PX: (f64, f64) = (0.0, 50.0);
pub const MAX_NARROWING_DEG: f64 = 20.0;
/// Smallest sector angle the narrowing preprocessing may leave behind.
pub const MIN_NARROWED_ANGLE_DEG: f64 = 5.0;
pub const SUBSAMPLE_GAP: (usize, usize) = (8, 12);

/// An image, its optional labels and the sector it depicts.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    pub image: Image<T>,
    pub mask: Option<LabelMask>,
    pub geometry: SectorGeometry<T>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(image: Image<T>, mask: Option<LabelMask>, geometry: SectorGeometry<T>) -> Result<Self> {
        check_shape(geometry.size(), image.shape())?;
        if let Some(m) = &mask {
            check_shape(image.shape(), m.shape())?;
        }
        Ok(Frame { image, mask, geometry })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.image.shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    Identity,
    DepthIncrease,
    Tilt,
    SectorWidth,
    Translation,
    Combination,
}

impl AugmentationKind {
    pub fn name(self) -> &'static str {
        match self {
            AugmentationKind::Identity => "identity",
            AugmentationKind::DepthIncrease => "depth",
            AugmentationKind::Tilt => "tilt",
            AugmentationKind::SectorWidth => "width",
            AugmentationKind::Translation => "translation",
            AugmentationKind::Combination => "combination",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "identity" => AugmentationKind::Identity,
            "depth" | "depth_increase" => AugmentationKind::DepthIncrease,
            "tilt" => AugmentationKind::Tilt,
            "width" | "sector_width" => AugmentationKind::SectorWidth,
            "translation" => AugmentationKind::Translation,
            "combination" => AugmentationKind::Combination,
            _ => return None,
        })
    }
}

/// Shift by `length_px` towards `angle_deg` (0 = +col, 90 = up the image).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Translation<T> {
    pub length_px: T,
    pub angle_deg: T,
}

impl<T: Scalar> Translation<T> {
    /// `(d_row, d_col)` displacement.
    pub fn offset(&self) -> (T, T) {
        let a = self.angle_deg.to_radians();
        (-self.length_px * a.sin(), self.length_px * a.cos())
    }
}

/// One augmentation draw. Single-family specs carry exactly their own
/// parameter; a combination carries the subset whose flag is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationSpec<T> {
    pub kind: AugmentationKind,
    pub depth_px: Option<T>,
    pub tilt_deg: Option<T>,
    pub width_factor: Option<T>,
    pub translation: Option<Translation<T>>,
}

impl<T: Scalar> AugmentationSpec<T> {
    pub fn identity() -> Self {
        AugmentationSpec {
            kind: AugmentationKind::Identity,
            depth_px: None,
            tilt_deg: None,
            width_factor: None,
            translation: None,
        }
    }

    pub fn depth(px: T) -> Self {
        AugmentationSpec {
            kind: AugmentationKind::DepthIncrease,
            depth_px: Some(px),
            ..Self::identity()
        }
    }

    pub fn tilt(deg: T) -> Self {
        AugmentationSpec {
            kind: AugmentationKind::Tilt,
            tilt_deg: Some(deg),
            ..Self::identity()
        }
    }

    pub fn width(factor: T) -> Self {
        AugmentationSpec {
            kind: AugmentationKind::SectorWidth,
            width_factor: Some(factor),
            ..Self::identity()
        }
    }

    pub fn translation(length_px: T, angle_deg: T) -> Self {
        AugmentationSpec {
            kind: AugmentationKind::Translation,
            translation: Some(Translation { length_px, angle_deg }),
            ..Self::identity()
        }
    }

    pub fn combination(
        depth_px: Option<T>,
        tilt_deg: Option<T>,
        width_factor: Option<T>,
        translation: Option<Translation<T>>,
    ) -> Self {
        AugmentationSpec {
            kind: AugmentationKind::Combination,
            depth_px,
            tilt_deg,
            width_factor,
            translation,
        }
    }

    /// `[depth, tilt, width, translation]` enablement.
    pub fn flags(&self) -> [bool; 4] {
        [
            self.depth_px.is_some(),
            self.tilt_deg.is_some(),
            self.width_factor.is_some(),
            self.translation.is_some(),
        ]
    }

    /// Explicit specs may sit on the range endpoints; sampling keeps to the open ranges.
    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            AugmentationKind::Identity => Some([false; 4]),
            AugmentationKind::DepthIncrease => Some([true, false, false, false]),
            AugmentationKind::Tilt => Some([false, true, false, false]),
            AugmentationKind::SectorWidth => Some([false, false, true, false]),
            AugmentationKind::Translation => Some([false, false, false, true]),
            AugmentationKind::Combination => None,
        };
        if let Some(expected) = expected {
            if expected != self.flags() {
                return Err(Error::Invalid(format!(
                    "{} spec must carry exactly its own parameter",
                    self.kind.name()
                )));
            }
        }
        if let Some(d) = self.depth_px {
            check_closed("depth_px", d, DEPTH_RANGE_PX, "[0, 150]")?;
        }
        if let Some(t) = self.tilt_deg {
            check_closed("tilt_deg", t, TILT_RANGE_DEG, "[-30, 30]")?;
        }
        if let Some(w) = self.width_factor {
            check_closed("width_factor", w, WIDTH_RANGE, "[0.5, 1.5]")?;
        }
        if let Some(tr) = self.translation {
            check_closed("translate_len", tr.length_px, TRANSLATION_RANGE_PX, "[0, 50]")?;
            let a = tr.angle_deg.to_f64_lossy();
            if !(0.0..360.0).contains(&a) {
                return Err(Error::Range {
                    name: "translate_angle",
                    value: a,
                    range: "[0, 360)",
                });
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.flags() == [false; 4]
    }
}

fn check_closed<T: Scalar>(name: &'static str, v: T, (lo, hi): (f64, f64), range: &'static str) -> Result<()> {
    let x = v.to_f64_lossy();
    if x >= lo && x <= hi {
        Ok(())
    } else {
        Err(Error::Range { name, value: x, range })
    }
}

fn uniform_open<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    loop {
        let v = rng.random_range(lo..hi);
        if v > lo {
            return v;
        }
    }
}

/// Draws an augmentation of family `kind` with parameters uniform over their ranges.
pub fn sample_spec<T: Scalar, R: Rng + ?Sized>(kind: AugmentationKind, rng: &mut R) -> AugmentationSpec<T> {
    let depth = |rng: &mut R| T::lit(rng.random_range(DEPTH_RANGE_PX.0..=DEPTH_RANGE_PX.1));
    let tilt = |rng: &mut R| T::lit(uniform_open(rng, TILT_RANGE_DEG));
    let width = |rng: &mut R| T::lit(uniform_open(rng, WIDTH_RANGE));
    let shift = |rng: &mut R| Translation {
        length_px: T::lit(uniform_open(rng, TRANSLATION_RANGE_PX)),
        angle_deg: T::lit(rng.random_range(0.0..360.0)),
    };
    match kind {
        AugmentationKind::Identity => AugmentationSpec::identity(),
        AugmentationKind::DepthIncrease => AugmentationSpec::depth(depth(rng)),
        AugmentationKind::Tilt => AugmentationSpec::tilt(tilt(rng)),
        AugmentationKind::SectorWidth => AugmentationSpec::width(width(rng)),
        AugmentationKind::Translation => {
            let t = shift(rng);
            AugmentationSpec::translation(t.length_px, t.angle_deg)
        }
        AugmentationKind::Combination => {
            let flags: [bool; 4] = std::array::from_fn(|_| rng.random_bool(0.5));
            AugmentationSpec::combination(
                flags[0].then(|| depth(rng)),
                flags[1].then(|| tilt(rng)),
                flags[2].then(|| width(rng)),
                flags[3].then(|| shift(rng)),
            )
        }
    }
}

/// Result of [`apply_transform`].
///
/// `frame.geometry` is the target sector the augmented image should show once
/// inpainted; `content` is where the original sector ended up.
#[derive(Debug, Clone)]
pub struct TransformedFrame<T> {
    pub frame: Frame<T>,
    pub content: SectorGeometry<T>,
    /// Output pixel has a source position on every intermediate canvas.
    pub in_canvas: Array2<bool>,
    /// Output pixel's source position lies inside the original sector.
    pub in_source_sector: Array2<bool>,
}

impl<T: Scalar> TransformedFrame<T> {
    /// Pixels carrying original in-sector content.
    pub fn original_content(&self) -> Array2<bool> {
        let mut out = self.in_canvas.clone();
        out.zip_mut_with(&self.in_source_sector, |a, b| *a = *a && *b);
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Step<T> {
    /// Isotropic scale about `(0, pivot_col)`.
    Scale { factor: T, pivot_col: T },
    /// Rotation about `pivot` by `theta` radians.
    Rotate { sin: T, cos: T, pivot: (T, T) },
    /// Horizontal scale about `pivot_col`.
    Stretch { factor: T, pivot_col: T },
    Shift { d_row: T, d_col: T },
}

impl<T: Scalar> Step<T> {
    fn inverse(&self, (y, x): (T, T)) -> (T, T) {
        match *self {
            Step::Scale { factor, pivot_col } => (y / factor, pivot_col + (x - pivot_col) / factor),
            Step::Rotate { sin, cos, pivot } => {
                let (dy, dx) = (y - pivot.0, x - pivot.1);
                (pivot.0 + dy * cos + dx * sin, pivot.1 - dy * sin + dx * cos)
            }
            Step::Stretch { factor, pivot_col } => (y, pivot_col + (x - pivot_col) / factor),
            Step::Shift { d_row, d_col } => (y - d_row, x - d_col),
        }
    }
}

/// New full opening angle after stretching a sector horizontally by `factor`.
pub fn stretched_angle_deg<T: Scalar>(angle_deg: T, factor: T) -> T {
    let half = (angle_deg * T::lit(0.5)).to_radians();
    if half >= T::FRAC_PI_2() {
        return angle_deg;
    }
    (factor * half.tan()).atan().to_degrees() * T::lit(2.0)
}

/// Builds the chain of inverse maps and the updated target and content geometries.
fn plan_steps<T: Scalar>(
    geometry: &SectorGeometry<T>,
    spec: &AugmentationSpec<T>,
) -> (Vec<Step<T>>, SectorGeometry<T>, SectorGeometry<T>) {
    let rows = T::from_usize_lossy(geometry.size().0);
    let mut steps = Vec::new();
    let mut target = *geometry;
    let mut content = *geometry;

    if let Some(lambda) = spec.depth_px {
        let factor = rows / (rows + lambda);
        let pivot_col = target.tip().1;
        steps.push(Step::Scale { factor, pivot_col });
        let tip = (target.tip().0 * factor, pivot_col);
        target = target.with_parts(tip, target.depth_mm() / factor, target.angle_deg(), target.radius_px());
        let ctip = (content.tip().0 * factor, pivot_col + (content.tip().1 - pivot_col) * factor);
        content = content.with_parts(ctip, content.depth_mm(), content.angle_deg(), content.radius_px() * factor);
    }
    if let Some(theta) = spec.tilt_deg {
        let r = theta.to_radians();
        steps.push(Step::Rotate {
            sin: r.sin(),
            cos: r.cos(),
            pivot: content.tip(),
        });
        content = content.rotated(theta);
    }
    if let Some(factor) = spec.width_factor {
        let pivot_col = content.tip().1;
        steps.push(Step::Stretch { factor, pivot_col });
        target = target.with_parts(
            (target.tip().0, pivot_col + (target.tip().1 - pivot_col) * factor),
            target.depth_mm(),
            stretched_angle_deg(target.angle_deg(), factor),
            target.radius_px(),
        );
        let a = content.axis_deg().to_radians();
        let axis = (factor * a.sin()).atan2(a.cos()).to_degrees();
        content = SectorGeometry::with_axis(
            content.tip(),
            content.depth_mm(),
            stretched_angle_deg(content.angle_deg(), factor),
            axis,
            content.radius_px(),
            content.size(),
        )
        .expect("stretching keeps a valid sector");
    }
    if let Some(tr) = spec.translation {
        let (d_row, d_col) = tr.offset();
        steps.push(Step::Shift { d_row, d_col });
        let tip = content.tip();
        content = content.with_parts((tip.0 + d_row, tip.1 + d_col), content.depth_mm(), content.angle_deg(), content.radius_px());
    }
    (steps, target, content)
}

#[inline]
fn on_canvas<T: Scalar>((y, x): (T, T), (rows, cols): (usize, usize)) -> bool {
    let half = T::lit(0.5);
    y >= -half && x >= -half && y < T::from_usize_lossy(rows) - half && x < T::from_usize_lossy(cols) - half
}

/// Bilinear sample with edge clamping. Integer positions return the stored
/// value exactly.
pub(crate) fn bilinear<T: Scalar>(img: &Array2<T>, (y, x): (T, T)) -> T {
    let (rows, cols) = img.dim();
    let y = y.max(T::zero()).min(T::from_usize_lossy(rows - 1));
    let x = x.max(T::zero()).min(T::from_usize_lossy(cols - 1));
    let y0 = y.floor();
    let x0 = x.floor();
    let fy = y - y0;
    let fx = x - x0;
    let r0 = y0.to_usize().unwrap_or(0);
    let c0 = x0.to_usize().unwrap_or(0);
    let r1 = (r0 + 1).min(rows - 1);
    let c1 = (c0 + 1).min(cols - 1);
    if fy == T::zero() && fx == T::zero() {
        return img[[r0, c0]];
    }
    let top = img[[r0, c0]] * (T::one() - fx) + img[[r0, c1]] * fx;
    let bottom = img[[r1, c0]] * (T::one() - fx) + img[[r1, c1]] * fx;
    top * (T::one() - fy) + bottom * fy
}

fn nearest<T: Scalar>(classes: &Array2<u8>, (y, x): (T, T)) -> u8 {
    let (rows, cols) = classes.dim();
    let r = y.round().max(T::zero()).to_usize().unwrap_or(0).min(rows - 1);
    let c = x.round().max(T::zero()).to_usize().unwrap_or(0).min(cols - 1);
    classes[[r, c]]
}

/// Applies `spec` to `frame`. Image intensities are resampled bilinearly and
/// labels by nearest neighbour; output pixels without an on-canvas source are 0.
pub fn apply_transform<T: Scalar>(frame: &Frame<T>, spec: &AugmentationSpec<T>) -> Result<TransformedFrame<T>> {
    spec.validate()?;
    let shape = frame.shape();
    if spec.is_identity() {
        return Ok(TransformedFrame {
            frame: frame.clone(),
            content: frame.geometry,
            in_canvas: Array2::from_elem(shape, true),
            in_source_sector: sector_mask(&frame.geometry),
        });
    }

    let (steps, target, content) = plan_steps(&frame.geometry, spec);
    let mut source = Array2::from_elem(shape, None);
    for ((r, c), slot) in source.indexed_iter_mut() {
        let mut q = (T::from_usize_lossy(r), T::from_usize_lossy(c));
        let mut ok = true;
        for step in steps.iter().rev() {
            q = step.inverse(q);
            if !on_canvas(q, shape) {
                ok = false;
                break;
            }
        }
        if ok {
            *slot = Some(q);
        }
    }

    let src_img = frame.image.pixels();
    let pixels = source.mapv(|q| q.map_or(T::zero(), |q| bilinear(src_img, q)));
    let mask = frame.mask.as_ref().map(|m| {
        let classes = m.classes();
        LabelMask::new(source.mapv(|q| q.map_or(0, |q| nearest(classes, q)))).expect("resampled labels stay valid")
    });
    let in_canvas = source.mapv(|q| q.is_some());
    let in_source_sector = source.mapv(|q| q.is_some_and(|(y, x)| frame.geometry.contains(y, x)));

    Ok(TransformedFrame {
        frame: Frame {
            image: Image::from_clamped(pixels),
            mask,
            geometry: target,
        },
        content,
        in_canvas,
        in_source_sector,
    })
}

/// Output of [`narrow_sector_preproc`].
#[derive(Debug, Clone)]
pub struct NarrowedFrame<T> {
    pub frame: Frame<T>,
    /// Opening angle of the cut sector before it was stretched back out.
    pub cut_angle_deg: T,
}

/// Cuts `delta_deg` worth of peripheral scan lines off the sector and
/// stretches what remains horizontally so its edges return to the original
/// opening angle. Everything outside the resulting sector is black.
pub fn narrow_sector_preproc<T: Scalar>(frame: &Frame<T>, delta_deg: T) -> Result<NarrowedFrame<T>> {
    let geometry = frame.geometry;
    let delta = delta_deg.to_f64_lossy();
    let angle = geometry.angle_deg().to_f64_lossy();
    if !(0.0..=MAX_NARROWING_DEG).contains(&delta) {
        return Err(Error::Range {
            name: "narrowing_deg",
            value: delta,
            range: "[0, 20]",
        });
    }
    if delta > angle - MIN_NARROWED_ANGLE_DEG {
        return Err(Error::Range {
            name: "narrowing_deg",
            value: delta,
            range: "[0, angle_deg - 5]",
        });
    }
    if delta > 0.0 && geometry.half_angle_rad() >= T::FRAC_PI_2() {
        return Err(Error::Geometry("a 180 degree sector cannot be re-widened after narrowing".into()));
    }

    let cut_angle = geometry.angle_deg() - delta_deg;
    let cut = geometry.with_parts(geometry.tip(), geometry.depth_mm(), cut_angle, geometry.radius_px());
    let factor = if delta == 0.0 {
        T::one()
    } else {
        geometry.half_angle_rad().tan() / cut.half_angle_rad().tan()
    };
    let step = Step::Stretch {
        factor,
        pivot_col: geometry.tip().1,
    };
    let shape = frame.shape();
    let inside = sector_mask(&geometry);
    let source = Array2::from_shape_fn(shape, |(r, c)| {
        if !inside[[r, c]] {
            return None;
        }
        let q = step.inverse((T::from_usize_lossy(r), T::from_usize_lossy(c)));
        (on_canvas(q, shape) && cut.contains(q.0, q.1)).then_some(q)
    });
    let src_img = frame.image.pixels();
    let pixels = source.mapv(|q| q.map_or(T::zero(), |q| bilinear(src_img, q)));
    let mask = frame.mask.as_ref().map(|m| {
        let classes = m.classes();
        LabelMask::new(source.mapv(|q| q.map_or(0, |q| nearest(classes, q)))).expect("resampled labels stay valid")
    });
    Ok(NarrowedFrame {
        frame: Frame {
            image: Image::from_clamped(pixels),
            mask,
            geometry,
        },
        cut_angle_deg: cut_angle,
    })
}

/// Draws a narrowing amount in `[0, min(20, angle - 5)]` and applies it.
pub fn random_narrow_sector<T: Scalar, R: Rng + ?Sized>(frame: &Frame<T>, rng: &mut R) -> Result<NarrowedFrame<T>> {
    let angle = frame.geometry.angle_deg().to_f64_lossy();
    let max = MAX_NARROWING_DEG.min(angle - MIN_NARROWED_ANGLE_DEG).max(0.0);
    let max = if frame.geometry.half_angle_rad() >= T::FRAC_PI_2() { 0.0 } else { max };
    let delta = if max > 0.0 { rng.random_range(0.0..=max) } else { 0.0 };
    narrow_sector_preproc(frame, T::lit(delta))
}

/// Frame indices kept when thinning a recording: starts at 0, each gap drawn
/// uniformly from 8..=12.
pub fn subsample_indices<R: Rng + ?Sized>(n_frames: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n_frames / SUBSAMPLE_GAP.0 + 1);
    let mut i = 0;
    while i < n_frames {
        out.push(i);
        i += rng.random_range(SUBSAMPLE_GAP.0..=SUBSAMPLE_GAP.1);
    }
    out
}
