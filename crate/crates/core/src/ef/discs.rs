use crate::error::{Error, Result};
use crate::geometry::SectorGeometry;
use crate::grid::{Label, LabelMask};
use crate::scalar::Scalar;

pub const DISC_COUNT: usize = 20;
pub const MIN_LV_PIXELS: usize = 50;

/// Long-axis length and per-disc diameters of one view, in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscStack<T> {
    long_axis_mm: T,
    diameters_mm: Vec<T>,
}

impl<T: Scalar> DiscStack<T> {
    pub fn new(long_axis_mm: T, diameters_mm: Vec<T>) -> Result<Self> {
        if !(long_axis_mm.is_finite() && long_axis_mm > T::zero()) {
            return Err(Error::Range {
                name: "long_axis_mm",
                value: long_axis_mm.to_f64_lossy(),
                range: "(0, inf)",
            });
        }
        if diameters_mm.is_empty() {
            return Err(Error::Invalid("disc stack needs at least one disc".into()));
        }
        if let Some(d) = diameters_mm.iter().find(|d| !(d.is_finite() && **d >= T::zero())) {
            return Err(Error::Range {
                name: "disc diameter",
                value: d.to_f64_lossy(),
                range: "[0, inf)",
            });
        }
        Ok(DiscStack {
            long_axis_mm,
            diameters_mm,
        })
    }

    pub fn long_axis_mm(&self) -> T {
        self.long_axis_mm
    }

    pub fn diameters_mm(&self) -> &[T] {
        &self.diameters_mm
    }

    pub fn len(&self) -> usize {
        self.diameters_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diameters_mm.is_empty()
    }
}

type Pt<T> = (T, T);

fn sub<T: Scalar>(a: Pt<T>, b: Pt<T>) -> Pt<T> {
    (a.0 - b.0, a.1 - b.1)
}

fn dot<T: Scalar>(a: Pt<T>, b: Pt<T>) -> T {
    a.0 * b.0 + a.1 * b.1
}

fn norm<T: Scalar>(a: Pt<T>) -> T {
    dot(a, a).sqrt()
}

fn perp<T: Scalar>(a: Pt<T>) -> Pt<T> {
    (-a.1, a.0)
}

/// Disc decomposition of the LV with [`DISC_COUNT`] discs.
pub fn extract_discs<T: Scalar>(mask: &LabelMask, geometry: &SectorGeometry<T>) -> Result<DiscStack<T>> {
    extract_discs_with(mask, geometry, DISC_COUNT)
}

/// Disc decomposition of the LV label.
///
/// The mitral base is the run of LV pixels touching the LA label, or, with
/// no LA present, the LV pixels furthest along the sector axis (away from
/// the transducer). The base midpoint is the midpoint of the two most
/// distant base pixels. The apex is the LV point furthest from the base
/// chord (ties averaged). Lengths count whole pixels, so a solid `h × w`
/// block measures `h` long and `w` wide.
pub fn extract_discs_with<T: Scalar>(mask: &LabelMask, geometry: &SectorGeometry<T>, discs: usize) -> Result<DiscStack<T>> {
    if discs == 0 {
        return Err(Error::Invalid("disc count must be >= 1".into()));
    }
    if mask.shape() != geometry.size() {
        return Err(Error::Shape {
            expected: geometry.size(),
            actual: mask.shape(),
        });
    }
    let classes = mask.classes();
    let (rows, cols) = mask.shape();
    let lv_code = Label::Lv.code();
    let la_code = Label::La.code();
    let at = |r: usize, c: usize| (T::from_usize_lossy(r), T::from_usize_lossy(c));

    let lv: Vec<(usize, usize)> = classes
        .indexed_iter()
        .filter(|(_, v)| **v == lv_code)
        .map(|(idx, _)| idx)
        .collect();
    if lv.len() < MIN_LV_PIXELS {
        return Err(Error::Segmentation(format!(
            "only {} LV pixels (need {MIN_LV_PIXELS})",
            lv.len()
        )));
    }
    let pts: Vec<Pt<T>> = lv.iter().map(|&(r, c)| at(r, c)).collect();
    let n = T::from_usize_lossy(pts.len());
    let centroid = pts.iter().fold((T::zero(), T::zero()), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let centroid = (centroid.0 / n, centroid.1 / n);

    let touches_la = |r: usize, c: usize| {
        (r > 0 && classes[[r - 1, c]] == la_code)
            || (r + 1 < rows && classes[[r + 1, c]] == la_code)
            || (c > 0 && classes[[r, c - 1]] == la_code)
            || (c + 1 < cols && classes[[r, c + 1]] == la_code)
    };
    let mut base: Vec<Pt<T>> = lv
        .iter()
        .filter(|&&(r, c)| touches_la(r, c))
        .map(|&(r, c)| at(r, c))
        .collect();
    let axis = geometry.axis_dir();
    if base.is_empty() {
        let far = pts.iter().map(|p| dot(*p, axis)).fold(T::neg_infinity(), T::max);
        let slack = T::lit(0.5);
        base = pts.iter().copied().filter(|p| dot(*p, axis) >= far - slack).collect();
    }

    let (mut e1, mut e2, mut best) = (base[0], base[0], T::zero());
    for (i, a) in base.iter().enumerate() {
        for b in &base[i + 1..] {
            let d = norm(sub(*a, *b));
            if d > best {
                (e1, e2, best) = (*a, *b, d);
            }
        }
    }
    let half = T::lit(0.5);
    let mid = ((e1.0 + e2.0) * half, (e1.1 + e2.1) * half);

    let tol = T::lit(1e-6);
    let inward = if best > tol {
        let d = sub(e2, e1);
        let nrm = perp((d.0 / best, d.1 / best));
        if dot(sub(centroid, mid), nrm) < T::zero() {
            (-nrm.0, -nrm.1)
        } else {
            nrm
        }
    } else {
        (-axis.0, -axis.1)
    };

    let height = pts.iter().map(|p| dot(sub(*p, mid), inward)).fold(T::neg_infinity(), T::max);
    let ties: Vec<Pt<T>> = pts
        .iter()
        .copied()
        .filter(|p| dot(sub(*p, mid), inward) >= height - tol)
        .collect();
    let k = T::from_usize_lossy(ties.len());
    let apex = ties.iter().fold((T::zero(), T::zero()), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let apex = (apex.0 / k, apex.1 / k);

    let span = norm(sub(apex, mid));
    if span <= tol {
        return Err(Error::Segmentation("degenerate LV long axis".into()));
    }
    let along = (sub(apex, mid).0 / span, sub(apex, mid).1 / span);
    let across = perp(along);
    let length_px = span + T::one();
    let slab = length_px / T::from_usize_lossy(discs);

    let projected: Vec<(T, T)> = pts
        .iter()
        .map(|p| {
            let v = sub(*p, mid);
            (dot(v, along), dot(v, across))
        })
        .collect();
    let mm = geometry.mm_per_px();
    let diameters = (0..discs)
        .map(|i| {
            let centre = -half + (T::from_usize_lossy(i) + half) * slab;
            let (lo, hi) = projected
                .iter()
                .filter(|(s, _)| (*s - centre).abs() <= half)
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), (_, t)| (lo.min(*t), hi.max(*t)));
            if hi >= lo {
                (hi - lo + T::one()) * mm
            } else {
                T::zero()
            }
        })
        .collect();
    DiscStack::new(length_px * mm, diameters)
}
