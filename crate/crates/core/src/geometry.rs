//! Fan-beam sector model and its pixel mask.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default frame size used by the trained diffusion model.
pub const DEFAULT_SIZE: (usize, usize) = (256, 256);

/// Angular slack (radians) so that pixel centres lying exactly on a sector
/// edge count as inside regardless of `atan2` rounding.
const EDGE_SLACK: f64 = 1e-9;

/// An ultrasound sector: a circular wedge opening away from the transducer tip.
///
/// Coordinates are `(row, col)` in pixels with pixel centres at integer
/// positions. The sector axis points down the image (`+row`) when
/// `axis_deg == 0`; positive `axis_deg` swings it towards `+col`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGeometry<T> {
    tip: (T, T),
    depth_mm: T,
    angle_deg: T,
    axis_deg: T,
    radius_px: T,
    size: (usize, usize),
}

impl<T: Scalar> SectorGeometry<T> {
    /// Sector pointing straight down from `tip`.
    pub fn new(
        tip: (T, T),
        depth_mm: T,
        angle_deg: T,
        radius_px: T,
        size: (usize, usize),
    ) -> Result<Self> {
        Self::with_axis(tip, depth_mm, angle_deg, T::zero(), radius_px, size)
    }

    pub fn with_axis(
        tip: (T, T),
        depth_mm: T,
        angle_deg: T,
        axis_deg: T,
        radius_px: T,
        size: (usize, usize),
    ) -> Result<Self> {
        if !(depth_mm.is_finite() && depth_mm > T::zero()) {
            return Err(Error::Geometry(format!("depth_mm must be > 0, got {depth_mm}")));
        }
        if !(angle_deg > T::zero() && angle_deg <= T::lit(180.0)) {
            return Err(Error::Geometry(format!(
                "angle_deg must lie in (0, 180], got {angle_deg}"
            )));
        }
        if !(radius_px.is_finite() && radius_px > T::zero()) {
            return Err(Error::Geometry(format!("radius_px must be > 0, got {radius_px}")));
        }
        if size.0 == 0 || size.1 == 0 {
            return Err(Error::Geometry(format!("empty image size {size:?}")));
        }
        if !(tip.0.is_finite() && tip.1.is_finite() && axis_deg.is_finite()) {
            return Err(Error::Geometry("non-finite tip or axis".into()));
        }
        Ok(SectorGeometry {
            tip,
            depth_mm,
            angle_deg,
            axis_deg,
            radius_px,
            size,
        })
    }

    /// Builds a geometry from the sidecar representation, deriving the pixel
    /// radius from `depth_mm / mm_per_px`.
    pub fn from_mm_per_px(
        tip: (T, T),
        depth_mm: T,
        angle_deg: T,
        mm_per_px: T,
        size: (usize, usize),
    ) -> Result<Self> {
        if !(mm_per_px.is_finite() && mm_per_px > T::zero()) {
            return Err(Error::Geometry(format!("mm_per_px must be > 0, got {mm_per_px}")));
        }
        Self::new(tip, depth_mm, angle_deg, depth_mm / mm_per_px, size)
    }

    /// Tip at the top-centre, arc touching `fill` of the image height.
    pub fn centered(size: (usize, usize), depth_mm: T, angle_deg: T, fill: T) -> Result<Self> {
        let tip = (T::zero(), T::from_usize_lossy(size.1 - 1) * T::lit(0.5));
        let radius = T::from_usize_lossy(size.0 - 1) * fill;
        Self::new(tip, depth_mm, angle_deg, radius, size)
    }

    pub fn tip(&self) -> (T, T) {
        self.tip
    }
    pub fn depth_mm(&self) -> T {
        self.depth_mm
    }
    pub fn angle_deg(&self) -> T {
        self.angle_deg
    }
    pub fn axis_deg(&self) -> T {
        self.axis_deg
    }
    pub fn radius_px(&self) -> T {
        self.radius_px
    }
    pub fn size(&self) -> (usize, usize) {
        self.size
    }

    pub fn mm_per_px(&self) -> T {
        self.depth_mm / self.radius_px
    }

    pub fn half_angle_rad(&self) -> T {
        (self.angle_deg * T::lit(0.5)).to_radians()
    }

    /// Unit vector `(d_row, d_col)` along the sector axis.
    pub fn axis_dir(&self) -> (T, T) {
        let a = self.axis_deg.to_radians();
        (a.cos(), a.sin())
    }

    /// Same sector with its axis rotated by `theta_deg` about the tip.
    pub fn rotated(&self, theta_deg: T) -> Self {
        SectorGeometry {
            axis_deg: self.axis_deg + theta_deg,
            ..*self
        }
    }

    /// Same sector with the axis reset to point straight down.
    pub fn upright(&self) -> Self {
        SectorGeometry {
            axis_deg: T::zero(),
            ..*self
        }
    }

    pub(crate) fn with_parts(&self, tip: (T, T), depth_mm: T, angle_deg: T, radius_px: T) -> Self {
        SectorGeometry {
            tip,
            depth_mm,
            angle_deg,
            radius_px,
            ..*self
        }
    }

    /// Point-in-sector test for a continuous `(row, col)` position.
    pub fn contains(&self, row: T, col: T) -> bool {
        let dy = row - self.tip.0;
        let dx = col - self.tip.1;
        if dy * dy + dx * dx > self.radius_px * self.radius_px {
            return false;
        }
        let (ay, ax) = self.axis_dir();
        let along = dy * ay + dx * ax;
        let lateral = -dy * ax + dx * ay;
        let off = lateral.atan2(along);
        off.abs() <= self.half_angle_rad() + T::lit(EDGE_SLACK)
    }
}

/// Binary mask of pixels whose centres lie inside the sector.
pub fn sector_mask<T: Scalar>(geometry: &SectorGeometry<T>) -> Array2<bool> {
    let (rows, cols) = geometry.size();
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        geometry.contains(T::from_usize_lossy(r), T::from_usize_lossy(c))
    })
}

/// Pixels of `mask` that are 4-adjacent to a pixel outside it (or to the border).
pub fn mask_perimeter(mask: &Array2<bool>) -> Array2<bool> {
    let (rows, cols) = mask.dim();
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        if !mask[[r, c]] {
            return false;
        }
        let outside = |rr: isize, cc: isize| {
            rr < 0
                || cc < 0
                || rr >= rows as isize
                || cc >= cols as isize
                || !mask[[rr as usize, cc as usize]]
        };
        let (r, c) = (r as isize, c as isize);
        outside(r - 1, c) || outside(r + 1, c) || outside(r, c - 1) || outside(r, c + 1)
    })
}
