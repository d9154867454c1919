//! Frame files: 8-bit grayscale image PNG, class-coded mask PNG and a
//! `key=value` metadata sidecar.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::SectorGeometry;
use crate::grid::{Image, LabelMask};
use crate::scalar::Scalar;
use crate::transform::Frame;

pub const IMAGE_SUFFIX: &str = "_img.png";
pub const MASK_SUFFIX: &str = "_msk.png";
pub const META_SUFFIX: &str = "_meta.txt";

const GEOMETRY_KEYS: [&str; 5] = ["tip_row", "tip_col", "depth_mm", "angle_deg", "mm_per_px"];

pub fn read_image<T: Scalar>(path: &Path) -> Result<Image<T>> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = img.dimensions();
    let pixels = Array2::from_shape_fn((h as usize, w as usize), |(r, c)| {
        T::lit(f64::from(img.get_pixel(c as u32, r as u32)[0]) / 255.0)
    });
    Image::new(pixels)
}

pub fn write_image<T: Scalar>(path: &Path, image: &Image<T>) -> Result<()> {
    let (h, w) = image.shape();
    let px = image.pixels();
    let out = GrayImage::from_fn(w as u32, h as u32, |c, r| {
        let v = px[[r as usize, c as usize]].to_f64_lossy();
        Luma([(v * 255.0).round().clamp(0.0, 255.0) as u8])
    });
    out.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

pub fn read_mask(path: &Path) -> Result<LabelMask> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = img.dimensions();
    LabelMask::new(Array2::from_shape_fn((h as usize, w as usize), |(r, c)| {
        img.get_pixel(c as u32, r as u32)[0]
    }))
}

pub fn write_mask(path: &Path, mask: &LabelMask) -> Result<()> {
    let (h, w) = mask.shape();
    let classes = mask.classes();
    let out = GrayImage::from_fn(w as u32, h as u32, |c, r| Luma([classes[[r as usize, c as usize]]]));
    out.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Parsed sidecar: every `key=value` line, in key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub entries: BTreeMap<String, String>,
}

impl Metadata {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Metadata {
                path: origin.to_string(),
                msg: format!("line {} is not key=value", n + 1),
            })?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Metadata { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn number(&self, key: &str, origin: &str) -> Result<f64> {
        let raw = self.get(key).ok_or_else(|| Error::Metadata {
            path: origin.to_string(),
            msg: format!("missing key `{key}`"),
        })?;
        raw.parse::<f64>().map_err(|_| Error::Metadata {
            path: origin.to_string(),
            msg: format!("`{key}` is not a number: {raw}"),
        })
    }

    pub fn geometry<T: Scalar>(&self, size: (usize, usize), origin: &str) -> Result<SectorGeometry<T>> {
        let tip = (T::lit(self.number("tip_row", origin)?), T::lit(self.number("tip_col", origin)?));
        let depth = T::lit(self.number("depth_mm", origin)?);
        let angle = T::lit(self.number("angle_deg", origin)?);
        let mm_per_px = T::lit(self.number("mm_per_px", origin)?);
        let axis = match self.get("axis_deg") {
            Some(_) => T::lit(self.number("axis_deg", origin)?),
            None => T::zero(),
        };
        if mm_per_px <= T::zero() {
            return Err(Error::Metadata {
                path: origin.to_string(),
                msg: "mm_per_px must be > 0".into(),
            });
        }
        SectorGeometry::with_axis(tip, depth, angle, axis, depth / mm_per_px, size)
    }

    pub fn set_geometry<T: Scalar>(&mut self, g: &SectorGeometry<T>) {
        self.set("tip_row", g.tip().0.to_f64_lossy());
        self.set("tip_col", g.tip().1.to_f64_lossy());
        self.set("depth_mm", g.depth_mm().to_f64_lossy());
        self.set("angle_deg", g.angle_deg().to_f64_lossy());
        self.set("mm_per_px", g.mm_per_px().to_f64_lossy());
        if g.axis_deg() != T::zero() {
            self.set("axis_deg", g.axis_deg().to_f64_lossy());
        } else {
            self.entries.remove("axis_deg");
        }
    }

    /// Geometry keys first, then the rest alphabetically.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in GEOMETRY_KEYS {
            if let Some(v) = self.entries.get(k) {
                let _ = writeln!(out, "{k}={v}");
            }
        }
        for (k, v) in &self.entries {
            if !GEOMETRY_KEYS.contains(&k.as_str()) {
                let _ = writeln!(out, "{k}={v}");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// Paths of one frame triplet sharing `stem`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePaths {
    pub id: String,
    pub image: PathBuf,
    pub mask: PathBuf,
    pub meta: PathBuf,
}

impl FramePaths {
    pub fn new(dir: &Path, id: &str) -> Self {
        FramePaths {
            id: id.to_string(),
            image: dir.join(format!("{id}{IMAGE_SUFFIX}")),
            mask: dir.join(format!("{id}{MASK_SUFFIX}")),
            meta: dir.join(format!("{id}{META_SUFFIX}")),
        }
    }
}

/// Frame triplets in `dir`, sorted by id. A triplet is keyed by its image file.
pub fn discover_frames(dir: &Path) -> Result<Vec<FramePaths>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(id) = name.strip_suffix(IMAGE_SUFFIX) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids.iter().map(|id| FramePaths::new(dir, id)).collect())
}

/// Reads a frame; the mask is optional on disk.
pub fn read_frame<T: Scalar>(paths: &FramePaths) -> Result<(Frame<T>, Metadata)> {
    let image = read_image::<T>(&paths.image)?;
    let mask = if paths.mask.exists() {
        Some(read_mask(&paths.mask)?)
    } else {
        None
    };
    let meta = Metadata::read(&paths.meta)?;
    let geometry = meta.geometry(image.shape(), &paths.meta.display().to_string())?;
    Ok((Frame::new(image, mask, geometry)?, meta))
}

pub fn write_frame<T: Scalar>(paths: &FramePaths, frame: &Frame<T>, meta: &Metadata) -> Result<()> {
    write_image(&paths.image, &frame.image)?;
    if let Some(m) = &frame.mask {
        write_mask(&paths.mask, m)?;
    }
    let mut meta = meta.clone();
    meta.set_geometry(&frame.geometry);
    meta.write(&paths.meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_parse_and_render() {
        let m = Metadata::parse("# comment\ndepth_mm = 120\ntip_row=0\n\nzeta=1\ntip_col=127.5\nangle_deg=75\nmm_per_px=0.5\n", "x").unwrap();
        assert_eq!(m.get("depth_mm"), Some("120"));
        let text = m.render();
        assert!(text.starts_with("tip_row=0\ntip_col=127.5\ndepth_mm=120\nangle_deg=75\nmm_per_px=0.5\nzeta=1\n"));
        let g: SectorGeometry<f64> = m.geometry((256, 256), "x").unwrap();
        assert_eq!(g.radius_px(), 240.0);
        assert!(Metadata::parse("nonsense", "x").is_err());
    }

    #[test]
    fn missing_key_reported() {
        let m = Metadata::parse("tip_row=0", "f.txt").unwrap();
        let err = m.geometry::<f64>((4, 4), "f.txt").unwrap_err();
        assert!(err.to_string().contains("tip_col"));
    }

    #[test]
    fn frame_roundtrip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let g = SectorGeometry::new((0.0, 7.5), 80.0, 70.0, 14.0, (16, 16)).unwrap();
        let img = Image::from_fn(16, 16, |(r, c)| ((r * 16 + c) % 256) as f64 / 255.0).unwrap();
        let mask = LabelMask::from_fn(16, 16, |(r, c)| ((r + c) % 4) as u8).unwrap();
        let frame = Frame::new(img, Some(mask), g).unwrap();
        let paths = FramePaths::new(dir.path(), "f1");
        write_frame(&paths, &frame, &Metadata::default()).unwrap();
        let found = discover_frames(dir.path()).unwrap();
        assert_eq!(found, vec![paths.clone()]);
        let (back, _) = read_frame::<f64>(&paths).unwrap();
        assert_eq!(back.mask, frame.mask);
        for (a, b) in back.image.pixels().iter().zip(frame.image.pixels()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((back.geometry.depth_mm() - 80.0).abs() < 1e-12);
        assert!((back.geometry.radius_px() - 14.0).abs() < 1e-9);
    }
}
