//! Transform, black out everything that did not come from the original
//! sector, and repaint the gaps inside the target sector.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use log::{info, warn};
use ndarray::{Array2, Zip};
use rand::Rng;
use rayon::prelude::*;

use crate::diffusion::{Denoiser, NoiseSchedule};
use crate::error::{Error, Result};
use crate::geometry::sector_mask;
use crate::grid::{Image, KeepMask, LabelMask};
use crate::io::{self, FramePaths, Metadata};
use crate::repaint::{inpaint, RepaintConfig};
use crate::rng;
use crate::scalar::Scalar;
use crate::transform::{apply_transform, sample_spec, AugmentationKind, AugmentationSpec, Frame, TransformedFrame};

/// Which augmentation arm to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Depth,
    Tilt,
    Width,
    Translation,
    Combination,
    /// Combination transforms with the gaps left black.
    NoRepaint,
}

impl Family {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "depth" => Family::Depth,
            "tilt" => Family::Tilt,
            "width" => Family::Width,
            "translation" => Family::Translation,
            "combination" => Family::Combination,
            "no-repaint" => Family::NoRepaint,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Depth => "depth",
            Family::Tilt => "tilt",
            Family::Width => "width",
            Family::Translation => "translation",
            Family::Combination => "combination",
            Family::NoRepaint => "no-repaint",
        }
    }

    pub fn kind(self) -> AugmentationKind {
        match self {
            Family::Depth => AugmentationKind::DepthIncrease,
            Family::Tilt => AugmentationKind::Tilt,
            Family::Width => AugmentationKind::SectorWidth,
            Family::Translation => AugmentationKind::Translation,
            Family::Combination | Family::NoRepaint => AugmentationKind::Combination,
        }
    }

    pub fn repaints(self) -> bool {
        self != Family::NoRepaint
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One emitted sample; variant 0 is the untouched original.
#[derive(Debug, Clone)]
pub struct AugmentedRecord<T> {
    pub source_id: String,
    pub variant_index: usize,
    pub spec: AugmentationSpec<T>,
    pub frame: Frame<T>,
    pub keep_mask: KeepMask,
}

impl<T: Scalar> AugmentedRecord<T> {
    pub fn original(source_id: &str, frame: Frame<T>) -> Self {
        let (rows, cols) = frame.shape();
        AugmentedRecord {
            source_id: source_id.to_string(),
            variant_index: 0,
            spec: AugmentationSpec::identity(),
            frame,
            keep_mask: KeepMask::full(rows, cols),
        }
    }

    pub fn stem(&self) -> String {
        format!("{}_v{}", self.source_id, self.variant_index)
    }

    pub fn metadata(&self, family: Family) -> Metadata {
        let mut m = Metadata::default();
        m.set("source_id", &self.source_id);
        m.set("variant", self.variant_index);
        m.set("family", if self.variant_index == 0 { "original" } else { family.name() });
        m.set("kind", self.spec.kind.name());
        let flags = self.spec.flags();
        m.set("flags", flags.iter().map(|f| if *f { '1' } else { '0' }).collect::<String>());
        if let Some(v) = self.spec.depth_px {
            m.set("depth_px", v.to_f64_lossy());
        }
        if let Some(v) = self.spec.tilt_deg {
            m.set("tilt_deg", v.to_f64_lossy());
        }
        if let Some(v) = self.spec.width_factor {
            m.set("width_factor", v.to_f64_lossy());
        }
        if let Some(t) = self.spec.translation {
            m.set("translate_len", t.length_px.to_f64_lossy());
            m.set("translate_angle", t.angle_deg.to_f64_lossy());
        }
        m.set("synthesized_px", self.keep_mask.synthesized_count());
        m
    }
}

/// Synthesize exactly the target-sector pixels that carry no original
/// in-sector content; keep everything else.
pub fn compute_repaint_mask<T: Scalar>(transformed: &TransformedFrame<T>) -> KeepMask {
    let target = sector_mask(&transformed.frame.geometry.upright());
    let content = transformed.original_content();
    KeepMask::new(Zip::from(&target).and(&content).map_collect(|t, c| !*t || *c))
}

/// Zeroes image and labels wherever the pixel is outside the target sector
/// or has no original in-sector content.
pub fn blacken_unsourced<T: Scalar>(transformed: &TransformedFrame<T>) -> Frame<T> {
    let target = sector_mask(&transformed.frame.geometry.upright());
    let content = transformed.original_content();
    let valid = Zip::from(&target).and(&content).map_collect(|t, c| *t && *c);
    let mut pixels = transformed.frame.image.pixels().clone();
    Zip::from(&mut pixels).and(&valid).for_each(|p, v| {
        if !*v {
            *p = T::zero();
        }
    });
    let mask = transformed.frame.mask.as_ref().map(|m| {
        let mut classes: Array2<u8> = m.classes().clone();
        Zip::from(&mut classes).and(&valid).for_each(|c, v| {
            if !*v {
                *c = 0;
            }
        });
        LabelMask::new(classes).expect("zeroing keeps labels valid")
    });
    Frame {
        image: Image::new(pixels).expect("zeroing keeps range"),
        mask,
        geometry: transformed.frame.geometry,
    }
}

/// Shared inputs of every augmentation run.
pub struct Augmenter<'a, T: Scalar, D: ?Sized> {
    pub denoiser: &'a D,
    /// Training schedule of `denoiser`.
    pub schedule: &'a NoiseSchedule<T>,
    pub repaint: RepaintConfig,
    pub family: Family,
}

impl<T: Scalar, D: Denoiser<T> + ?Sized> Augmenter<'_, T, D> {
    /// Produces a single variant from a caller-supplied spec.
    pub fn augment_with_spec<R: Rng + ?Sized>(
        &self,
        source_id: &str,
        variant_index: usize,
        frame: &Frame<T>,
        spec: AugmentationSpec<T>,
        rng: &mut R,
    ) -> Result<AugmentedRecord<T>> {
        let transformed = apply_transform(frame, &spec)?;
        let keep_mask = compute_repaint_mask(&transformed);
        let mut out = blacken_unsourced(&transformed);
        if self.family.repaints() {
            out.image = inpaint(self.schedule, self.denoiser, &out.image, &keep_mask, &self.repaint, rng)?;
        }
        Ok(AugmentedRecord {
            source_id: source_id.to_string(),
            variant_index,
            spec,
            frame: out,
            keep_mask,
        })
    }

    /// `variants` independent draws for one frame (indices `1..=variants`).
    /// Each variant has its own random stream, so a failure leaves the
    /// others unchanged.
    pub fn augment_frame(
        &self,
        source_id: &str,
        frame: &Frame<T>,
        variants: usize,
        master_seed: u64,
    ) -> Vec<Result<AugmentedRecord<T>>> {
        (1..=variants)
            .map(|k| {
                let mut rng = rng::stream(master_seed, source_id, k as u64);
                let spec = sample_spec::<T, _>(self.family.kind(), &mut rng);
                self.augment_with_spec(source_id, k, frame, spec, &mut rng)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AugmentOptions {
    pub variants: usize,
    pub master_seed: u64,
    /// Upper bound on frames processed concurrently.
    pub workers: usize,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            variants: 5,
            master_seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AugmentSummary {
    pub input_frames: usize,
    pub records_written: usize,
    /// `(source_id, variant, reason)`.
    pub failed_variants: Vec<(String, usize, String)>,
    /// `(source_id, reason)` for unreadable inputs.
    pub skipped_inputs: Vec<(String, String)>,
    pub wall_time: Duration,
}

impl AugmentSummary {
    pub fn render(&self) -> String {
        let mut s = format!(
            "input_frames={}\nrecords_written={}\nfailed_variants={}\nskipped_inputs={}\nwall_time_s={:.3}\n",
            self.input_frames,
            self.records_written,
            self.failed_variants.len(),
            self.skipped_inputs.len(),
            self.wall_time.as_secs_f64()
        );
        for (id, k, why) in &self.failed_variants {
            s.push_str(&format!("failed={id}_v{k}: {why}\n"));
        }
        for (id, why) in &self.skipped_inputs {
            s.push_str(&format!("skipped={id}: {why}\n"));
        }
        s
    }
}

fn write_record<T: Scalar>(out_dir: &Path, record: &AugmentedRecord<T>, family: Family) -> Result<()> {
    let paths = FramePaths::new(out_dir, &record.stem());
    io::write_frame(&paths, &record.frame, &record.metadata(family))
}

enum FrameOutcome {
    Done { written: usize, failed: Vec<(usize, String)> },
    Skipped(String),
}

/// Augments every frame triplet in `input_dir` into `output_dir`: the
/// original as variant 0 plus `options.variants` generated variants.
pub fn augment_dataset<T: Scalar, D: Denoiser<T> + ?Sized>(
    augmenter: &Augmenter<'_, T, D>,
    input_dir: &Path,
    output_dir: &Path,
    options: &AugmentOptions,
) -> Result<AugmentSummary> {
    let start = Instant::now();
    std::fs::create_dir_all(output_dir)?;
    let inputs = io::discover_frames(input_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?;

    let outcomes: Vec<(String, FrameOutcome)> = pool.install(|| {
        inputs
            .par_iter()
            .map(|paths| {
                let outcome = match io::read_frame::<T>(paths) {
                    Err(e) => {
                        warn!("skipping {}: {e}", paths.id);
                        FrameOutcome::Skipped(e.to_string())
                    }
                    Ok((frame, _)) => process_frame(augmenter, output_dir, &paths.id, frame, options),
                };
                (paths.id.clone(), outcome)
            })
            .collect()
    });

    let mut summary = AugmentSummary {
        input_frames: inputs.len(),
        ..Default::default()
    };
    for (id, outcome) in outcomes {
        match outcome {
            FrameOutcome::Skipped(why) => summary.skipped_inputs.push((id, why)),
            FrameOutcome::Done { written, failed } => {
                summary.records_written += written;
                summary
                    .failed_variants
                    .extend(failed.into_iter().map(|(k, why)| (id.clone(), k, why)));
            }
        }
    }
    summary.wall_time = start.elapsed();
    info!(
        "augmented {} frames into {} records ({} failed variants)",
        summary.input_frames,
        summary.records_written,
        summary.failed_variants.len()
    );
    Ok(summary)
}

fn process_frame<T: Scalar, D: Denoiser<T> + ?Sized>(
    augmenter: &Augmenter<'_, T, D>,
    output_dir: &Path,
    id: &str,
    frame: Frame<T>,
    options: &AugmentOptions,
) -> FrameOutcome {
    let mut written = 0;
    let mut failed = Vec::new();
    let original = AugmentedRecord::original(id, frame.clone());
    match write_record(output_dir, &original, augmenter.family) {
        Ok(()) => written += 1,
        Err(e) => return FrameOutcome::Skipped(format!("cannot write original: {e}")),
    }
    for (k, result) in augmenter
        .augment_frame(id, &frame, options.variants, options.master_seed)
        .into_iter()
        .enumerate()
    {
        let k = k + 1;
        match result.and_then(|r| write_record(output_dir, &r, augmenter.family)) {
            Ok(()) => written += 1,
            Err(e) => {
                warn!("{id} variant {k} failed: {e}");
                failed.push((k, e.to_string()));
            }
        }
    }
    FrameOutcome::Done { written, failed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SectorGeometry;

    fn frame() -> Frame<f64> {
        let g = SectorGeometry::new((0.0, 31.5), 100.0, 70.0, 56.0, (64, 64)).unwrap();
        let inside = sector_mask(&g);
        let img = Image::from_fn(64, 64, |(r, c)| if inside[[r, c]] { 0.2 + (r as f64) / 100.0 } else { 0.0 }).unwrap();
        Frame::new(img, None, g).unwrap()
    }

    #[test]
    fn identity_keeps_whole_sector() {
        let f = frame();
        let t = apply_transform(&f, &AugmentationSpec::identity()).unwrap();
        assert!(compute_repaint_mask(&t).is_noop());
    }

    #[test]
    fn translation_gap_matches_source_tracking() {
        let f = frame();
        let spec = AugmentationSpec::translation(20.0, 0.0);
        let t = apply_transform(&f, &spec).unwrap();
        let keep = compute_repaint_mask(&t);
        // per-pixel oracle: the source of (r, c) is (r, c - 20)
        let target = sector_mask(&f.geometry);
        let mut expected = 0;
        for r in 0..64 {
            for c in 0..64 {
                let sourced = c >= 20 && f.geometry.contains(r as f64, c as f64 - 20.0);
                if target[[r, c]] && !sourced {
                    expected += 1;
                    assert!(!keep.keeps(r, c));
                }
            }
        }
        assert_eq!(keep.synthesized_count(), expected);
        assert!(expected > 0);
    }

    #[test]
    fn family_names_roundtrip() {
        for f in [Family::Depth, Family::Tilt, Family::Width, Family::Translation, Family::Combination, Family::NoRepaint] {
            assert_eq!(Family::parse(f.name()), Some(f));
        }
        assert!(!Family::NoRepaint.repaints());
    }
}
