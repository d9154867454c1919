use log::debug;

use super::{biplane_volume, ef_fraction, extract_discs, DiscStack};
use crate::error::{Error, Result};
use crate::geometry::SectorGeometry;
use crate::grid::LabelMask;
use crate::scalar::Scalar;

/// Imaging depth above which an exam leaves the normal acquisition range.
pub const NORMAL_MAX_DEPTH_MM: f64 = 150.0;
/// Sector angle above which an exam leaves the normal acquisition range.
pub const NORMAL_MAX_ANGLE_DEG: f64 = 70.0;

#[derive(Debug, Clone)]
pub struct PhaseFrame<T> {
    pub mask: LabelMask,
    pub geometry: SectorGeometry<T>,
}

/// End-diastolic and end-systolic frames of one cardiac cycle.
#[derive(Debug, Clone)]
pub struct Cycle<T> {
    pub ed: PhaseFrame<T>,
    pub es: PhaseFrame<T>,
}

#[derive(Debug, Clone)]
pub struct ExamRecord<T> {
    pub patient_id: String,
    pub a2c: Vec<Cycle<T>>,
    pub a4c: Vec<Cycle<T>>,
    pub manual_ef: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEf<T> {
    pub a2c_cycle: usize,
    pub a4c_cycle: usize,
    pub edv_ml: T,
    pub esv_ml: T,
    pub ef: T,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfResult<T> {
    /// Mean over all (A2C cycle, A4C cycle) pairs, each pair weighted equally.
    pub ef: T,
    pub pairs: Vec<PairEf<T>>,
    pub failed_a2c: Vec<usize>,
    pub failed_a4c: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EfOutcome<T> {
    Computed(EfResult<T>),
    /// No usable cycle in at least one view; the exam drops out of the analysis.
    Omitted { reason: String },
}

impl<T> EfOutcome<T> {
    pub fn result(&self) -> Option<&EfResult<T>> {
        match self {
            EfOutcome::Computed(r) => Some(r),
            EfOutcome::Omitted { .. } => None,
        }
    }
}

struct CycleDiscs<T> {
    index: usize,
    ed: DiscStack<T>,
    es: DiscStack<T>,
}

fn usable_cycles<T: Scalar>(view: &str, cycles: &[Cycle<T>]) -> (Vec<CycleDiscs<T>>, Vec<usize>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (index, cycle) in cycles.iter().enumerate() {
        match (
            extract_discs(&cycle.ed.mask, &cycle.ed.geometry),
            extract_discs(&cycle.es.mask, &cycle.es.geometry),
        ) {
            (Ok(ed), Ok(es)) => ok.push(CycleDiscs { index, ed, es }),
            (ed, es) => {
                debug!("{view} cycle {index} failed: {:?} / {:?}", ed.err(), es.err());
                failed.push(index);
            }
        }
    }
    (ok, failed)
}

/// EF of an exam: every usable A2C cycle combined with every usable A4C
/// cycle, pair EFs averaged.
pub fn exam_ef<T: Scalar>(exam: &ExamRecord<T>) -> EfOutcome<T> {
    let (a2c, failed_a2c) = usable_cycles("a2c", &exam.a2c);
    let (a4c, failed_a4c) = usable_cycles("a4c", &exam.a4c);
    if a2c.is_empty() || a4c.is_empty() {
        let view = if a2c.is_empty() { "A2C" } else { "A4C" };
        return EfOutcome::Omitted {
            reason: format!("no usable {view} cycle"),
        };
    }
    let mut pairs = Vec::with_capacity(a2c.len() * a4c.len());
    for two in &a2c {
        for four in &a4c {
            let volumes = biplane_volume(&two.ed, &four.ed)
                .and_then(|edv| biplane_volume(&two.es, &four.es).map(|esv| (edv, esv)))
                .and_then(|(edv, esv)| ef_fraction(edv, esv).map(|ef| (edv, esv, ef)));
            match volumes {
                Ok((edv, esv, ef)) => pairs.push(PairEf {
                    a2c_cycle: two.index,
                    a4c_cycle: four.index,
                    edv_ml: edv,
                    esv_ml: esv,
                    ef: ef.value,
                    flagged: ef.flagged,
                }),
                Err(e) => debug!("pair ({}, {}) skipped: {e}", two.index, four.index),
            }
        }
    }
    if pairs.is_empty() {
        return EfOutcome::Omitted {
            reason: "no cycle pair produced a volume".into(),
        };
    }
    let ef = pairs.iter().map(|p| p.ef).sum::<T>() / T::from_usize_lossy(pairs.len());
    EfOutcome::Computed(EfResult {
        ef,
        pairs,
        failed_a2c,
        failed_a4c,
    })
}

/// True iff a frame used for the EF has depth above 150 mm or sector angle
/// above 70°. When no cycle is usable, every frame of the exam is checked.
pub fn is_out_of_range<T: Scalar>(exam: &ExamRecord<T>) -> Result<bool> {
    let all = || exam.a2c.iter().chain(&exam.a4c).collect::<Vec<_>>();
    let used: Vec<&Cycle<T>> = match exam_ef(exam) {
        EfOutcome::Computed(r) => r
            .pairs
            .iter()
            .flat_map(|p| [&exam.a2c[p.a2c_cycle], &exam.a4c[p.a4c_cycle]])
            .collect(),
        EfOutcome::Omitted { .. } => all(),
    };
    if used.is_empty() {
        return Err(Error::Invalid(format!("exam {} has no frames", exam.patient_id)));
    }
    let depth = T::lit(NORMAL_MAX_DEPTH_MM);
    let angle = T::lit(NORMAL_MAX_ANGLE_DEG);
    Ok(used
        .iter()
        .flat_map(|c| [&c.ed, &c.es])
        .any(|f| f.geometry.depth_mm() > depth || f.geometry.angle_deg() > angle))
}

/// Counts of exams with and without an EF value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Feasibility {
    pub total: usize,
    pub computed: usize,
    pub omitted: usize,
}

impl Feasibility {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.computed as f64 / self.total as f64
        }
    }
}

pub fn feasibility<'a, T: 'a>(outcomes: impl IntoIterator<Item = &'a EfOutcome<T>>) -> Feasibility {
    let mut f = Feasibility::default();
    for o in outcomes {
        f.total += 1;
        match o {
            EfOutcome::Computed(_) => f.computed += 1,
            EfOutcome::Omitted { .. } => f.omitted += 1,
        }
    }
    f
}
