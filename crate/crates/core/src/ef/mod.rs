//! Ejection fraction from end-diastolic and end-systolic LV masks using the
//! biplane method of discs, plus agreement statistics against a manual
//! reference.

mod bland_altman;
mod discs;
mod exam;
mod volume;

pub use bland_altman::{bland_altman, BlandAltmanPoint, BlandAltmanStats, LOA_Z};
pub use discs::{extract_discs, extract_discs_with, DiscStack, DISC_COUNT, MIN_LV_PIXELS};
pub use exam::{
    exam_ef, feasibility, is_out_of_range, Cycle, EfOutcome, EfResult, ExamRecord, Feasibility, PairEf, PhaseFrame,
    NORMAL_MAX_ANGLE_DEG, NORMAL_MAX_DEPTH_MM,
};
pub use volume::{biplane_volume, ef_fraction, EjectionFraction};
