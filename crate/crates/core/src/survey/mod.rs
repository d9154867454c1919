//! Blinded realism survey: plan construction, response storage and the
//! binomial statistics of the forced-choice results.

mod plan;
mod stats;
mod store;
mod summary;

pub use plan::{build_plan, PairKind, Side, SurveyPair, SurveyPlan, SynthSide, DECOY_PAIRS, PLAN_PAIRS, SYNTH_PAIRS};
pub use stats::{binomial_test, BinomialTest};
pub use store::{
    ExplanationTag, Group, Participant, RecordError, ResponseStore, Snapshot, Submission, SurveyResponse,
};
pub use summary::{summarize, DecoyTally, GroupAccuracy, SurveySummary, TagTally};
