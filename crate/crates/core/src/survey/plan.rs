use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLAN_PAIRS: usize = 50;
pub const DECOY_PAIRS: usize = 5;
pub const SYNTH_PAIRS: usize = PLAN_PAIRS - DECOY_PAIRS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    RealVsSynth,
    RealReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthSide {
    Left,
    Right,
    None,
}

impl SynthSide {
    pub fn side(self) -> Option<Side> {
        match self {
            SynthSide::Left => Some(Side::Left),
            SynthSide::Right => Some(Side::Right),
            SynthSide::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyPair {
    pub left_id: String,
    pub right_id: String,
    pub kind: PairKind,
    pub synth_side: SynthSide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyPlan {
    pub pairs: Vec<SurveyPair>,
}

impl SurveyPlan {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&SurveyPair> {
        self.pairs.get(index)
    }

    pub fn informative(&self) -> impl Iterator<Item = (usize, &SurveyPair)> {
        self.pairs.iter().enumerate().filter(|(_, p)| p.kind == PairKind::RealVsSynth)
    }

    /// Checks composition, side consistency and that no image repeats.
    pub fn validate(&self) -> Result<()> {
        if self.pairs.len() != PLAN_PAIRS {
            return Err(Error::Invalid(format!("plan has {} pairs, expected {PLAN_PAIRS}", self.pairs.len())));
        }
        let decoys = self.pairs.iter().filter(|p| p.kind == PairKind::RealReal).count();
        if decoys != DECOY_PAIRS {
            return Err(Error::Invalid(format!("plan has {decoys} real-real pairs, expected {DECOY_PAIRS}")));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, p) in self.pairs.iter().enumerate() {
            if (p.kind == PairKind::RealReal) != (p.synth_side == SynthSide::None) {
                return Err(Error::Invalid(format!("pair {i}: synth_side inconsistent with kind")));
            }
            for id in [&p.left_id, &p.right_id] {
                if !seen.insert(id.as_str()) {
                    return Err(Error::Invalid(format!("image {id} used twice")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Draws 45 real-vs-synthetic pairs and 5 real-real decoys at random
/// positions, each image used at most once.
pub fn build_plan<R: Rng + ?Sized>(real_pool: &[String], synth_pool: &[String], rng: &mut R) -> Result<SurveyPlan> {
    let real_needed = SYNTH_PAIRS + 2 * DECOY_PAIRS;
    if real_pool.len() < real_needed || synth_pool.len() < SYNTH_PAIRS {
        return Err(Error::Invalid(format!(
            "pools too small: need {real_needed} real and {SYNTH_PAIRS} synthetic, got {} and {}",
            real_pool.len(),
            synth_pool.len()
        )));
    }
    let unique = |pool: &[String]| pool.iter().collect::<std::collections::HashSet<_>>().len() == pool.len();
    if !unique(real_pool) || !unique(synth_pool) || real_pool.iter().any(|r| synth_pool.contains(r)) {
        return Err(Error::Invalid("image ids must be unique across pools".into()));
    }
    let mut real: Vec<&String> = real_pool.choose_multiple(rng, real_needed).collect();
    real.shuffle(rng);
    let mut synth: Vec<&String> = synth_pool.choose_multiple(rng, SYNTH_PAIRS).collect();
    synth.shuffle(rng);

    let mut decoy_at = vec![false; PLAN_PAIRS];
    for i in rand::seq::index::sample(rng, PLAN_PAIRS, DECOY_PAIRS) {
        decoy_at[i] = true;
    }
    let mut real = real.into_iter();
    let mut synth = synth.into_iter();
    let mut pairs = Vec::with_capacity(PLAN_PAIRS);
    for decoy in decoy_at {
        let pair = if decoy {
            SurveyPair {
                left_id: real.next().unwrap().clone(),
                right_id: real.next().unwrap().clone(),
                kind: PairKind::RealReal,
                synth_side: SynthSide::None,
            }
        } else {
            let (r, s) = (real.next().unwrap().clone(), synth.next().unwrap().clone());
            if rng.random_bool(0.5) {
                SurveyPair { left_id: s, right_id: r, kind: PairKind::RealVsSynth, synth_side: SynthSide::Left }
            } else {
                SurveyPair { left_id: r, right_id: s, kind: PairKind::RealVsSynth, synth_side: SynthSide::Right }
            }
        };
        pairs.push(pair);
    }
    let plan = SurveyPlan { pairs };
    plan.validate()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn pools(real: usize, synth: usize) -> (Vec<String>, Vec<String>) {
        (
            (0..real).map(|i| format!("real{i}")).collect(),
            (0..synth).map(|i| format!("synth{i}")).collect(),
        )
    }

    #[test]
    fn composition() {
        let (r, s) = pools(60, 50);
        let plan = build_plan(&r, &s, &mut seeded(1)).unwrap();
        assert_eq!(plan.informative().count(), 45);
        assert_eq!(plan.pairs.iter().filter(|p| p.kind == PairKind::RealReal).count(), 5);
    }

    #[test]
    fn small_pools_rejected() {
        let (r, s) = pools(54, 45);
        assert!(build_plan(&r, &s, &mut seeded(1)).is_err());
        let (r, s) = pools(55, 44);
        assert!(build_plan(&r, &s, &mut seeded(1)).is_err());
        let (r, s) = pools(55, 45);
        assert!(build_plan(&r, &s, &mut seeded(1)).is_ok());
    }

    #[test]
    fn deterministic_and_round_trips() {
        let (r, s) = pools(70, 60);
        let a = build_plan(&r, &s, &mut seeded(9)).unwrap();
        assert_eq!(a, build_plan(&r, &s, &mut seeded(9)).unwrap());
        assert_eq!(SurveyPlan::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn left_frequency_is_balanced() {
        let (r, s) = pools(55, 45);
        let mut left = 0usize;
        let mut total = 0usize;
        for seed in 0..1000 {
            let plan = build_plan(&r, &s, &mut seeded(seed)).unwrap();
            for (_, p) in plan.informative() {
                total += 1;
                left += usize::from(p.synth_side == SynthSide::Left);
            }
        }
        let f = left as f64 / total as f64;
        assert!((0.45..=0.55).contains(&f), "{f}");
    }
}
