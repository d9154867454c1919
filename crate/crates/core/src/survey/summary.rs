use std::collections::BTreeSet;

use serde::Serialize;

use super::{binomial_test, BinomialTest, ExplanationTag, Group, PairKind, Side, SurveyPlan, SurveyResponse};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupAccuracy {
    pub name: String,
    pub participants: usize,
    /// Answers on real-vs-synthetic pairs only.
    pub trials: u64,
    pub correct: u64,
    pub accuracy: Option<f64>,
    pub test: Option<BinomialTest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagTally {
    pub tag: ExplanationTag,
    pub correct: u64,
    pub wrong: u64,
    pub decoy: u64,
}

/// Which side participants picked on real-real pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DecoyTally {
    pub left: u64,
    pub right: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveySummary {
    pub participants: usize,
    pub complete_participants: usize,
    pub overall: GroupAccuracy,
    pub groups: Vec<GroupAccuracy>,
    pub non_cardiologists: GroupAccuracy,
    pub tags: Vec<TagTally>,
    pub decoys: DecoyTally,
}

fn accuracy<'a>(name: &str, plan: &SurveyPlan, responses: impl Iterator<Item = &'a SurveyResponse>) -> GroupAccuracy {
    let mut people = BTreeSet::new();
    let (mut trials, mut correct) = (0u64, 0u64);
    for r in responses {
        people.insert(r.participant_id.as_str());
        if let Some(synth) = plan.get(r.pair_index).and_then(|p| p.synth_side.side()) {
            trials += 1;
            correct += u64::from(r.selection == synth);
        }
    }
    GroupAccuracy {
        name: name.to_string(),
        participants: people.len(),
        trials,
        correct,
        accuracy: (trials > 0).then(|| correct as f64 / trials as f64),
        test: (trials > 0).then(|| binomial_test(correct, trials)),
    }
}

/// Accuracy counts only real-vs-synthetic pairs; real-real answers feed the
/// decoy tallies.
pub fn summarize(responses: &[SurveyResponse], plan: &SurveyPlan) -> SurveySummary {
    let responses: Vec<&SurveyResponse> = responses.iter().filter(|r| r.pair_index < plan.len()).collect();
    let of = |g: Group| responses.iter().copied().filter(move |r| r.group == g);

    let mut tags: Vec<TagTally> = ExplanationTag::ALL
        .iter()
        .map(|&tag| TagTally { tag, correct: 0, wrong: 0, decoy: 0 })
        .collect();
    let mut decoys = DecoyTally::default();
    for r in &responses {
        let pair = &plan.pairs[r.pair_index];
        let tally = tags.iter_mut().find(|t| t.tag == r.tag).expect("all tags listed");
        match (pair.kind, pair.synth_side.side()) {
            (PairKind::RealVsSynth, Some(s)) if s == r.selection => tally.correct += 1,
            (PairKind::RealVsSynth, _) => tally.wrong += 1,
            (PairKind::RealReal, _) => {
                tally.decoy += 1;
                match r.selection {
                    Side::Left => decoys.left += 1,
                    Side::Right => decoys.right += 1,
                }
            }
        }
    }

    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for r in &responses {
        *counts.entry(r.participant_id.as_str()).or_default() += 1;
    }

    SurveySummary {
        participants: counts.len(),
        complete_participants: counts.values().filter(|&&c| c == plan.len()).count(),
        overall: accuracy("all", plan, responses.iter().copied()),
        groups: Group::ALL.iter().map(|&g| accuracy(g.name(), plan, of(g))).collect(),
        non_cardiologists: accuracy(
            "non_cardiologist",
            plan,
            responses.iter().copied().filter(|r| r.group != Group::Cardiologist),
        ),
        tags,
        decoys,
    }
}
