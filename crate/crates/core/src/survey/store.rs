use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use log::warn;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::Side;

pub const PARTICIPANTS_FILE: &str = "participants.ndjson";
pub const RESPONSES_FILE: &str = "responses.ndjson";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Cardiologist,
    ClinicalResearcher,
    Engineer,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Cardiologist, Group::ClinicalResearcher, Group::Engineer];

    pub fn name(self) -> &'static str {
        match self {
            Group::Cardiologist => "cardiologist",
            Group::ClinicalResearcher => "clinical_researcher",
            Group::Engineer => "engineer",
        }
    }
}

/// Fixed explanation categories offered to participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationTag {
    Anatomy,
    Texture,
    SectorBorder,
    Artifact,
    Other,
}

impl ExplanationTag {
    pub const ALL: [ExplanationTag; 5] = [
        ExplanationTag::Anatomy,
        ExplanationTag::Texture,
        ExplanationTag::SectorBorder,
        ExplanationTag::Artifact,
        ExplanationTag::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExplanationTag::Anatomy => "anatomy",
            ExplanationTag::Texture => "texture",
            ExplanationTag::SectorBorder => "sector_border",
            ExplanationTag::Artifact => "artifact",
            ExplanationTag::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: String,
    pub group: Group,
}

/// What a participant sends for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub participant_id: String,
    pub pair_index: usize,
    pub selection: Side,
    pub tag: ExplanationTag,
    #[serde(default)]
    pub explanation: String,
}

/// A persisted answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub participant_id: String,
    pub group: Group,
    pub pair_index: usize,
    pub selection: Side,
    pub tag: ExplanationTag,
    pub explanation: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("unknown pair index {0}")]
    UnknownPair(usize),
    #[error("participant {0} is not registered")]
    UnknownParticipant(String),
    #[error("participant {0} already registered with another group")]
    GroupConflict(String),
    #[error("participant {participant} already answered pair {pair_index}")]
    Duplicate { participant: String, pair_index: usize },
    #[error("explanation required")]
    MissingExplanation,
    #[error("participant id must be non-empty")]
    EmptyParticipant,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RecordError {
    /// True for rejections caused by state that already exists.
    pub fn is_conflict(&self) -> bool {
        matches!(self, RecordError::Duplicate { .. } | RecordError::GroupConflict(_))
    }
}

/// Immutable view of the store at one point in time.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub participants: BTreeMap<String, Group>,
    pub responses: Vec<SurveyResponse>,
    answered: HashSet<(String, usize)>,
}

impl Snapshot {
    pub fn answered(&self, participant: &str, pair_index: usize) -> bool {
        self.answered.contains(&(participant.to_string(), pair_index))
    }

    pub fn answered_count(&self, participant: &str) -> usize {
        self.responses.iter().filter(|r| r.participant_id == participant).count()
    }

    /// First pair the participant has not answered, if any.
    pub fn next_unanswered(&self, participant: &str, pairs: usize) -> Option<usize> {
        (0..pairs).find(|&i| !self.answered(participant, i))
    }

    fn push(&mut self, r: SurveyResponse) {
        self.answered.insert((r.participant_id.clone(), r.pair_index));
        self.responses.push(r);
    }
}

struct Inner {
    participants: File,
    responses: File,
    snapshot: Arc<Snapshot>,
}

/// Append-only newline-delimited JSON store. Writes are serialized, reads
/// hand out shared snapshots.
pub struct ResponseStore {
    dir: PathBuf,
    pairs: usize,
    inner: Mutex<Inner>,
}

fn load<T: DeserializeOwned>(path: &Path) -> std::io::Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            // a torn final write after a crash
            Err(e) => warn!("{}:{}: skipping unreadable record: {e}", path.display(), n + 1),
        }
    }
    Ok(out)
}

// Ends a torn final record with a newline so the next append starts clean.
fn terminate(path: &Path) -> std::io::Result<()> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e),
    };
    if bytes.last().is_some_and(|b| *b != b'\n') {
        OpenOptions::new().append(true).open(path)?.write_all(b"\n")?;
    }
    Ok(())
}

fn append(file: &mut File, value: &impl Serialize) -> std::io::Result<()> {
    let mut line = serde_json::to_string(value).map_err(std::io::Error::other)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.sync_data()
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl ResponseStore {
    /// Opens (creating if needed) the store in `dir` for a plan of `pairs` pairs.
    pub fn open(dir: &Path, pairs: usize) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        terminate(&dir.join(PARTICIPANTS_FILE))?;
        terminate(&dir.join(RESPONSES_FILE))?;
        let mut snapshot = Snapshot::default();
        for p in load::<Participant>(&dir.join(PARTICIPANTS_FILE))? {
            snapshot.participants.insert(p.participant_id, p.group);
        }
        for r in load::<SurveyResponse>(&dir.join(RESPONSES_FILE))? {
            if !snapshot.answered(&r.participant_id, r.pair_index) {
                snapshot.push(r);
            }
        }
        let open = |name| OpenOptions::new().create(true).append(true).open(dir.join(name));
        Ok(Self {
            dir: dir.to_path_buf(),
            pairs,
            inner: Mutex::new(Inner {
                participants: open(PARTICIPANTS_FILE)?,
                responses: open(RESPONSES_FILE)?,
                snapshot: Arc::new(snapshot),
            }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.inner.lock().expect("store lock").snapshot)
    }

    /// Registers a participant; registering again with the same group is a no-op.
    pub fn register(&self, participant_id: &str, group: Group) -> Result<(), RecordError> {
        if participant_id.trim().is_empty() {
            return Err(RecordError::EmptyParticipant);
        }
        let mut inner = self.inner.lock().expect("store lock");
        match inner.snapshot.participants.get(participant_id) {
            Some(g) if *g == group => return Ok(()),
            Some(_) => return Err(RecordError::GroupConflict(participant_id.to_string())),
            None => {}
        }
        let p = Participant {
            participant_id: participant_id.to_string(),
            group,
        };
        append(&mut inner.participants, &p)?;
        Arc::make_mut(&mut inner.snapshot).participants.insert(p.participant_id, group);
        Ok(())
    }

    pub fn record(&self, s: Submission) -> Result<SurveyResponse, RecordError> {
        if s.pair_index >= self.pairs {
            return Err(RecordError::UnknownPair(s.pair_index));
        }
        if s.tag == ExplanationTag::Other && s.explanation.trim().is_empty() {
            return Err(RecordError::MissingExplanation);
        }
        let mut inner = self.inner.lock().expect("store lock");
        let group = *inner
            .snapshot
            .participants
            .get(&s.participant_id)
            .ok_or_else(|| RecordError::UnknownParticipant(s.participant_id.clone()))?;
        if inner.snapshot.answered(&s.participant_id, s.pair_index) {
            return Err(RecordError::Duplicate {
                participant: s.participant_id,
                pair_index: s.pair_index,
            });
        }
        let r = SurveyResponse {
            participant_id: s.participant_id,
            group,
            pair_index: s.pair_index,
            selection: s.selection,
            tag: s.tag,
            explanation: s.explanation.trim().to_string(),
            timestamp: now_millis(),
        };
        append(&mut inner.responses, &r)?;
        Arc::make_mut(&mut inner.snapshot).push(r.clone());
        Ok(r)
    }
}
