//! Corpus-directory backed annotation store.
//!
//! Each dialogue sits behind its own mutex, so edits to one dialogue are
//! serialized while different dialogues can be edited in parallel. Turns
//! carry a revision token (SHA-256 of their canonical JSON); an update has
//! to quote the current token or it is rejected as a conflict.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use dialact::io::{self, IoError, ParseOptions};
use dialact::model::{turn_path, validate_turn, Segment, Severity};
use dialact::{validate, AnnotationSchema, Corpus, Dialogue, ExactStats, Finding, Turn, ValidationReport};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Name of the file holding the next free segment id.
pub const SEG_COUNTER_FILE: &str = "seg_id_counter";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("dialogue {0} not found")]
    DialogueNotFound(u32),
    #[error("turn {uid} not found in dialogue {did}")]
    TurnNotFound { did: u32, uid: String },
    #[error("revision mismatch for {uid}")]
    Conflict { uid: String, current: String },
    #[error("update rejected by validation")]
    Invalid(Vec<Finding>),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{}: {source}", path.display())]
    Fs {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SegmentUpdate {
    #[serde(rename = "Segment", alias = "text")]
    pub text: String,
    #[serde(rename = "SDA", alias = "act")]
    pub act: String,
}

/// The editable state of one turn, as submitted by an annotator.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct AnnotationUpdate {
    #[serde(rename = "UID", alias = "uid", default)]
    pub uid: Option<String>,
    #[serde(rename = "Over_ALL_DA", alias = "overall_act")]
    pub overall_act: String,
    #[serde(rename = "isSegmented", alias = "is_segmented")]
    pub is_segmented: bool,
    #[serde(rename = "Segments", alias = "segments", default)]
    pub segments: Vec<SegmentUpdate>,
    #[serde(rename = "Revision", alias = "revision", default)]
    pub revision: Option<String>,
}

/// A turn together with its current revision token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredTurn {
    pub turn: Turn,
    pub revision: String,
}

pub fn revision_of(turn: &Turn) -> String {
    let bytes = io::canonical_json(&io::turn_value(turn));
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogueSummary {
    pub did: u32,
    pub modality: dialact::Modality,
    pub source: String,
    pub turn_count: usize,
}

pub struct AnnotationStore {
    dir: PathBuf,
    schema: AnnotationSchema,
    dialogues: BTreeMap<u32, Mutex<Dialogue>>,
    next_seg_id: Mutex<u64>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // a panicking writer never leaves partial state behind: memory is only
    // replaced after the file write succeeded
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn read_counter(path: &Path) -> Result<Option<u64>, StoreError> {
    match fs::read_to_string(path) {
        Ok(text) => text
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| StoreError::BadRequest(format!("{} is not a number", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(StoreError::Fs {
            path: path.to_path_buf(),
            source,
        }),
    }
}

impl AnnotationStore {
    pub fn open(dir: impl Into<PathBuf>, schema: AnnotationSchema) -> Result<Self, StoreError> {
        let dir = dir.into();
        let corpus = io::read_corpus_dir(&dir, &schema, ParseOptions::strict())?;
        let from_file = read_counter(&dir.join(SEG_COUNTER_FILE))?.unwrap_or(1);
        let next = from_file.max(corpus.max_seg_id() + 1);
        Ok(AnnotationStore {
            dir,
            schema,
            dialogues: corpus
                .dialogues
                .into_iter()
                .map(|d| (d.did, Mutex::new(d)))
                .collect(),
            next_seg_id: Mutex::new(next),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn schema(&self) -> &AnnotationSchema {
        &self.schema
    }

    pub fn list(&self) -> Vec<DialogueSummary> {
        self.dialogues
            .values()
            .map(|m| {
                let d = lock(m);
                DialogueSummary {
                    did: d.did,
                    modality: d.modality,
                    source: d.source.clone(),
                    turn_count: d.turns.len(),
                }
            })
            .collect()
    }

    pub fn dialogue(&self, did: u32) -> Result<Dialogue, StoreError> {
        self.dialogues
            .get(&did)
            .map(|m| lock(m).clone())
            .ok_or(StoreError::DialogueNotFound(did))
    }

    pub fn turn(&self, did: u32, uid: &str) -> Result<StoredTurn, StoreError> {
        let dialogue = self.dialogue(did)?;
        let turn = dialogue
            .turn(uid)
            .cloned()
            .ok_or_else(|| StoreError::TurnNotFound {
                did,
                uid: uid.to_string(),
            })?;
        Ok(StoredTurn {
            revision: revision_of(&turn),
            turn,
        })
    }

    /// Per-dialogue consistent copy of the whole corpus.
    pub fn snapshot(&self) -> Corpus {
        Corpus::new(self.dialogues.values().map(|m| lock(m).clone()).collect())
    }

    pub fn stats(&self) -> ExactStats {
        dialact::compute_stats(&self.snapshot())
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.snapshot(), &self.schema)
    }

    /// Applies an annotation to a turn. Nothing changes, in memory or on
    /// disk, unless the result passes R1 to R5 and has been written.
    pub fn update(&self, did: u32, uid: &str, update: AnnotationUpdate) -> Result<StoredTurn, StoreError> {
        if let Some(body_uid) = &update.uid {
            if body_uid != uid {
                return Err(StoreError::BadRequest(format!(
                    "body UID {body_uid} does not match {uid}"
                )));
            }
        }
        let slot = self
            .dialogues
            .get(&did)
            .ok_or(StoreError::DialogueNotFound(did))?;
        let mut dialogue = lock(slot);
        let index = dialogue
            .turns
            .iter()
            .position(|t| t.uid == uid)
            .ok_or_else(|| StoreError::TurnNotFound {
                did,
                uid: uid.to_string(),
            })?;
        let current = revision_of(&dialogue.turns[index]);
        if update.revision.as_deref() != Some(current.as_str()) {
            return Err(StoreError::Conflict {
                uid: uid.to_string(),
                current,
            });
        }

        let canonical = |name: &str| {
            self.schema
                .canonical_name(name)
                .map(str::to_string)
                .unwrap_or_else(|| name.to_string())
        };
        let mut candidate = dialogue.turns[index].clone();
        candidate.overall_act = canonical(&update.overall_act);
        candidate.is_segmented = update.is_segmented;
        // provisional ids; real ones are only drawn once the turn is accepted
        candidate.segments = update
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| Segment {
                seg_id: i as u64 + 1,
                text: s.text.clone(),
                act: canonical(&s.act),
            })
            .collect();
        let errors: Vec<Finding> = validate_turn(&candidate, &turn_path(did, uid), &self.schema)
            .into_iter()
            .filter(|f| f.severity == Severity::Error)
            .collect();
        if !errors.is_empty() {
            return Err(StoreError::Invalid(errors));
        }

        if !candidate.segments.is_empty() {
            let mut next = lock(&self.next_seg_id);
            let first = *next;
            let after = first + candidate.segments.len() as u64;
            io::write_atomic(&self.dir.join(SEG_COUNTER_FILE), format!("{after}\n").as_bytes())?;
            *next = after;
            for (offset, seg) in candidate.segments.iter_mut().enumerate() {
                seg.seg_id = first + offset as u64;
            }
        }

        let mut updated = dialogue.clone();
        updated.turns[index] = candidate.clone();
        let bytes = io::encode_dialogue(&updated, &self.schema);
        io::write_atomic(&self.dir.join(io::dialogue_file_name(did)), &bytes)?;
        *dialogue = updated;

        Ok(StoredTurn {
            revision: revision_of(&candidate),
            turn: candidate,
        })
    }
}
