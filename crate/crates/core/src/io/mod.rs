//! Corpus serialization.
//!
//! The canonical corpus format is JSON with sorted keys, two-space
//! indentation, a trailing newline and raw UTF-8 text. Turn and segment
//! records use the annotation screen's field names (`UID`, `Person`,
//! `Utterance`, `Over_ALL_DA`, `isSegmented`, `SegID`, `Segment`, `SDA`).
//! On disk a corpus is a directory holding one `D{did}.json` document per
//! dialogue.

mod transcript;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::model::{
    validate, Corpus, Dialogue, Finding, Modality, Segment, SpeakerRole, Turn, UNANNOTATED,
};
use crate::schema::AnnotationSchema;

pub use transcript::{import_transcript, import_transcript_as, ImportError, ImportOptions, TranscriptFormat};

pub const FORMAT_VERSION: &str = "1.0";

const K_VERSION: &str = "format_version";
const K_SCHEMA: &str = "schema_name";
const K_DIALOGUES: &str = "dialogues";
const K_DID: &str = "DID";
const K_MODALITY: &str = "Modality";
const K_SOURCE: &str = "Source";
const K_TURNS: &str = "Turns";
const K_UID: &str = "UID";
const K_PERSON: &str = "Person";
const K_UTTERANCE: &str = "Utterance";
const K_OVERALL: &str = "Over_ALL_DA";
const K_IS_SEGMENTED: &str = "isSegmented";
const K_SEGMENTS: &str = "Segments";
const K_SEG_ID: &str = "SegID";
const K_SEGMENT: &str = "Segment";
const K_SDA: &str = "SDA";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { line: usize, column: usize, message: String },
    MissingField(&'static str),
    UnknownField(String),
    WrongType(&'static str),
    InvalidValue(String),
    UnknownAct(String),
    VersionMismatch(String),
}

/// Parse failure with a path such as `dialogues[0].Turns[2].Over_ALL_DA`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub path: String,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "$" } else { &self.path };
        match &self.kind {
            ParseErrorKind::Syntax { line, column, message } => {
                write!(f, "{path}: syntax error at line {line}, column {column}: {message}")
            }
            ParseErrorKind::MissingField(name) => write!(f, "{path}: missing field `{name}`"),
            ParseErrorKind::UnknownField(name) => write!(f, "{path}: unknown field `{name}`"),
            ParseErrorKind::WrongType(expected) => write!(f, "{path}: expected {expected}"),
            ParseErrorKind::InvalidValue(msg) => write!(f, "{path}: {msg}"),
            ParseErrorKind::UnknownAct(name) => write!(f, "{path}: unknown act `{name}`"),
            ParseErrorKind::VersionMismatch(found) => write!(
                f,
                "{path}: unsupported format_version `{found}` (expected {FORMAT_VERSION})"
            ),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("refusing to serialize a corpus with validation errors: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Finding>),
    #[error("{}: {source}", file.display())]
    Parse {
        file: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{}: {source}", path.display())]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: expected exactly one dialogue, found {found}", path.display())]
    NotSingleDialogue { path: PathBuf, found: usize },
    #[error("dialogue {did} appears in more than one file")]
    DuplicateDialogue { did: u32 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Ignore unknown fields instead of rejecting them.
    pub lenient: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions { lenient: false }
    }

    pub fn lenient() -> Self {
        ParseOptions { lenient: true }
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn segment_value(seg: &Segment) -> Value {
    json!({ K_SEG_ID: seg.seg_id, K_SEGMENT: seg.text, K_SDA: seg.act })
}

pub fn turn_value(turn: &Turn) -> Value {
    json!({
        K_UID: turn.uid,
        K_PERSON: turn.speaker.as_str(),
        K_UTTERANCE: turn.text,
        K_OVERALL: turn.overall_act,
        K_IS_SEGMENTED: turn.is_segmented,
        K_SEGMENTS: turn.segments.iter().map(segment_value).collect::<Vec<_>>(),
    })
}

pub fn dialogue_value(dialogue: &Dialogue) -> Value {
    json!({
        K_DID: dialogue.did,
        K_MODALITY: dialogue.modality.as_str(),
        K_SOURCE: dialogue.source,
        K_TURNS: dialogue.turns.iter().map(turn_value).collect::<Vec<_>>(),
    })
}

fn document_value<'a>(schema: &AnnotationSchema, dialogues: impl Iterator<Item = &'a Dialogue>) -> Value {
    json!({
        K_VERSION: FORMAT_VERSION,
        K_SCHEMA: schema.name(),
        K_DIALOGUES: dialogues.map(dialogue_value).collect::<Vec<_>>(),
    })
}

/// Rebuilds every object with its keys inserted in sorted order, which keeps
/// the output sorted whatever map backend serde_json was built with.
fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Canonical bytes of any JSON value: sorted keys, pretty printed, newline
/// terminated.
pub fn canonical_json(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&sort_keys(value.clone())).expect("in-memory JSON");
    out.push(b'\n');
    out
}

/// Validation errors that block serialization. Pending-annotation
/// placeholders are allowed so imported corpora can be stored.
pub fn blocking_errors(corpus: &Corpus, schema: &AnnotationSchema) -> Vec<Finding> {
    validate(corpus, schema)
        .errors()
        .filter(|f| !f.is_pending_annotation())
        .cloned()
        .collect()
}

/// Canonical corpus document.
pub fn serialize(corpus: &Corpus, schema: &AnnotationSchema) -> Result<Vec<u8>, IoError> {
    let errors = blocking_errors(corpus, schema);
    if !errors.is_empty() {
        return Err(IoError::Invalid(errors));
    }
    Ok(canonical_json(&document_value(schema, corpus.dialogues.iter())))
}

/// Single-dialogue document as stored in `D{did}.json`.
pub fn serialize_dialogue(dialogue: &Dialogue, schema: &AnnotationSchema) -> Result<Vec<u8>, IoError> {
    let single = Corpus::new(vec![dialogue.clone()]);
    let errors = blocking_errors(&single, schema);
    if !errors.is_empty() {
        return Err(IoError::Invalid(errors));
    }
    Ok(encode_dialogue(dialogue, schema))
}

/// Single-dialogue document without the validation gate. Callers that
/// check edits turn by turn use this so pre-existing problems elsewhere in
/// the dialogue do not block unrelated writes.
pub fn encode_dialogue(dialogue: &Dialogue, schema: &AnnotationSchema) -> Vec<u8> {
    canonical_json(&document_value(schema, std::iter::once(dialogue)))
}

/// The act inventory as a JSON array.
pub fn schema_value(schema: &AnnotationSchema) -> Value {
    Value::Array(
        schema
            .acts()
            .iter()
            .map(|act| {
                json!({
                    "name": act.name,
                    "dimension": act.dimension.as_str(),
                    "definition": act.definition,
                    "subfunctions": act.subfunctions,
                })
            })
            .collect(),
    )
}

pub fn export_schema(schema: &AnnotationSchema) -> Vec<u8> {
    canonical_json(&schema_value(schema))
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Decoder<'a> {
    schema: &'a AnnotationSchema,
    options: ParseOptions,
}

fn err(path: &str, kind: ParseErrorKind) -> ParseError {
    ParseError {
        path: path.to_string(),
        kind,
    }
}

fn child(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Decoder<'_> {
    fn object<'v>(
        &self,
        value: &'v Value,
        path: &str,
        known: &[&str],
    ) -> Result<&'v Map<String, Value>, ParseError> {
        let map = value
            .as_object()
            .ok_or_else(|| err(path, ParseErrorKind::WrongType("an object")))?;
        if !self.options.lenient {
            if let Some(extra) = map.keys().find(|k| !known.contains(&k.as_str())) {
                return Err(err(path, ParseErrorKind::UnknownField(extra.clone())));
            }
        }
        Ok(map)
    }

    fn field<'v>(
        &self,
        map: &'v Map<String, Value>,
        path: &str,
        key: &'static str,
    ) -> Result<&'v Value, ParseError> {
        map.get(key)
            .ok_or_else(|| err(path, ParseErrorKind::MissingField(key)))
    }

    fn string(&self, map: &Map<String, Value>, path: &str, key: &'static str) -> Result<String, ParseError> {
        self.field(map, path, key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| err(&child(path, key), ParseErrorKind::WrongType("a string")))
    }

    fn positive(&self, map: &Map<String, Value>, path: &str, key: &'static str) -> Result<u64, ParseError> {
        let at = child(path, key);
        match self.field(map, path, key)?.as_u64() {
            Some(0) => Err(err(&at, ParseErrorKind::InvalidValue("must be positive".into()))),
            Some(n) => Ok(n),
            None => Err(err(&at, ParseErrorKind::WrongType("a positive integer"))),
        }
    }

    fn act(&self, map: &Map<String, Value>, path: &str, key: &'static str) -> Result<String, ParseError> {
        let name = self.string(map, path, key)?;
        if name == UNANNOTATED {
            return Ok(name);
        }
        self.schema
            .canonical_name(&name)
            .map(str::to_string)
            .ok_or_else(|| err(&child(path, key), ParseErrorKind::UnknownAct(name)))
    }

    fn array<'v>(&self, value: &'v Value, path: &str) -> Result<&'v Vec<Value>, ParseError> {
        value
            .as_array()
            .ok_or_else(|| err(path, ParseErrorKind::WrongType("an array")))
    }

    fn document(&self, value: &Value) -> Result<Corpus, ParseError> {
        let map = self.object(value, "", &[K_VERSION, K_SCHEMA, K_DIALOGUES])?;
        let version = self.string(map, "", K_VERSION)?;
        if version != FORMAT_VERSION {
            return Err(err(K_VERSION, ParseErrorKind::VersionMismatch(version)));
        }
        self.string(map, "", K_SCHEMA)?;
        let dialogues = self
            .array(self.field(map, "", K_DIALOGUES)?, K_DIALOGUES)?
            .iter()
            .enumerate()
            .map(|(i, d)| self.dialogue(d, &format!("{K_DIALOGUES}[{i}]")))
            .collect::<Result<_, _>>()?;
        Ok(Corpus::new(dialogues))
    }

    fn dialogue(&self, value: &Value, path: &str) -> Result<Dialogue, ParseError> {
        let map = self.object(value, path, &[K_DID, K_MODALITY, K_SOURCE, K_TURNS])?;
        let did = self.positive(map, path, K_DID)?;
        let did = u32::try_from(did)
            .map_err(|_| err(&child(path, K_DID), ParseErrorKind::InvalidValue("too large".into())))?;
        let modality: Modality = self
            .string(map, path, K_MODALITY)?
            .parse()
            .map_err(|e: crate::model::ModelError| {
                err(&child(path, K_MODALITY), ParseErrorKind::InvalidValue(e.to_string()))
            })?;
        let source = self.string(map, path, K_SOURCE)?;
        let turns_path = child(path, K_TURNS);
        let turns = self
            .array(self.field(map, path, K_TURNS)?, &turns_path)?
            .iter()
            .enumerate()
            .map(|(i, t)| self.turn(t, &format!("{turns_path}[{i}]")))
            .collect::<Result<_, _>>()?;
        Ok(Dialogue {
            did,
            modality,
            source,
            turns,
        })
    }

    fn turn(&self, value: &Value, path: &str) -> Result<Turn, ParseError> {
        let map = self.object(
            value,
            path,
            &[K_UID, K_PERSON, K_UTTERANCE, K_OVERALL, K_IS_SEGMENTED, K_SEGMENTS],
        )?;
        let uid = self.string(map, path, K_UID)?;
        let speaker: SpeakerRole = self
            .string(map, path, K_PERSON)?
            .parse()
            .map_err(|e: crate::model::ModelError| {
                err(&child(path, K_PERSON), ParseErrorKind::InvalidValue(e.to_string()))
            })?;
        let text = self.string(map, path, K_UTTERANCE)?;
        let overall_act = self.act(map, path, K_OVERALL)?;
        let is_segmented = self
            .field(map, path, K_IS_SEGMENTED)?
            .as_bool()
            .ok_or_else(|| err(&child(path, K_IS_SEGMENTED), ParseErrorKind::WrongType("a boolean")))?;
        let segments = match map.get(K_SEGMENTS) {
            None | Some(Value::Null) => Vec::new(),
            Some(list) => {
                let seg_path = child(path, K_SEGMENTS);
                self.array(list, &seg_path)?
                    .iter()
                    .enumerate()
                    .map(|(i, s)| self.segment(s, &format!("{seg_path}[{i}]")))
                    .collect::<Result<_, _>>()?
            }
        };
        Ok(Turn {
            uid,
            speaker,
            text,
            overall_act,
            is_segmented,
            segments,
        })
    }

    fn segment(&self, value: &Value, path: &str) -> Result<Segment, ParseError> {
        let map = self.object(value, path, &[K_SEG_ID, K_SEGMENT, K_SDA])?;
        Ok(Segment {
            seg_id: self.positive(map, path, K_SEG_ID)?,
            text: self.string(map, path, K_SEGMENT)?,
            act: self.act(map, path, K_SDA)?,
        })
    }
}

fn strip_bom(bytes: &[u8]) -> &[u8] {
    bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes)
}

/// Parses a corpus document. Act names are resolved against `schema` and
/// stored in canonical spelling; the `UNANNOTATED` placeholder is kept.
pub fn parse(bytes: &[u8], schema: &AnnotationSchema, options: ParseOptions) -> Result<Corpus, ParseError> {
    let value: Value = serde_json::from_slice(strip_bom(bytes)).map_err(|e| {
        err(
            "",
            ParseErrorKind::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        )
    })?;
    Decoder { schema, options }.document(&value)
}

/// Parses the editable fields of a single turn record (used by the service).
pub fn parse_turn_value(value: &Value, schema: &AnnotationSchema, options: ParseOptions) -> Result<Turn, ParseError> {
    Decoder { schema, options }.turn(value, "")
}

// ---------------------------------------------------------------------------
// Corpus directories
// ---------------------------------------------------------------------------

pub fn dialogue_file_name(did: u32) -> String {
    format!("D{did}.json")
}

fn did_from_file_name(name: &str) -> Option<u32> {
    let digits = name.strip_prefix('D')?.strip_suffix(".json")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(fs_err(&tmp))?;
    file.write_all(bytes).map_err(fs_err(&tmp))?;
    file.sync_all().map_err(fs_err(&tmp))?;
    drop(file);
    fs::rename(&tmp, path).map_err(fs_err(path))
}

pub fn write_dialogue_file(dir: &Path, dialogue: &Dialogue, schema: &AnnotationSchema) -> Result<PathBuf, IoError> {
    let bytes = serialize_dialogue(dialogue, schema)?;
    let path = dir.join(dialogue_file_name(dialogue.did));
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// Writes every dialogue to its own file, creating `dir` if needed.
pub fn write_corpus_dir(dir: &Path, corpus: &Corpus, schema: &AnnotationSchema) -> Result<(), IoError> {
    let errors = blocking_errors(corpus, schema);
    if !errors.is_empty() {
        return Err(IoError::Invalid(errors));
    }
    fs::create_dir_all(dir).map_err(fs_err(dir))?;
    for dialogue in &corpus.dialogues {
        write_dialogue_file(dir, dialogue, schema)?;
    }
    Ok(())
}

pub fn read_dialogue_file(path: &Path, schema: &AnnotationSchema, options: ParseOptions) -> Result<Dialogue, IoError> {
    let bytes = fs::read(path).map_err(fs_err(path))?;
    let mut corpus = parse(&bytes, schema, options).map_err(|source| IoError::Parse {
        file: path.to_path_buf(),
        source,
    })?;
    if corpus.dialogues.len() != 1 {
        return Err(IoError::NotSingleDialogue {
            path: path.to_path_buf(),
            found: corpus.dialogues.len(),
        });
    }
    Ok(corpus.dialogues.remove(0))
}

/// Loads every `D{did}.json` in `dir`, ordered by dialogue id. Other files
/// are ignored.
pub fn read_corpus_dir(dir: &Path, schema: &AnnotationSchema, options: ParseOptions) -> Result<Corpus, IoError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(fs_err(dir))? {
        let entry = entry.map_err(fs_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(did) = did_from_file_name(&name) {
            files.push((did, entry.path()));
        }
    }
    files.sort();
    let mut dialogues: Vec<Dialogue> = Vec::with_capacity(files.len());
    for (_, path) in files {
        let dialogue = read_dialogue_file(&path, schema, options)?;
        if dialogues.iter().any(|d| d.did == dialogue.did) {
            return Err(IoError::DuplicateDialogue { did: dialogue.did });
        }
        dialogues.push(dialogue);
    }
    dialogues.sort_by_key(|d| d.did);
    Ok(Corpus::new(dialogues))
}
