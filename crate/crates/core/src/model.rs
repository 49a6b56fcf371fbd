//! Corpus data model: dialogues hold turns, turns optionally hold segments.
//!
//! Every turn carries an overall act. A segmented turn additionally holds
//! an ordered list of segments whose texts, joined by single spaces,
//! reproduce the turn text up to whitespace normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::schema::AnnotationSchema;

/// Placeholder act carried by freshly imported turns. It never resolves in
/// a schema, so such turns fail rule R1 until someone annotates them.
pub const UNANNOTATED: &str = "UNANNOTATED";

pub const OPENING: &str = "Opening";
pub const CLOSING: &str = "Closing";
pub const GREETING: &str = "Greeting";
pub const SELF_INTRODUCE: &str = "Self-Introduce";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeakerRole {
    Operator,
    Customer,
}

impl SpeakerRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpeakerRole::Operator => "Operator",
            SpeakerRole::Customer => "Customer",
        }
    }
}

impl fmt::Display for SpeakerRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpeakerRole {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "operator" => Ok(SpeakerRole::Operator),
            "customer" => Ok(SpeakerRole::Customer),
            _ => Err(ModelError::UnknownSpeaker(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    Spoken,
    Chat,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Spoken => "Spoken",
            Modality::Chat => "Chat",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spoken" => Ok(Modality::Spoken),
            "chat" => Ok(Modality::Chat),
            _ => Err(ModelError::UnknownModality(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("identifiers start at 1 (got did={did}, turn={turn})")]
    ZeroIdentifier { did: u32, turn: u32 },
    #[error("malformed turn uid `{0}`")]
    MalformedUid(String),
    #[error("unknown speaker `{0}`")]
    UnknownSpeaker(String),
    #[error("unknown modality `{0}`")]
    UnknownModality(String),
    #[error("text is empty")]
    EmptyText,
    #[error("segment ids start at 1")]
    ZeroSegId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentError {
    #[error("turn {0} is already segmented")]
    AlreadySegmented(String),
    #[error("boundary {boundary} is not an interior token boundary of a {tokens}-token turn")]
    NotATokenBoundary { boundary: usize, tokens: usize },
    #[error("boundaries must be strictly increasing")]
    NotIncreasing,
    #[error("{boundaries} boundaries need {} acts, got {acts}", boundaries + 1)]
    ActCountMismatch { boundaries: usize, acts: usize },
    #[error("unknown act `{0}`")]
    UnknownAct(String),
}

/// Builds a turn identifier such as `D01U01`. Both numbers are zero padded
/// to at least two digits.
pub fn make_uid(did: u32, turn_index: u32) -> Result<String, ModelError> {
    if did == 0 || turn_index == 0 {
        return Err(ModelError::ZeroIdentifier {
            did,
            turn: turn_index,
        });
    }
    Ok(format!("D{did:02}U{turn_index:02}"))
}

/// Inverse of [`make_uid`]. Only the canonical spelling is accepted.
pub fn parse_uid(uid: &str) -> Result<(u32, u32), ModelError> {
    let malformed = || ModelError::MalformedUid(uid.to_string());
    let rest = uid.strip_prefix('D').ok_or_else(malformed)?;
    let (did, turn) = rest.split_once('U').ok_or_else(malformed)?;
    let number = |s: &str| -> Result<u32, ModelError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        s.parse().map_err(|_| malformed())
    };
    let (did, turn) = (number(did)?, number(turn)?);
    match make_uid(did, turn) {
        Ok(canonical) if canonical == uid => Ok((did, turn)),
        _ => Err(malformed()),
    }
}

/// Collapses runs of Unicode whitespace to one space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Byte ranges of the maximal non-whitespace runs of `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (idx, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, idx));
                start = None;
            }
            (false, None) => start = Some(idx),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub seg_id: u64,
    pub text: String,
    pub act: String,
}

impl Segment {
    pub fn new(
        seg_id: u64,
        text: impl Into<String>,
        act: impl Into<String>,
    ) -> Result<Self, ModelError> {
        if seg_id == 0 {
            return Err(ModelError::ZeroSegId);
        }
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyText);
        }
        Ok(Segment {
            seg_id,
            text,
            act: act.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub uid: String,
    pub speaker: SpeakerRole,
    pub text: String,
    pub overall_act: String,
    pub is_segmented: bool,
    pub segments: Vec<Segment>,
}

impl Turn {
    /// An unsegmented turn.
    pub fn new(
        uid: impl Into<String>,
        speaker: SpeakerRole,
        text: impl Into<String>,
        overall_act: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyText);
        }
        Ok(Turn {
            uid: uid.into(),
            speaker,
            text,
            overall_act: overall_act.into(),
            is_segmented: false,
            segments: Vec::new(),
        })
    }

    pub fn with_overall_act(mut self, act: impl Into<String>) -> Self {
        self.overall_act = act.into();
        self
    }

    /// Drops any segmentation.
    pub fn unsegmented(mut self) -> Self {
        self.is_segmented = false;
        self.segments.clear();
        self
    }

    pub fn word_count(&self) -> usize {
        token_spans(&self.text).len()
    }

    /// Acts of the utterances this turn contributes: the segment acts when
    /// segmented, otherwise the overall act.
    pub fn utterance_acts(&self) -> Vec<&str> {
        if self.segments.is_empty() {
            vec![self.overall_act.as_str()]
        } else {
            self.segments.iter().map(|s| s.act.as_str()).collect()
        }
    }
}

/// Source of fresh segment ids.
pub trait SegIdSource {
    fn next_seg_id(&mut self) -> u64;
}

/// Monotonic in-memory counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegIdCounter {
    next: u64,
}

impl SegIdCounter {
    pub fn starting_at(next: u64) -> Self {
        SegIdCounter { next: next.max(1) }
    }

    /// A counter that will not collide with any seg id already in `corpus`.
    pub fn after(corpus: &Corpus) -> Self {
        Self::starting_at(corpus.max_seg_id() + 1)
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

impl Default for SegIdCounter {
    fn default() -> Self {
        Self::starting_at(1)
    }
}

impl SegIdSource for SegIdCounter {
    fn next_seg_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }
}

/// Splits a turn at token `boundaries` (a boundary `k` cuts after the k-th
/// token) and labels the resulting pieces with `acts`. Act names are stored
/// in the schema's canonical spelling.
pub fn segment_turn<A: AsRef<str>>(
    turn: &Turn,
    boundaries: &[usize],
    acts: &[A],
    schema: &AnnotationSchema,
    ids: &mut impl SegIdSource,
) -> Result<Turn, SegmentError> {
    if turn.is_segmented || !turn.segments.is_empty() {
        return Err(SegmentError::AlreadySegmented(turn.uid.clone()));
    }
    if acts.len() != boundaries.len() + 1 {
        return Err(SegmentError::ActCountMismatch {
            boundaries: boundaries.len(),
            acts: acts.len(),
        });
    }
    let spans = token_spans(&turn.text);
    for &b in boundaries {
        if b == 0 || b >= spans.len() {
            return Err(SegmentError::NotATokenBoundary {
                boundary: b,
                tokens: spans.len(),
            });
        }
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SegmentError::NotIncreasing);
    }
    let acts = acts
        .iter()
        .map(|a| {
            schema
                .canonical_name(a.as_ref())
                .map(str::to_string)
                .ok_or_else(|| SegmentError::UnknownAct(a.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut cuts = Vec::with_capacity(boundaries.len() + 2);
    cuts.push(0);
    cuts.extend_from_slice(boundaries);
    cuts.push(spans.len());
    let segments = cuts
        .windows(2)
        .zip(acts)
        .map(|(w, act)| {
            let start = spans[w[0]].0;
            let end = spans[w[1] - 1].1;
            Segment {
                seg_id: ids.next_seg_id(),
                text: turn.text[start..end].to_string(),
                act,
            }
        })
        .collect();

    Ok(Turn {
        is_segmented: true,
        segments,
        ..turn.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub did: u32,
    pub modality: Modality,
    pub source: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    pub fn new(did: u32, modality: Modality, source: impl Into<String>) -> Self {
        Dialogue {
            did,
            modality,
            source: source.into(),
            turns: Vec::new(),
        }
    }

    /// Appends an unsegmented turn numbered after the existing ones.
    pub fn push_turn(
        &mut self,
        speaker: SpeakerRole,
        text: impl Into<String>,
        overall_act: impl Into<String>,
    ) -> Result<&mut Turn, ModelError> {
        let index = u32::try_from(self.turns.len() + 1).expect("turn count fits in u32");
        let uid = make_uid(self.did, index)?;
        self.turns.push(Turn::new(uid, speaker, text, overall_act)?);
        Ok(self.turns.last_mut().expect("just pushed"))
    }

    pub fn turn(&self, uid: &str) -> Option<&Turn> {
        self.turns.iter().find(|t| t.uid == uid)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    pub fn new(dialogues: Vec<Dialogue>) -> Self {
        Corpus { dialogues }
    }

    pub fn dialogue(&self, did: u32) -> Option<&Dialogue> {
        self.dialogues.iter().find(|d| d.did == did)
    }

    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.dialogues.iter().flat_map(|d| d.turns.iter())
    }

    pub fn max_seg_id(&self) -> u64 {
        self.turns()
            .flat_map(|t| t.segments.iter().map(|s| s.seg_id))
            .max()
            .unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// Validation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// Act name does not resolve in the schema.
    R1,
    /// `is_segmented` disagrees with the presence of segments.
    R2,
    /// Segmented Opening turn has a segment outside Greeting/Self-Introduce.
    R3,
    /// Segmented Opening turn lacks a Greeting or a Self-Introduce segment.
    R4,
    /// Segment texts do not re-concatenate to the turn text, or a text is empty.
    R5,
    /// Duplicate or malformed identifiers.
    R6,
    /// Dialogue does not start with an Opening turn.
    R7,
    /// Dialogue does not end with a Closing turn.
    R8,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::R1,
        Rule::R2,
        Rule::R3,
        Rule::R4,
        Rule::R5,
        Rule::R6,
        Rule::R7,
        Rule::R8,
    ];

    pub fn severity(&self) -> Severity {
        match self {
            Rule::R4 | Rule::R7 | Rule::R8 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub path: String,
    pub rule: Rule,
    pub message: String,
}

impl Finding {
    fn new(rule: Rule, path: impl Into<String>, message: impl Into<String>) -> Self {
        Finding {
            severity: rule.severity(),
            path: path.into(),
            rule,
            message: message.into(),
        }
    }
}

impl Finding {
    fn unknown_act(path: String, act: &str) -> Self {
        let message = if act == UNANNOTATED {
            PENDING_MESSAGE.to_string()
        } else {
            format!("unknown act `{act}`")
        };
        Finding::new(Rule::R1, path, message)
    }

    /// True for the R1 finding raised by an [`UNANNOTATED`] placeholder.
    pub fn is_pending_annotation(&self) -> bool {
        self.rule == Rule::R1 && self.message == PENDING_MESSAGE
    }
}

const PENDING_MESSAGE: &str = "not annotated yet (placeholder act UNANNOTATED)";

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{severity}[{}] {}: {}", self.rule, self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.findings.iter().filter(|f| f.rule == rule).count()
    }
}

pub fn dialogue_path(did: u32) -> String {
    format!("D{did:02}")
}

/// `D01/U03` for a well-formed uid belonging to `did`, else `D01/<uid>`.
pub fn turn_path(did: u32, uid: &str) -> String {
    match parse_uid(uid) {
        Ok((d, t)) if d == did => format!("{}/U{t:02}", dialogue_path(did)),
        _ => format!("{}/{uid}", dialogue_path(did)),
    }
}

/// Segment paths use the 1-based position within the turn.
pub fn segment_path(turn_path: &str, ordinal: usize) -> String {
    format!("{turn_path}/seg{ordinal}")
}

/// Checks the turn-local rules R1 to R5.
pub fn validate_turn(turn: &Turn, path: &str, schema: &AnnotationSchema) -> Vec<Finding> {
    let mut findings = Vec::new();
    let overall = schema.canonical_name(&turn.overall_act);
    if overall.is_none() {
        findings.push(Finding::unknown_act(path.to_string(), &turn.overall_act));
    }
    for (i, seg) in turn.segments.iter().enumerate() {
        if !schema.contains(&seg.act) {
            findings.push(Finding::unknown_act(segment_path(path, i + 1), &seg.act));
        }
    }

    if turn.text.trim().is_empty() {
        findings.push(Finding::new(Rule::R5, path, "turn text is empty"));
    }

    if turn.is_segmented != !turn.segments.is_empty() {
        findings.push(Finding::new(
            Rule::R2,
            path,
            format!(
                "isSegmented is {} but the turn has {} segment(s)",
                turn.is_segmented,
                turn.segments.len()
            ),
        ));
        return findings;
    }
    if !turn.is_segmented {
        return findings;
    }

    let mut all_texts_present = true;
    for (i, seg) in turn.segments.iter().enumerate() {
        if seg.text.trim().is_empty() {
            all_texts_present = false;
            findings.push(Finding::new(
                Rule::R5,
                segment_path(path, i + 1),
                "segment text is empty",
            ));
        }
    }
    if all_texts_present {
        let joined = turn
            .segments
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        if normalize_whitespace(&joined) != normalize_whitespace(&turn.text) {
            findings.push(Finding::new(
                Rule::R5,
                path,
                "segment texts do not re-concatenate to the turn text",
            ));
        }
    }

    if overall == Some(OPENING) {
        let mut has_greeting = false;
        let mut has_intro = false;
        for (i, seg) in turn.segments.iter().enumerate() {
            match schema.canonical_name(&seg.act) {
                Some(GREETING) => has_greeting = true,
                Some(SELF_INTRODUCE) => has_intro = true,
                Some(other) => findings.push(Finding::new(
                    Rule::R3,
                    segment_path(path, i + 1),
                    format!("Opening segment tagged `{other}`; only Greeting or Self-Introduce allowed"),
                )),
                None => {}
            }
        }
        if !(has_greeting && has_intro) {
            let missing = match (has_greeting, has_intro) {
                (false, false) => "Greeting and Self-Introduce segments",
                (false, true) => "a Greeting segment",
                _ => "a Self-Introduce segment",
            };
            findings.push(Finding::new(
                Rule::R4,
                path,
                format!("segmented Opening lacks {missing}"),
            ));
        }
    }
    findings
}

/// Runs every rule over the corpus. Findings are ordered by dialogue, then
/// turn, in document order.
pub fn validate(corpus: &Corpus, schema: &AnnotationSchema) -> ValidationReport {
    use std::collections::HashSet;

    let mut findings = Vec::new();
    let mut dids = HashSet::new();
    let mut seg_ids = HashSet::new();

    for dialogue in &corpus.dialogues {
        let dpath = dialogue_path(dialogue.did);
        if dialogue.did == 0 {
            findings.push(Finding::new(Rule::R6, &dpath, "dialogue id must be positive"));
        }
        if !dids.insert(dialogue.did) {
            findings.push(Finding::new(
                Rule::R6,
                &dpath,
                format!("duplicate dialogue id {}", dialogue.did),
            ));
        }

        let mut uids = HashSet::new();
        for turn in &dialogue.turns {
            let tpath = turn_path(dialogue.did, &turn.uid);
            match parse_uid(&turn.uid) {
                Ok((d, _)) if d == dialogue.did => {}
                Ok(_) => findings.push(Finding::new(
                    Rule::R6,
                    &tpath,
                    format!("uid `{}` does not belong to dialogue {}", turn.uid, dialogue.did),
                )),
                Err(_) => findings.push(Finding::new(
                    Rule::R6,
                    &tpath,
                    format!("malformed uid `{}`", turn.uid),
                )),
            }
            if !uids.insert(turn.uid.as_str()) {
                findings.push(Finding::new(
                    Rule::R6,
                    &tpath,
                    format!("duplicate uid `{}`", turn.uid),
                ));
            }

            findings.extend(validate_turn(turn, &tpath, schema));

            for (i, seg) in turn.segments.iter().enumerate() {
                if seg.seg_id == 0 {
                    findings.push(Finding::new(
                        Rule::R6,
                        segment_path(&tpath, i + 1),
                        "segment id must be positive",
                    ));
                } else if !seg_ids.insert(seg.seg_id) {
                    findings.push(Finding::new(
                        Rule::R6,
                        segment_path(&tpath, i + 1),
                        format!("duplicate segment id {}", seg.seg_id),
                    ));
                }
            }
        }

        let first = dialogue.turns.first();
        let last = dialogue.turns.last();
        match first {
            None => findings.push(Finding::new(Rule::R7, &dpath, "dialogue has no turns")),
            Some(t) if schema.canonical_name(&t.overall_act) != Some(OPENING) => {
                findings.push(Finding::new(
                    Rule::R7,
                    &dpath,
                    format!("first turn is `{}`, not Opening", t.overall_act),
                ))
            }
            Some(_) => {}
        }
        if let Some(t) = last {
            if schema.canonical_name(&t.overall_act) != Some(CLOSING) {
                findings.push(Finding::new(
                    Rule::R8,
                    &dpath,
                    format!("last turn is `{}`, not Closing", t.overall_act),
                ));
            }
        }
    }
    ValidationReport { findings }
}
