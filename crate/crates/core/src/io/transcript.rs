//! Import of turn-level transcripts.
//!
//! Two inputs are understood: Transcriber-style XML (`Trans` → `Episode` →
//! `Section` → `Turn`, speakers declared under `Speakers`) and a plain-text
//! fallback with one `SPEAKER<TAB>text` line per turn. Imported turns carry
//! the `UNANNOTATED` placeholder act.

use std::collections::HashMap;
use std::str::FromStr;

use crate::model::{normalize_whitespace, Corpus, Dialogue, Modality, SpeakerRole, UNANNOTATED};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptFormat {
    /// Transcriber XML (`.trs`).
    Trs,
    /// `SPEAKER<TAB>text` lines.
    Txt,
}

impl FromStr for TranscriptFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "trs" | "xml" => Ok(TranscriptFormat::Trs),
            "txt" | "text" => Ok(TranscriptFormat::Txt),
            other => Err(format!("unknown transcript format `{other}` (expected trs or txt)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportOptions {
    pub did: u32,
    pub source: String,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions {
            did: 1,
            source: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImportError {
    #[error("transcript is not valid UTF-8")]
    Utf8,
    #[error("XML error: {0}")]
    Xml(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unknown speaker `{code}`")]
    UnknownSpeaker { code: String },
    #[error("dialogue id must be positive")]
    ZeroDialogueId,
}

fn decode(bytes: &[u8]) -> Result<&str, ImportError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    std::str::from_utf8(bytes).map_err(|_| ImportError::Utf8)
}

/// Imports a transcript, choosing XML when the input starts with `<`.
pub fn import_transcript(bytes: &[u8], modality: Modality, options: &ImportOptions) -> Result<Corpus, ImportError> {
    let format = if decode(bytes)?.trim_start().starts_with('<') {
        TranscriptFormat::Trs
    } else {
        TranscriptFormat::Txt
    };
    import_transcript_as(format, bytes, modality, options)
}

pub fn import_transcript_as(
    format: TranscriptFormat,
    bytes: &[u8],
    modality: Modality,
    options: &ImportOptions,
) -> Result<Corpus, ImportError> {
    if options.did == 0 {
        return Err(ImportError::ZeroDialogueId);
    }
    let text = decode(bytes)?;
    let turns = match format {
        TranscriptFormat::Trs => xml_turns(text)?,
        TranscriptFormat::Txt => plain_turns(text)?,
    };
    let mut dialogue = Dialogue::new(options.did, modality, options.source.clone());
    for (speaker, text) in turns {
        dialogue
            .push_turn(speaker, text, UNANNOTATED)
            .expect("turn text is nonempty and did is positive");
    }
    Ok(Corpus::new(vec![dialogue]))
}

fn speaker_code(code: &str) -> Result<SpeakerRole, ImportError> {
    match code.trim() {
        "O" | "o" => Ok(SpeakerRole::Operator),
        "C" | "c" => Ok(SpeakerRole::Customer),
        other => SpeakerRole::from_str(other).map_err(|_| ImportError::UnknownSpeaker {
            code: code.to_string(),
        }),
    }
}

fn plain_turns(text: &str) -> Result<Vec<(SpeakerRole, String)>, ImportError> {
    let mut turns = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (code, body) = line.split_once('\t').ok_or_else(|| ImportError::Malformed {
            line: line_no,
            message: "expected SPEAKER<TAB>text".into(),
        })?;
        let speaker = speaker_code(code)?;
        let body = normalize_whitespace(body);
        if body.is_empty() {
            return Err(ImportError::Malformed {
                line: line_no,
                message: "turn text is empty".into(),
            });
        }
        turns.push((speaker, body));
    }
    Ok(turns)
}

fn xml_turns(text: &str) -> Result<Vec<(SpeakerRole, String)>, ImportError> {
    let options = roxmltree::ParsingOptions {
        allow_dtd: true,
        ..Default::default()
    };
    let doc = roxmltree::Document::parse_with_options(text, options)
        .map_err(|e| ImportError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "Trans" {
        return Err(ImportError::Xml(format!(
            "expected <Trans> root, found <{}>",
            root.tag_name().name()
        )));
    }

    let mut declared: HashMap<&str, &str> = HashMap::new();
    for speaker in root.descendants().filter(|n| n.has_tag_name("Speaker")) {
        if let (Some(id), Some(name)) = (speaker.attribute("id"), speaker.attribute("name")) {
            declared.insert(id, name);
        }
    }

    let mut turns = Vec::new();
    for turn in root.descendants().filter(|n| n.has_tag_name("Turn")) {
        let body: String = turn
            .descendants()
            .filter(|n| n.is_text())
            .filter_map(|n| n.text())
            .collect::<Vec<_>>()
            .join(" ");
        let body = normalize_whitespace(&body);
        if body.is_empty() {
            continue;
        }
        let code = turn.attribute("speaker").ok_or_else(|| {
            ImportError::Xml(format!(
                "<Turn> at byte {} has no speaker attribute",
                turn.range().start
            ))
        })?;
        let name = declared.get(code).copied().unwrap_or(code);
        let speaker = speaker_code(name).map_err(|_| ImportError::UnknownSpeaker {
            code: code.to_string(),
        })?;
        turns.push((speaker, body));
    }
    Ok(turns)
}
