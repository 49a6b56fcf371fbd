//! Dialogue-act inventory for inquiry-answer dialogues.
//!
//! The builtin schema holds 25 acts in three dimensions: seven dealing with
//! requests, fifteen with responses and three with neither (opening and
//! closing obligations, self-introduction). Act names are matched loosely:
//! case, hyphens, spaces and underscores are ignored, so `SelfIntroduce`,
//! `self-introduce` and `Self Introduce` all resolve to `Self-Introduce`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the three act groupings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    Request,
    Response,
    Other,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Request, Dimension::Response, Dimension::Other];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Request => "Request",
            Dimension::Response => "Response",
            Dimension::Other => "Other",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_name(s).as_str() {
            "request" => Ok(Dimension::Request),
            "response" => Ok(Dimension::Response),
            "other" => Ok(Dimension::Other),
            _ => Err(format!("unknown dimension `{s}`")),
        }
    }
}

/// A single schema label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueAct {
    pub name: String,
    pub dimension: Dimension,
    pub definition: String,
    /// Fine-grained functions folded into this act. Documentation only;
    /// annotation never happens at this granularity.
    pub subfunctions: Vec<String>,
}

impl DialogueAct {
    pub fn new(name: impl Into<String>, dimension: Dimension, definition: impl Into<String>) -> Self {
        DialogueAct {
            name: name.into(),
            dimension,
            definition: definition.into(),
            subfunctions: Vec::new(),
        }
    }

    pub fn with_subfunctions<I, S>(mut self, subfunctions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.subfunctions = subfunctions.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("duplicate act name `{0}` (names compare after normalization)")]
    DuplicateAct(String),
    #[error("act name `{0}` is empty after normalization")]
    EmptyName(String),
}

/// Immutable registry of dialogue acts, kept in table order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSchema {
    name: String,
    acts: Vec<DialogueAct>,
    keys: Vec<String>,
}

/// Lowercases and strips hyphens, spaces and underscores.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '-' | '_') && !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

impl AnnotationSchema {
    /// Builds a custom registry. Names must be unique after normalization.
    pub fn new(name: impl Into<String>, acts: Vec<DialogueAct>) -> Result<Self, SchemaError> {
        let mut keys: Vec<String> = Vec::with_capacity(acts.len());
        for act in &acts {
            let key = normalize_name(&act.name);
            if key.is_empty() {
                return Err(SchemaError::EmptyName(act.name.clone()));
            }
            if keys.contains(&key) {
                return Err(SchemaError::DuplicateAct(act.name.clone()));
            }
            keys.push(key);
        }
        Ok(AnnotationSchema {
            name: name.into(),
            acts,
            keys,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn acts(&self) -> &[DialogueAct] {
        &self.acts
    }

    pub fn count(&self) -> usize {
        self.acts.len()
    }

    pub fn lookup(&self, name: &str) -> Option<&DialogueAct> {
        let key = normalize_name(name);
        self.keys
            .iter()
            .position(|k| *k == key)
            .map(|idx| &self.acts[idx])
    }

    /// Resolves `name` to the registry's display spelling.
    pub fn canonical_name(&self, name: &str) -> Option<&str> {
        self.lookup(name).map(|act| act.name.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    pub fn acts_in(&self, dimension: Dimension) -> impl Iterator<Item = &DialogueAct> + '_ {
        self.acts.iter().filter(move |act| act.dimension == dimension)
    }
}

pub const BUILTIN_SCHEMA_NAME: &str = "arabic-inquiry-answer";

const REQUEST_ACTS: &[(&str, &str)] = &[
    ("Taking-Request", "Dealing with taking request e.g. hello"),
    (
        "Service-Question",
        "Dealing with services request e.g. asking about service information or required a service.",
    ),
    (
        "Confirm-Question",
        "Happens when needs to confirmation about some information.",
    ),
    ("YesNo-Question", "Happens when needs Yes or No answer."),
    (
        "Choice-Question",
        "Happens when needs select one answer from service multiple-choices question.",
    ),
    (
        "Other-Question",
        "Happens when asking about non-service question e.g. mobile number, email, or address.",
    ),
    (
        "Turn-Assign",
        "Happens when wants to addressee the speaker to take the turn e.g. Adam?",
    ),
];

const RESPONSE_ACTS: &[(&str, &str)] = &[
    (
        "Service-Answer",
        "Happens when answer a Service-Question or Choice-Question.",
    ),
    ("Other-Answer", "Happens when answer an Other-Question."),
    (
        "Agree",
        "Describe agreement/accept answer from Confirm-Question or YesNo-Question.",
    ),
    (
        "Disagree",
        "Describe disagreement/reject answer from Confirm-Question or YesNo-Question.",
    ),
    (
        "Greeting",
        "Happens when speaker wants to greeting and welcome the other speaker. Also describe greeting accept 'return-greeting'.",
    ),
    (
        "Inform",
        "Happens when speaker wants to explain or describe something to other speaker.",
    ),
    (
        "Thanking",
        "Happens when speaker wants to thank the other speaker. Also describe thanking accept.",
    ),
    ("Apology", "Happens when speaker wants to apology."),
    (
        "MissUnderstandingSign",
        "Happens when non-understanding the previous utterance.",
    ),
    (
        "Correct",
        "Happens when correct an information in previous utterance or in current utterance.",
    ),
    (
        "Pausing",
        "Happens when needs to request more time or stealing time e.g. just a moment.",
    ),
    ("Suggest", "Happens when provides a suggestion."),
    ("Promise", "Happens when provides a promise."),
    ("Warning", "Happens when provides a warning action."),
    ("Offer", "Happens when provides an offer to the customer."),
];

const OTHER_ACTS: &[(&str, &str)] = &[
    (
        "Opening",
        "Dealing with opening obligation utterance e.g. \"Good evening, Banque Misr, Ahmed Samy speaking\".",
    ),
    (
        "Closing",
        "Dealing with closing obligation request e.g. \"Thank you for calling and goodbye\".",
    ),
    (
        "Self-Introduce",
        "Happens when wants to introduce our self or organization.",
    ),
];

const AGREE_SUBFUNCTIONS: [&str; 4] = [
    "accept-confirmation",
    "Yes-Answer",
    "accept-thanking",
    "accept-apology",
];
const DISAGREE_SUBFUNCTIONS: [&str; 4] = [
    "disconfirm",
    "No-Answer",
    "Reject-thanking",
    "Reject-apology",
];

/// The 25-act inventory in table order.
pub fn builtin_schema() -> AnnotationSchema {
    let groups = [
        (Dimension::Request, REQUEST_ACTS),
        (Dimension::Response, RESPONSE_ACTS),
        (Dimension::Other, OTHER_ACTS),
    ];
    let acts = groups
        .iter()
        .flat_map(|(dimension, rows)| {
            rows.iter().map(move |(name, definition)| {
                let act = DialogueAct::new(*name, *dimension, *definition);
                match *name {
                    "Agree" => act.with_subfunctions(AGREE_SUBFUNCTIONS),
                    "Disagree" => act.with_subfunctions(DISAGREE_SUBFUNCTIONS),
                    _ => act,
                }
            })
        })
        .collect();
    AnnotationSchema::new(BUILTIN_SCHEMA_NAME, acts).expect("builtin act names are distinct")
}
