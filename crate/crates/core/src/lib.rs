//! Dialogue-act annotation toolkit for Arabic inquiry-answer dialogues.
//!
//! - [`schema`]: the 25-act inventory and name lookup.
//! - [`model`]: dialogues, turns and segments, segmentation and validation.
//! - [`translit`]: Arabic ↔ Buckwalter codec.
//! - [`stats`]: corpus counts and Cohen's kappa, generic over [`Scalar`].
//! - [`io`]: canonical JSON corpus format, corpus directories, transcript import.
//! - [`synth`]: seeded synthetic corpora.

pub mod io;
pub mod model;
pub mod schema;
pub mod stats;
pub mod synth;
pub mod translit;

pub use model::{
    make_uid, parse_uid, segment_turn, validate, Corpus, Dialogue, Finding, Modality, Rule,
    Segment, SegIdCounter, SegIdSource, Severity, SpeakerRole, Turn, ValidationReport,
    UNANNOTATED,
};
pub use schema::{builtin_schema, AnnotationSchema, DialogueAct, Dimension};
pub use stats::{cohen_kappa, compute_stats, word_count, AgreementReport, CorpusStats, Scalar};
pub use translit::{from_buckwalter, to_buckwalter, Transliteration};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

/// Statistics with exact averages.
pub type ExactStats = CorpusStats<Rational>;
/// Statistics with `f64` averages.
pub type FloatStats = CorpusStats<f64>;

pub type ExactAgreement = AgreementReport<Rational>;
pub type FloatAgreement = AgreementReport<f64>;
