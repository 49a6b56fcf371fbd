//! Corpus statistics and Cohen's kappa.
//!
//! Both computations are generic over [`Scalar`], so the same code yields
//! exact rationals (`BigRational`) or floats (`f64`, `f32`). Counts are
//! accumulated as integers and only the final ratios enter the scalar type.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::model::{token_spans, Corpus, Modality, UNANNOTATED};

/// Numeric type the statistics are reported in.
pub trait Scalar: Num + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// `num / den`; callers guarantee `den > 0`.
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    /// `self * 10` rounded half away from zero.
    fn round_tenths(&self) -> i64;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn round_tenths(&self) -> i64 {
        (self * 10.0).round() as i64
    }
}

impl Scalar for f32 {
    fn round_tenths(&self) -> i64 {
        (self * 10.0).round() as i64
    }
}

impl Scalar for BigRational {
    fn round_tenths(&self) -> i64 {
        // Ratio::round rounds half away from zero
        (self * BigRational::from_integer(BigInt::from(10)))
            .round()
            .to_integer()
            .to_i64()
            .expect("value fits in i64 tenths")
    }
}

/// Formats a tenths count as a one-decimal string, e.g. `67` → `"6.7"`.
pub fn format_tenths(tenths: i64) -> String {
    let sign = if tenths < 0 { "-" } else { "" };
    let abs = tenths.unsigned_abs();
    format!("{sign}{}.{}", abs / 10, abs % 10)
}

/// One-decimal display of a scalar, rounding half away from zero.
pub fn display_1dp<T: Scalar>(value: &T) -> String {
    format_tenths(value.round_tenths())
}

/// Number of maximal non-whitespace runs.
pub fn word_count(text: &str) -> usize {
    token_spans(text).len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats<T> {
    pub num_dialogues: usize,
    pub num_spoken: usize,
    pub num_chat: usize,
    pub num_turns: usize,
    /// Segments, with each unsegmented turn counting as one utterance.
    pub num_utterances: usize,
    pub turn_words: u64,
    pub utterance_words: u64,
    pub avg_words_per_turn: T,
    pub avg_words_per_utterance: T,
    /// Labelled utterances per act. Placeholder labels are not counted.
    pub act_histogram: BTreeMap<String, usize>,
}

impl<T: Scalar> CorpusStats<T> {
    pub fn avg_words_per_turn_display(&self) -> String {
        display_1dp(&self.avg_words_per_turn)
    }

    pub fn avg_words_per_utterance_display(&self) -> String {
        display_1dp(&self.avg_words_per_utterance)
    }

    /// Plain-text table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, String); 9] = [
            ("dialogues", self.num_dialogues.to_string()),
            ("spoken", self.num_spoken.to_string()),
            ("chat", self.num_chat.to_string()),
            ("turns", self.num_turns.to_string()),
            ("utterances", self.num_utterances.to_string()),
            ("turn words", self.turn_words.to_string()),
            ("utterance words", self.utterance_words.to_string()),
            ("avg words/turn", self.avg_words_per_turn_display()),
            ("avg words/utterance", self.avg_words_per_utterance_display()),
        ];
        for (label, value) in rows {
            out.push_str(&format!("{label:<22}{value:>10}\n"));
        }
        if !self.act_histogram.is_empty() {
            out.push_str("\nact                   count\n");
            for (act, count) in &self.act_histogram {
                out.push_str(&format!("{act:<22}{count:>6}\n"));
            }
        }
        out
    }
}

fn exact_string(num: u64, den: u64) -> String {
    if den == 0 {
        return "0".to_string();
    }
    let r = num_rational::Ratio::new(num, den);
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl<T: Scalar> Serialize for CorpusStats<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("CorpusStats", 14)?;
        s.serialize_field("num_dialogues", &self.num_dialogues)?;
        s.serialize_field("num_spoken", &self.num_spoken)?;
        s.serialize_field("num_chat", &self.num_chat)?;
        s.serialize_field("num_turns", &self.num_turns)?;
        s.serialize_field("num_utterances", &self.num_utterances)?;
        s.serialize_field("turn_words", &self.turn_words)?;
        s.serialize_field("utterance_words", &self.utterance_words)?;
        s.serialize_field("avg_words_per_turn", &self.avg_words_per_turn.to_f64_lossy())?;
        s.serialize_field(
            "avg_words_per_turn_exact",
            &exact_string(self.turn_words, self.num_turns as u64),
        )?;
        s.serialize_field("avg_words_per_turn_display", &self.avg_words_per_turn_display())?;
        s.serialize_field(
            "avg_words_per_utterance",
            &self.avg_words_per_utterance.to_f64_lossy(),
        )?;
        s.serialize_field(
            "avg_words_per_utterance_exact",
            &exact_string(self.utterance_words, self.num_utterances as u64),
        )?;
        s.serialize_field(
            "avg_words_per_utterance_display",
            &self.avg_words_per_utterance_display(),
        )?;
        s.serialize_field("act_histogram", &self.act_histogram)?;
        s.end()
    }
}

fn average<T: Scalar>(total: u64, units: usize) -> T {
    if units == 0 {
        T::zero()
    } else {
        T::ratio(total, units as u64)
    }
}

pub fn compute_stats<T: Scalar>(corpus: &Corpus) -> CorpusStats<T> {
    let mut num_spoken = 0;
    let mut num_chat = 0;
    let mut num_turns = 0;
    let mut num_utterances = 0;
    let mut turn_words = 0u64;
    let mut utterance_words = 0u64;
    let mut act_histogram = BTreeMap::new();

    let mut count_act = |act: &str| {
        if act != UNANNOTATED {
            *act_histogram.entry(act.to_string()).or_insert(0) += 1;
        }
    };

    for dialogue in &corpus.dialogues {
        match dialogue.modality {
            Modality::Spoken => num_spoken += 1,
            Modality::Chat => num_chat += 1,
        }
        for turn in &dialogue.turns {
            num_turns += 1;
            turn_words += word_count(&turn.text) as u64;
            if turn.segments.is_empty() {
                num_utterances += 1;
                utterance_words += word_count(&turn.text) as u64;
                count_act(&turn.overall_act);
            } else {
                for seg in &turn.segments {
                    num_utterances += 1;
                    utterance_words += word_count(&seg.text) as u64;
                    count_act(&seg.act);
                }
            }
        }
    }

    CorpusStats {
        num_dialogues: corpus.dialogues.len(),
        num_spoken,
        num_chat,
        num_turns,
        num_utterances,
        turn_words,
        utterance_words,
        avg_words_per_turn: average(turn_words, num_turns),
        avg_words_per_utterance: average(utterance_words, num_utterances),
        act_histogram,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgreementError {
    #[error("label sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("label sequences are empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport<T> {
    pub kappa: T,
    pub observed_agreement: T,
    pub expected_agreement: T,
    pub n_items: usize,
    /// (label from the first annotator, label from the second) → count
    pub confusion: BTreeMap<(String, String), usize>,
}

impl<T: Scalar> AgreementReport<T> {
    pub fn to_table(&self) -> String {
        format!(
            "items                 {:>10}\nobserved agreement    {:>10.4}\nexpected agreement    {:>10.4}\nkappa                 {:>10.4}\n",
            self.n_items,
            self.observed_agreement.to_f64_lossy(),
            self.expected_agreement.to_f64_lossy(),
            self.kappa.to_f64_lossy(),
        )
    }
}

#[derive(Serialize)]
struct ConfusionCell<'a> {
    a: &'a str,
    b: &'a str,
    count: usize,
}

impl<T: Scalar> Serialize for AgreementReport<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let cells: Vec<_> = self
            .confusion
            .iter()
            .map(|((a, b), count)| ConfusionCell { a, b, count: *count })
            .collect();
        let mut s = serializer.serialize_struct("AgreementReport", 5)?;
        s.serialize_field("kappa", &self.kappa.to_f64_lossy())?;
        s.serialize_field("observed_agreement", &self.observed_agreement.to_f64_lossy())?;
        s.serialize_field("expected_agreement", &self.expected_agreement.to_f64_lossy())?;
        s.serialize_field("n_items", &self.n_items)?;
        s.serialize_field("confusion", &cells)?;
        s.end()
    }
}

/// Cohen's kappa between two aligned label sequences. When chance agreement
/// is total (both annotators used one and the same label) kappa is 1.
pub fn cohen_kappa<T, S>(a: &[S], b: &[S]) -> Result<AgreementReport<T>, AgreementError>
where
    T: Scalar,
    S: AsRef<str>,
{
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(AgreementError::Empty);
    }
    let n = a.len() as u64;

    let mut confusion: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut marginal_a: BTreeMap<&str, u64> = BTreeMap::new();
    let mut marginal_b: BTreeMap<&str, u64> = BTreeMap::new();
    let mut agreements = 0u64;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_ref(), y.as_ref());
        if x == y {
            agreements += 1;
        }
        *marginal_a.entry(x).or_insert(0) += 1;
        *marginal_b.entry(y).or_insert(0) += 1;
        *confusion.entry((x.to_string(), y.to_string())).or_insert(0) += 1;
    }
    let chance: u64 = marginal_a
        .iter()
        .filter_map(|(label, ca)| marginal_b.get(label).map(|cb| ca * cb))
        .sum();

    let observed = T::ratio(agreements, n);
    let expected = T::ratio(chance, n * n);
    let kappa = if chance == n * n {
        T::one()
    } else {
        (observed.clone() - expected.clone()) / (T::one() - expected.clone())
    };
    Ok(AgreementReport {
        kappa,
        observed_agreement: observed,
        expected_agreement: expected,
        n_items: a.len(),
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{segment_turn, Dialogue, SegIdCounter, SpeakerRole};
    use crate::schema::builtin_schema;
    use num_traits::One;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(word_count("مساء الخير"), 2);
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("مساء الخير بنك مصر احمد مع حضرتك"), 7);
        assert_eq!(word_count(" \t\n"), 0);
    }

    #[test]
    fn tenths_formatting() {
        assert_eq!(format_tenths(67), "6.7");
        assert_eq!(format_tenths(0), "0.0");
        assert_eq!(format_tenths(-4), "-0.4");
        assert_eq!(format_tenths(-123), "-12.3");
        assert_eq!(display_1dp(&q(20107, 3001)), "6.7");
        assert_eq!(display_1dp(&q(20107, 4727)), "4.3");
        // half away from zero
        assert_eq!(display_1dp(&q(1, 20)), "0.1");
        assert_eq!(display_1dp(&q(-1, 20)), "-0.1");
        assert_eq!(display_1dp(&0.25f64), "0.3");
    }

    #[test]
    fn single_unsegmented_turn() {
        let mut d = Dialogue::new(1, Modality::Spoken, "bank");
        d.push_turn(SpeakerRole::Operator, "مساء الخير", "Greeting").unwrap();
        let stats: CorpusStats<BigRational> = compute_stats(&Corpus::new(vec![d]));
        assert_eq!(stats.num_turns, 1);
        assert_eq!(stats.num_utterances, 1);
        assert_eq!(stats.avg_words_per_turn, q(2, 1));
        assert_eq!(stats.avg_words_per_turn_display(), "2.0");
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let stats: CorpusStats<f64> = compute_stats(&Corpus::default());
        assert_eq!(stats.num_dialogues, 0);
        assert_eq!(stats.avg_words_per_turn, 0.0);
        assert_eq!(stats.avg_words_per_utterance, 0.0);
        assert!(stats.act_histogram.is_empty());
    }

    #[test]
    fn worked_example_histogram() {
        let mut d = Dialogue::new(1, Modality::Spoken, "bank");
        d.push_turn(SpeakerRole::Operator, "مساء الخير بنك مصر احمد مع حضرتك", "Opening")
            .unwrap();
        d.turns[0] = segment_turn(
            &d.turns[0],
            &[2, 4],
            &["Greeting", "Self-Introduce", "Self-Introduce"],
            &builtin_schema(),
            &mut SegIdCounter::default(),
        )
        .unwrap();
        let stats: CorpusStats<BigRational> = compute_stats(&Corpus::new(vec![d]));
        assert_eq!(stats.num_utterances, 3);
        assert_eq!(stats.act_histogram["Greeting"], 1);
        assert_eq!(stats.act_histogram["Self-Introduce"], 2);
        assert_eq!(stats.act_histogram.len(), 2);
        assert_eq!(stats.avg_words_per_utterance, q(7, 3));
    }

    #[test]
    fn placeholder_is_not_counted() {
        let mut d = Dialogue::new(1, Modality::Chat, "zain");
        d.push_turn(SpeakerRole::Customer, "hi", UNANNOTATED).unwrap();
        let stats: CorpusStats<f64> = compute_stats(&Corpus::new(vec![d]));
        assert_eq!(stats.num_utterances, 1);
        assert!(stats.act_histogram.is_empty());
    }

    #[test]
    fn kappa_perfect_agreement() {
        let a = ["Agree", "Disagree", "Inform", "Agree"];
        let r: AgreementReport<BigRational> = cohen_kappa(&a, &a).unwrap();
        assert!(r.kappa.is_one());
    }

    #[test]
    fn kappa_constant_labels_is_one() {
        let a = ["Agree"; 5];
        let r: AgreementReport<f64> = cohen_kappa(&a, &a).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.expected_agreement, 1.0);
    }

    #[test]
    fn kappa_hand_case() {
        // a: 60 Agree, 40 Disagree. b: 50/50 with 70 matching positions.
        // Agree∧Agree = 40, Agree∧Disagree = 20, Disagree∧Agree = 10,
        // Disagree∧Disagree = 30.
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [
            ("Agree", "Agree", 40),
            ("Agree", "Disagree", 20),
            ("Disagree", "Agree", 10),
            ("Disagree", "Disagree", 30),
        ] {
            for _ in 0..n {
                a.push(x);
                b.push(y);
            }
        }
        let r: AgreementReport<BigRational> = cohen_kappa(&a, &b).unwrap();
        assert_eq!(r.observed_agreement, q(7, 10));
        assert_eq!(r.expected_agreement, q(1, 2));
        assert_eq!(r.kappa, q(2, 5));
        assert_eq!(r.confusion[&("Agree".to_string(), "Disagree".to_string())], 20);

        let f: AgreementReport<f64> = cohen_kappa(&a, &b).unwrap();
        assert!((f.kappa - 0.4).abs() < 1e-12);
    }

    #[test]
    fn kappa_errors() {
        let a = ["Agree"];
        let b: [&str; 0] = [];
        assert_eq!(
            cohen_kappa::<f64, _>(&a, &b).unwrap_err(),
            AgreementError::LengthMismatch { left: 1, right: 0 }
        );
        assert_eq!(cohen_kappa::<f64, _>(&b, &b).unwrap_err(), AgreementError::Empty);
    }

    #[test]
    fn kappa_is_symmetric_exactly() {
        let a = ["Agree", "Agree", "Inform", "Offer", "Inform", "Agree"];
        let b = ["Agree", "Inform", "Inform", "Agree", "Offer", "Agree"];
        let ab: AgreementReport<BigRational> = cohen_kappa(&a, &b).unwrap();
        let ba: AgreementReport<BigRational> = cohen_kappa(&b, &a).unwrap();
        assert_eq!(ab.kappa, ba.kappa);
        let ab: AgreementReport<f64> = cohen_kappa(&a, &b).unwrap();
        let ba: AgreementReport<f64> = cohen_kappa(&b, &a).unwrap();
        assert_eq!(ab.kappa, ba.kappa);
    }

    #[test]
    fn f32_and_f64_agree_on_display() {
        let a: CorpusStats<f32> = compute_stats(&Corpus::default());
        assert_eq!(a.avg_words_per_turn_display(), "0.0");
        assert_eq!(display_1dp(&(20107f32 / 3001f32)), "6.7");
    }

    #[test]
    fn stats_json_carries_exact_and_display() {
        let mut d = Dialogue::new(1, Modality::Spoken, "bank");
        d.push_turn(SpeakerRole::Operator, "a b c", "Inform").unwrap();
        d.push_turn(SpeakerRole::Customer, "a b c d", "Inform").unwrap();
        let stats: CorpusStats<f64> = compute_stats(&Corpus::new(vec![d]));
        let json = serde_json::to_value(&stats).unwrap();
        assert_eq!(json["avg_words_per_turn_exact"], "7/2");
        assert_eq!(json["avg_words_per_turn_display"], "3.5");
        assert_eq!(json["act_histogram"]["Inform"], 2);
    }
}
