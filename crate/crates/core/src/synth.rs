//! Seeded synthetic corpora.
//!
//! The generated corpora are valid under the builtin schema: every dialogue
//! opens with an Opening turn and ends with a Closing turn, segmented
//! Openings start with a Greeting followed by Self-Introduce segments, and
//! segment ids are unique.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    make_uid, Corpus, Dialogue, Modality, Segment, SpeakerRole, Turn, CLOSING, GREETING, OPENING,
    SELF_INTRODUCE,
};
use crate::schema::AnnotationSchema;

/// Arabic letters without hamza carriers or marks, enough for plausible
/// looking tokens.
const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ',
    'ف', 'ق', 'ك', 'ل', 'م', 'ن', 'ه', 'و', 'ي', 'ة', 'ء', 'ى',
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub dialogues: usize,
    pub min_turns: usize,
    pub max_turns: usize,
    pub max_words: usize,
    pub max_segments: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dialogues: 3,
            min_turns: 2,
            max_turns: 8,
            max_words: 10,
            max_segments: 3,
        }
    }
}

fn word(rng: &mut impl Rng) -> String {
    let len = rng.random_range(1..=6);
    (0..len).map(|_| *LETTERS.choose(rng).expect("nonempty")).collect()
}

fn words(rng: &mut impl Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| word(rng)).collect()
}

/// Picks `k - 1` distinct cut points in `1..n`, sorted.
fn cuts(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (1..n).collect();
    let (picked, _) = all.partial_shuffle(rng, k - 1);
    let mut picked = picked.to_vec();
    picked.sort_unstable();
    picked
}

fn middle_acts(schema: &AnnotationSchema) -> Vec<String> {
    schema
        .acts()
        .iter()
        .map(|a| a.name.clone())
        .filter(|n| n != OPENING)
        .collect()
}

struct TurnPlan {
    words: usize,
    segments: usize,
    role: Role,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Opening,
    Middle,
    Closing,
}

fn build_turn(
    rng: &mut impl Rng,
    uid: String,
    plan: &TurnPlan,
    acts: &[String],
    next_seg: &mut u64,
) -> Turn {
    let tokens = words(rng, plan.words);
    let speaker = if rng.random_bool(0.5) {
        SpeakerRole::Operator
    } else {
        SpeakerRole::Customer
    };
    let overall = match plan.role {
        Role::Opening => OPENING.to_string(),
        Role::Closing => CLOSING.to_string(),
        Role::Middle => acts.choose(rng).expect("nonempty").clone(),
    };
    let text = tokens.join(" ");
    let mut turn = Turn::new(uid, speaker, text, overall).expect("generated text is nonempty");
    if plan.segments >= 2 || (plan.segments == 1 && plan.role != Role::Opening && rng.random_bool(0.2)) {
        let mut bounds = vec![0];
        bounds.extend(cuts(rng, plan.words, plan.segments));
        bounds.push(plan.words);
        turn.is_segmented = true;
        turn.segments = bounds
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = match (plan.role, i) {
                    (Role::Opening, 0) => GREETING.to_string(),
                    (Role::Opening, _) => SELF_INTRODUCE.to_string(),
                    _ => acts.choose(rng).expect("nonempty").clone(),
                };
                let seg = Segment::new(*next_seg, tokens[w[0]..w[1]].join(" "), act)
                    .expect("segment has at least one token");
                *next_seg += 1;
                seg
            })
            .collect();
    }
    turn
}

fn modality_for(index: usize, spoken: usize) -> Modality {
    if index < spoken {
        Modality::Spoken
    } else {
        Modality::Chat
    }
}

/// A random valid corpus.
pub fn random_corpus(rng: &mut impl Rng, config: &SynthConfig, schema: &AnnotationSchema) -> Corpus {
    let acts = middle_acts(schema);
    let mut next_seg = rng.random_range(1..50_000);
    let spoken = rng.random_range(0..=config.dialogues);
    let mut dialogues = Vec::with_capacity(config.dialogues);
    for i in 0..config.dialogues {
        let did = (i + 1) as u32;
        let n_turns = rng.random_range(config.min_turns.max(2)..=config.max_turns.max(2));
        let mut dialogue = Dialogue::new(did, modality_for(i, spoken), format!("source-{did}"));
        for t in 0..n_turns {
            let role = match t {
                0 => Role::Opening,
                _ if t + 1 == n_turns => Role::Closing,
                _ => Role::Middle,
            };
            let min_words = if role == Role::Opening { 2 } else { 1 };
            let n_words = rng.random_range(min_words..=config.max_words.max(min_words));
            let min_segs = if role == Role::Opening { 2 } else { 1 };
            let n_segs = rng.random_range(min_segs..=config.max_segments.max(min_segs).min(n_words));
            let segments = if role != Role::Opening && rng.random_bool(0.4) { 0 } else { n_segs };
            let plan = TurnPlan {
                words: n_words,
                segments,
                role,
            };
            let uid = make_uid(did, (t + 1) as u32).expect("positive ids");
            dialogue
                .turns
                .push(build_turn(rng, uid, &plan, &acts, &mut next_seg));
        }
        dialogues.push(dialogue);
    }
    Corpus::new(dialogues)
}

pub fn seeded_corpus(seed: u64, config: &SynthConfig, schema: &AnnotationSchema) -> Corpus {
    random_corpus(&mut ChaCha8Rng::seed_from_u64(seed), config, schema)
}

/// Target totals for [`corpus_with_totals`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusTotals {
    pub dialogues: usize,
    pub spoken: usize,
    pub turns: usize,
    pub words: usize,
    pub utterances: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TotalsError {
    #[error("each dialogue needs at least two turns")]
    TooFewTurns,
    #[error("utterances must be at least the number of turns")]
    TooFewUtterances,
    #[error("every utterance needs at least one word")]
    TooFewWords,
    #[error("more spoken dialogues than dialogues")]
    TooManySpoken,
}

/// A valid corpus hitting the given totals exactly. Surplus utterances and
/// words are spread at random over the turns.
pub fn corpus_with_totals(
    totals: CorpusTotals,
    seed: u64,
    schema: &AnnotationSchema,
) -> Result<Corpus, TotalsError> {
    if totals.dialogues == 0 || totals.turns < 2 * totals.dialogues {
        return Err(TotalsError::TooFewTurns);
    }
    if totals.utterances < totals.turns {
        return Err(TotalsError::TooFewUtterances);
    }
    if totals.words < totals.utterances {
        return Err(TotalsError::TooFewWords);
    }
    if totals.spoken > totals.dialogues {
        return Err(TotalsError::TooManySpoken);
    }
    let rng = &mut ChaCha8Rng::seed_from_u64(seed);

    let mut turns_per = vec![2usize; totals.dialogues];
    for _ in 0..totals.turns - 2 * totals.dialogues {
        turns_per[rng.random_range(0..totals.dialogues)] += 1;
    }
    let mut segs = vec![1usize; totals.turns];
    for _ in 0..totals.utterances - totals.turns {
        segs[rng.random_range(0..totals.turns)] += 1;
    }
    let mut words_per = segs.clone();
    for _ in 0..totals.words - totals.utterances {
        words_per[rng.random_range(0..totals.turns)] += 1;
    }

    let acts = middle_acts(schema);
    let mut next_seg = 1u64;
    let mut flat = 0;
    let mut dialogues = Vec::with_capacity(totals.dialogues);
    for (i, &n_turns) in turns_per.iter().enumerate() {
        let did = (i + 1) as u32;
        let mut dialogue = Dialogue::new(did, modality_for(i, totals.spoken), format!("source-{did}"));
        for t in 0..n_turns {
            let role = match t {
                0 => Role::Opening,
                _ if t + 1 == n_turns => Role::Closing,
                _ => Role::Middle,
            };
            let plan = TurnPlan {
                words: words_per[flat],
                segments: segs[flat],
                role,
            };
            flat += 1;
            let uid = make_uid(did, (t + 1) as u32).expect("positive ids");
            dialogue
                .turns
                .push(build_turn(rng, uid, &plan, &acts, &mut next_seg));
        }
        dialogues.push(dialogue);
    }
    Ok(Corpus::new(dialogues))
}
