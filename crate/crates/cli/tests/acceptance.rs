//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS or FAIL line, whatever the outcome.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use dialact::io::{self, ParseOptions};
use dialact::model::token_spans;
use dialact::synth::{corpus_with_totals, seeded_corpus, CorpusTotals, SynthConfig};
use dialact::translit::TranslitTable;
use dialact::{
    builtin_schema, cohen_kappa, compute_stats, segment_turn, validate, AnnotationSchema, Corpus, Dialogue, Dimension,
    ExactAgreement, ExactStats, FloatAgreement, Modality, Rational, Rule, SegIdCounter, Severity, SpeakerRole,
};
use dialact_service::{router, AnnotationStore};
use http_body_util::BodyExt;
use num_traits::{One, ToPrimitive};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("schema fidelity", Some(Duration::from_secs(1)), schema_fidelity),
        ("transliteration", Some(Duration::from_secs(5)), transliteration),
        ("opening rule", None, opening_rule),
        ("stats formula", Some(Duration::from_secs(10)), stats_formula),
        ("kappa oracle", None, kappa_oracle),
        ("round trip", None, round_trip),
        ("fault injection", None, fault_injection),
        ("service durability", None, service_durability),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, budget) {
            if elapsed > limit {
                outcome = Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS  {name:<20} {detail} ({elapsed:.2?})"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name:<20} {reason} ({elapsed:.2?})");
            }
        }
    }
    println!("\n{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn cli(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut argv = vec!["dialact"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = dialact_cli::run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    (status.code(), String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn schema_fidelity() -> Outcome {
    let (code, text, err) = cli(&["schema"], "");
    ensure!(code == 0 && err.is_empty(), "exit {code}, stderr {err:?}");
    ensure!(text.lines().count() == 25, "{} lines", text.lines().count());
    ensure!(text == include_str!("golden/schema.txt"), "act list differs from golden file");
    let (_, json_text, _) = cli(&["schema", "--json"], "");
    ensure!(json_text == include_str!("golden/schema.json"), "definitions differ from golden file");

    let schema = builtin_schema();
    let counts: Vec<usize> = Dimension::ALL.iter().map(|&d| schema.acts_in(d).count()).collect();
    ensure!(counts == [7, 15, 3], "partition {counts:?}");
    Ok("25 acts, 7/15/3, golden match".into())
}

fn transliteration() -> Outcome {
    let goldens = [
        ("مساء الخير", "msA' Alxyr"),
        ("بنك مصر", "bnk mSr"),
        ("احمد مع حضرتك", "AHmd mE HDrtk"),
    ];
    for (arabic, bw) in goldens {
        let (_, out, _) = cli(&["translit", "--to-bw"], arabic);
        ensure!(out == bw, "{arabic} -> {out:?}, want {bw:?}");
        let (_, back, _) = cli(&["translit", "--from-bw"], bw);
        ensure!(back == arabic, "{bw} -> {back:?}");
    }
    let alphabet: Vec<char> = TranslitTable.arabic_alphabet().chain([' ']).collect();
    let rng = &mut ChaCha8Rng::seed_from_u64(7);
    let trials = 10_000;
    for _ in 0..trials {
        let len = rng.random_range(0..=30);
        let s: String = (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect();
        let bw = dialact::to_buckwalter(&s);
        ensure!(!bw.out_of_alphabet, "covered string flagged: {s:?}");
        let back = dialact::from_buckwalter(&bw.text);
        ensure!(back.text == s && !back.out_of_alphabet, "round trip broke on {s:?}");
    }
    Ok(format!("3 goldens both ways, {trials} random round trips"))
}

fn opening_dialogue(text: &str, cuts: &[usize], acts: &[&str]) -> Corpus {
    let schema = builtin_schema();
    let mut d = Dialogue::new(1, Modality::Spoken, "bank");
    d.push_turn(SpeakerRole::Operator, text, "Opening").unwrap();
    d.push_turn(SpeakerRole::Customer, "شكرا مع السلامة", "Closing").unwrap();
    let mut ids = SegIdCounter::starting_at(35295);
    d.turns[0] = segment_turn(&d.turns[0], cuts, acts, &schema, &mut ids).unwrap();
    Corpus::new(vec![d])
}

fn opening_rule() -> Outcome {
    let schema = builtin_schema();
    let examples = [
        ("مساء الخير بنك مصر احمد مع حضرتك", ["Greeting", "Self-Introduce", "Self-Introduce"]),
        ("مساء الخير الاخي فون احمد معك", ["Greeting", "SelfIntroduce", "SelfIntroduce"]),
    ];
    for (text, acts) in examples {
        let corpus = opening_dialogue(text, &[2, 4], &acts);
        let report = validate(&corpus, &schema);
        ensure!(!report.has_errors(), "worked example has errors: {:?}", report.findings);
        for position in 0..3 {
            let mut mutated = acts;
            mutated[position] = "Thanking";
            let report = validate(&opening_dialogue(text, &[2, 4], &mutated), &schema);
            let errors: Vec<_> = report.errors().collect();
            ensure!(
                errors.len() == 1 && errors[0].rule == Rule::R3,
                "Thanking at segment {}: {:?}",
                position + 1,
                errors
            );
        }
    }
    Ok("0 errors on both examples; Thanking in each of 3 positions gives exactly one R3".into())
}

fn stats_formula() -> Outcome {
    let schema = builtin_schema();
    let totals = CorpusTotals {
        dialogues: 82,
        spoken: 52,
        turns: 3001,
        words: 20107,
        utterances: 4727,
    };
    let corpus = corpus_with_totals(totals, 2024, &schema).map_err(|e| e.to_string())?;
    ensure!(!validate(&corpus, &schema).has_errors(), "generated corpus is invalid");
    let stats: ExactStats = compute_stats(&corpus);
    ensure!(
        (stats.num_turns, stats.num_utterances, stats.turn_words) == (3001, 4727, 20107),
        "totals {} / {} / {}",
        stats.num_turns,
        stats.num_utterances,
        stats.turn_words
    );
    let (per_turn, per_utt) = (stats.avg_words_per_turn_display(), stats.avg_words_per_utterance_display());
    ensure!(per_turn == "6.7" && per_utt == "4.3", "displays {per_turn} and {per_utt}");

    // independent recount straight from the serialized document
    let doc: Value = serde_json::from_slice(&io::serialize(&corpus, &schema).map_err(|e| e.to_string())?).unwrap();
    let (mut turns, mut utts, mut turn_words, mut utt_words) = (0i64, 0i64, 0i64, 0i64);
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    for d in doc["dialogues"].as_array().unwrap() {
        for t in d["Turns"].as_array().unwrap() {
            turns += 1;
            let text = t["Utterance"].as_str().unwrap();
            turn_words += text.split_whitespace().count() as i64;
            let segs = t["Segments"].as_array().unwrap();
            if segs.is_empty() {
                utts += 1;
                utt_words += text.split_whitespace().count() as i64;
                *hist.entry(t["Over_ALL_DA"].as_str().unwrap().into()).or_default() += 1;
            }
            for s in segs {
                utts += 1;
                utt_words += s["Segment"].as_str().unwrap().split_whitespace().count() as i64;
                *hist.entry(s["SDA"].as_str().unwrap().into()).or_default() += 1;
            }
        }
    }
    ensure!(
        stats.avg_words_per_turn == Rational::new(turn_words.into(), turns.into())
            && stats.avg_words_per_utterance == Rational::new(utt_words.into(), utts.into()),
        "exact averages differ from recount"
    );
    ensure!(stats.act_histogram == hist, "histogram differs from recount");
    Ok(format!("{} and {} words per turn and utterance; exact values match recount", per_turn, per_utt))
}

/// Cohen's kappa from an explicit k x k confusion matrix.
fn brute_force_kappa(a: &[&str], b: &[&str]) -> (Rational, Rational, Rational, BTreeMap<(String, String), usize>) {
    let mut labels: Vec<&str> = a.iter().chain(b).copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let k = labels.len();
    let idx = |l: &str| labels.iter().position(|x| *x == l).unwrap();
    let mut m = vec![vec![0i64; k]; k];
    for (x, y) in a.iter().zip(b) {
        m[idx(x)][idx(y)] += 1;
    }
    let n = a.len() as i64;
    let trace: i64 = (0..k).map(|i| m[i][i]).sum();
    let chance: i64 = (0..k)
        .map(|i| m[i].iter().sum::<i64>() * (0..k).map(|r| m[r][i]).sum::<i64>())
        .sum();
    let po = Rational::new(trace.into(), n.into());
    let pe = Rational::new(chance.into(), (n * n).into());
    let kappa = if pe.is_one() {
        Rational::one()
    } else {
        (po.clone() - pe.clone()) / (Rational::one() - pe.clone())
    };
    let mut confusion = BTreeMap::new();
    for i in 0..k {
        for j in 0..k {
            if m[i][j] > 0 {
                confusion.insert((labels[i].to_string(), labels[j].to_string()), m[i][j] as usize);
            }
        }
    }
    (kappa, po, pe, confusion)
}

fn kappa_oracle() -> Outcome {
    let schema = builtin_schema();
    let names: Vec<&str> = schema.acts().iter().map(|a| a.name.as_str()).collect();
    let rng = &mut ChaCha8Rng::seed_from_u64(11);
    let mut worst_float = 0f64;
    for trial in 0..1000 {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=6);
        let pool: Vec<&str> = names.choose_multiple(rng, k).copied().collect();
        let a: Vec<&str> = (0..n).map(|_| *pool.choose(rng).unwrap()).collect();
        let b: Vec<&str> = (0..n).map(|_| *pool.choose(rng).unwrap()).collect();
        let (kappa, po, pe, confusion) = brute_force_kappa(&a, &b);
        let got: ExactAgreement = cohen_kappa(&a, &b).map_err(|e| e.to_string())?;
        ensure!(
            got.kappa == kappa && got.observed_agreement == po && got.expected_agreement == pe,
            "trial {trial}: kappa {} vs brute force {}",
            got.kappa,
            kappa
        );
        ensure!(got.confusion == confusion && got.n_items == n, "trial {trial}: confusion differs");
        let float: FloatAgreement = cohen_kappa(&a, &b).map_err(|e| e.to_string())?;
        worst_float = worst_float.max((float.kappa - kappa.to_f64().unwrap()).abs());
    }
    ensure!(worst_float <= 1e-12, "f64 kappa off by {worst_float:e}");

    let mut a = vec!["Agree"; 60];
    a.extend(["Disagree"; 40]);
    let mut b = vec!["Agree"; 40];
    b.extend(["Disagree"; 20]);
    b.extend(["Agree"; 10]);
    b.extend(["Disagree"; 30]);
    let hand: ExactAgreement = cohen_kappa(&a, &b).unwrap();
    let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
    ensure!(
        hand.observed_agreement == r(7, 10) && hand.expected_agreement == r(1, 2) && hand.kappa == r(2, 5),
        "hand case gave kappa {}",
        hand.kappa
    );

    let n = 100_000;
    let a: Vec<&str> = (0..n).map(|_| *names.choose(rng).unwrap()).collect();
    let b: Vec<&str> = (0..n).map(|_| *names.choose(rng).unwrap()).collect();
    let random: ExactAgreement = cohen_kappa(&a, &b).unwrap();
    let kappa = random.kappa.to_f64().unwrap();
    ensure!(kappa.abs() <= 0.02, "independent labels gave kappa {kappa}");
    Ok(format!(
        "1000 exact matches (f64 within {worst_float:.1e}); hand case 2/5; random n=1e5 kappa {kappa:+.4}"
    ))
}

fn round_trip() -> Outcome {
    let schema = builtin_schema();
    let config = SynthConfig { dialogues: 4, ..SynthConfig::default() };
    for seed in 0..500 {
        let corpus = seeded_corpus(seed, &config, &schema);
        let first = io::serialize(&corpus, &schema).map_err(|e| e.to_string())?;
        let second = io::serialize(&corpus, &schema).map_err(|e| e.to_string())?;
        ensure!(first == second, "seed {seed}: serialize is not deterministic");
        let parsed = io::parse(&first, &schema, ParseOptions::strict()).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(parsed == corpus, "seed {seed}: parse(serialize(c)) != c");
        ensure!(io::serialize(&parsed, &schema).unwrap() == first, "seed {seed}: bytes changed");
    }
    Ok("500 corpora, identity and byte-deterministic".into())
}

/// Mutates `corpus` so that exactly one finding of `rule` appears. Returns
/// false when this corpus offers no suitable spot.
fn inject(corpus: &mut Corpus, rule: Rule, rng: &mut ChaCha8Rng, schema: &AnnotationSchema) -> bool {
    let d = rng.random_range(0..corpus.dialogues.len());
    let next_id = corpus.max_seg_id() + 1;
    let dialogue = &mut corpus.dialogues[d];
    let n = dialogue.turns.len();
    let middle = if n >= 3 { Some(rng.random_range(1..n - 1)) } else { None };
    match rule {
        Rule::R1 => {
            let Some(t) = middle else { return false };
            let turn = &mut dialogue.turns[t];
            match turn.segments.len() {
                0 => turn.overall_act = "Small-Talk".into(),
                k => turn.segments[rng.random_range(0..k)].act = "Small-Talk".into(),
            }
        }
        Rule::R2 => {
            let Some(t) = middle else { return false };
            let turn = &mut dialogue.turns[t];
            turn.is_segmented = !turn.is_segmented;
        }
        Rule::R3 => {
            let opening = &dialogue.turns[0];
            if token_spans(&opening.text).len() < 3 {
                return false;
            }
            let mut ids = SegIdCounter::starting_at(next_id);
            dialogue.turns[0] = segment_turn(
                &opening.clone().unsegmented(),
                &[1, 2],
                &["Greeting", "Self-Introduce", "Thanking"],
                schema,
                &mut ids,
            )
            .expect("three tokens");
        }
        Rule::R5 => {
            let Some(turn) = dialogue.turns.iter_mut().find(|t| !t.segments.is_empty()) else {
                return false;
            };
            turn.segments.last_mut().unwrap().text.push('ك');
        }
        Rule::R6 => {
            let ids: Vec<u64> = corpus.turns().flat_map(|t| t.segments.iter().map(|s| s.seg_id)).collect();
            if ids.len() < 2 {
                return false;
            }
            let source = ids[rng.random_range(0..ids.len())];
            let target = loop {
                let candidate = ids[rng.random_range(0..ids.len())];
                if candidate != source {
                    break candidate;
                }
            };
            for seg in corpus.dialogues.iter_mut().flat_map(|d| d.turns.iter_mut()).flat_map(|t| t.segments.iter_mut()) {
                if seg.seg_id == target {
                    seg.seg_id = source;
                }
            }
        }
        _ => unreachable!("only R1 to R6 are injected"),
    }
    true
}

fn fault_injection() -> Outcome {
    let schema = builtin_schema();
    let rules = [Rule::R1, Rule::R2, Rule::R3, Rule::R4, Rule::R5, Rule::R6];
    let config = SynthConfig { dialogues: 3, min_turns: 3, max_turns: 8, ..SynthConfig::default() };
    let rng = &mut ChaCha8Rng::seed_from_u64(5);
    let mut seed = 0u64;
    let mut per_rule: BTreeMap<Rule, usize> = BTreeMap::new();
    for i in 0..100 {
        let rule = rules[i % rules.len()];
        let (corpus, expected) = loop {
            seed += 1;
            let mut corpus = seeded_corpus(seed, &config, &schema);
            let base = validate(&corpus, &schema);
            ensure!(base.is_valid(), "seed {seed}: base corpus not clean: {:?}", base.findings);
            let injected = if rule == Rule::R4 {
                inject_r4(&mut corpus, &schema)
            } else {
                inject(&mut corpus, rule, rng, &schema)
            };
            if injected {
                break (corpus, rule);
            }
        };
        let report = validate(&corpus, &schema);
        ensure!(
            report.findings.len() == 1 && report.findings[0].rule == expected,
            "corpus {i} (seed {seed}, injected {expected}): {:?}",
            report.findings
        );
        if expected.severity() == Severity::Error {
            ensure!(report.has_errors(), "corpus {i}: injected error not reported as error");
        }
        *per_rule.entry(expected).or_default() += 1;
    }
    let summary: Vec<String> = per_rule.iter().map(|(r, c)| format!("{r}x{c}")).collect();
    Ok(format!("100 corpora, each exactly its injected finding ({})", summary.join(" ")))
}

/// R4: a segmented Opening made only of Greetings.
fn inject_r4(corpus: &mut Corpus, schema: &AnnotationSchema) -> bool {
    let next_id = corpus.max_seg_id() + 1;
    let Some(dialogue) = corpus
        .dialogues
        .iter_mut()
        .find(|d| token_spans(&d.turns[0].text).len() >= 2)
    else {
        return false;
    };
    let mut ids = SegIdCounter::starting_at(next_id);
    dialogue.turns[0] = segment_turn(
        &dialogue.turns[0].clone().unsegmented(),
        &[1],
        &["Greeting", "Greeting"],
        schema,
        &mut ids,
    )
    .expect("two tokens");
    true
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

/// A valid annotation for a non-opening turn: either whole or split at
/// random token boundaries.
fn random_update(text: &str, acts: &[&str], rng: &mut ChaCha8Rng) -> Value {
    let spans = token_spans(text);
    let overall = *acts.choose(rng).unwrap();
    if spans.len() < 2 || rng.random_bool(0.4) {
        return json!({ "Over_ALL_DA": overall, "isSegmented": false, "Segments": [] });
    }
    let pieces = rng.random_range(2..=spans.len().min(4));
    let mut cuts: Vec<usize> = (1..spans.len()).collect();
    cuts.sort_by_key(|_| rng.random::<u32>());
    let mut cuts: Vec<usize> = cuts.into_iter().take(pieces - 1).collect();
    cuts.sort_unstable();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(spans.len());
    let segments: Vec<Value> = bounds
        .windows(2)
        .map(|w| json!({ "Segment": &text[spans[w[0]].0..spans[w[1] - 1].1], "SDA": *acts.choose(rng).unwrap() }))
        .collect();
    json!({ "Over_ALL_DA": overall, "isSegmented": true, "Segments": segments })
}

async fn durability_script() -> Outcome {
    let schema = builtin_schema();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = SynthConfig { dialogues: 4, min_turns: 4, max_turns: 10, ..SynthConfig::default() };
    io::write_corpus_dir(dir.path(), &seeded_corpus(99, &config, &schema), &schema).map_err(|e| e.to_string())?;
    let store = Arc::new(AnnotationStore::open(dir.path(), schema.clone()).map_err(|e| e.to_string())?);
    let app = router(store.clone());

    let acts: Vec<&str> = schema.acts().iter().map(|a| a.name.as_str()).filter(|n| *n != "Opening").collect();
    let targets: Vec<(u32, String, String)> = store
        .snapshot()
        .dialogues
        .iter()
        .flat_map(|d| d.turns.iter().skip(1).map(move |t| (d.did, t.uid.clone(), t.text.clone())))
        .collect();
    let rng = &mut ChaCha8Rng::seed_from_u64(3);
    let mut codes: BTreeMap<u16, usize> = BTreeMap::new();
    let mut puts = 0;
    let invalid_at = [4, 13, 22, 31, 40];
    let race_at = 25;

    while puts < 50 {
        let (did, uid, text) = targets.choose(rng).unwrap().clone();
        let uri = format!("/dialogues/{did}/turns/{uid}");
        let (_, current) = call(&app, "GET", &uri, None).await;
        let revision = current["Revision"].clone();
        if puts == race_at {
            let mut first = random_update(&text, &acts, rng);
            let mut second = random_update(&text, &acts, rng);
            first["Revision"] = revision.clone();
            second["Revision"] = revision;
            let (a, b) = (app.clone(), app.clone());
            let (ua, ub) = (uri.clone(), uri.clone());
            let ha = tokio::spawn(async move { call(&a, "PUT", &ua, Some(first)).await.0 });
            let hb = tokio::spawn(async move { call(&b, "PUT", &ub, Some(second)).await.0 });
            let mut pair = [ha.await.unwrap(), hb.await.unwrap()];
            pair.sort();
            ensure!(pair == [StatusCode::OK, StatusCode::CONFLICT], "race gave {pair:?}");
            for code in pair {
                *codes.entry(code.as_u16()).or_default() += 1;
            }
            puts += 2;
            continue;
        }
        let mut body = random_update(&text, &acts, rng);
        let want = if invalid_at.contains(&puts) {
            body["Over_ALL_DA"] = json!("Not-An-Act");
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::OK
        };
        body["Revision"] = revision;
        let (status, resp) = call(&app, "PUT", &uri, Some(body)).await;
        ensure!(status == want, "PUT {puts} to {uri}: {status}, want {want}: {resp}");
        if status == StatusCode::OK {
            let (_, after) = call(&app, "GET", &uri, None).await;
            ensure!(after == resp, "GET after PUT {puts} differs from PUT response");
        }
        *codes.entry(status.as_u16()).or_default() += 1;
        puts += 1;
    }
    ensure!(
        codes == BTreeMap::from([(200, 44), (409, 1), (422, 5)]),
        "status tally {codes:?}"
    );

    let memory = store.snapshot();
    let disk = io::read_corpus_dir(dir.path(), &schema, ParseOptions::strict()).map_err(|e| e.to_string())?;
    ensure!(disk == memory, "disk state differs from memory");
    let reloaded = AnnotationStore::open(dir.path(), schema.clone()).map_err(|e| e.to_string())?;
    ensure!(reloaded.snapshot() == memory, "reload differs from memory");
    let report = validate(&memory, &schema);
    ensure!(!report.has_errors(), "accepted edits left errors: {:?}", report.errors().collect::<Vec<_>>());
    Ok("50 PUTs (44 ok, 5 rejected, 1 lost race); disk == memory == reload".into())
}

fn service_durability() -> Outcome {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?
        .block_on(durability_script())
}
