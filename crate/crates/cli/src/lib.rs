//! Command-line front end: `validate`, `stats`, `translit`, `kappa`,
//! `convert`, `schema` and `serve`.
//!
//! Everything goes through [`run`], which takes its streams as arguments so
//! the binary and the tests share one code path.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use dialact::io::{self, ImportOptions, ParseOptions, TranscriptFormat};
use dialact::{
    builtin_schema, cohen_kappa, compute_stats, validate, AnnotationSchema, Corpus, ExactAgreement,
    ExactStats, Modality, Severity,
};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    /// Validation found at least one Error.
    Invalid,
    /// Bad usage or an I/O failure.
    Failure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Invalid => 1,
            ExitStatus::Failure => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dialact", version, about = "Dialogue-act annotation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FromFormat {
    Trs,
    Txt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ToFormat {
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModalityArg {
    Spoken,
    Chat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a corpus directory against the schema constraints.
    Validate {
        #[arg(env = "DIALACT_CORPUS")]
        corpus: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Corpus statistics.
    Stats {
        #[arg(env = "DIALACT_CORPUS")]
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Buckwalter transliteration, stdin to stdout.
    #[command(group(ArgGroup::new("direction").required(true).args(["to_bw", "from_bw"])))]
    Translit {
        #[arg(long)]
        to_bw: bool,
        #[arg(long)]
        from_bw: bool,
    },
    /// Cohen's kappa between two annotations of the same dialogues.
    Kappa {
        /// Dialogue file, corpus document or corpus directory.
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Import a transcript as an unannotated dialogue.
    Convert {
        #[arg(long, value_enum)]
        from: FromFormat,
        #[arg(long, value_enum)]
        to: ToFormat,
        input: PathBuf,
        /// Output file, or a directory to receive `D<did>.json`.
        output: PathBuf,
        /// Defaults to spoken for trs and chat for txt.
        #[arg(long, value_enum)]
        modality: Option<ModalityArg>,
        /// Defaults to the digits in the input file name, or 1.
        #[arg(long)]
        did: Option<u32>,
        #[arg(long, default_value = "")]
        source: String,
    },
    /// List the dialogue acts.
    Schema {
        #[arg(long)]
        json: bool,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long, env = "DIALACT_CORPUS")]
        corpus: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

/// A failure that ends the command with [`ExitStatus::Failure`].
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<ExitStatus, Failure>;

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    ExitStatus::Success
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    ExitStatus::Failure
                }
            };
        }
    };
    let schema = builtin_schema();
    let result = match cli.command {
        Command::Validate { corpus, json } => cmd_validate(&schema, &corpus, json, stdout, stderr),
        Command::Stats { corpus, json } => cmd_stats(&schema, &corpus, json, stdout),
        Command::Translit { to_bw, .. } => cmd_translit(to_bw, stdin, stdout, stderr),
        Command::Kappa { a, b, json } => cmd_kappa(&schema, &a, &b, json, stdout, stderr),
        Command::Convert {
            from,
            to: ToFormat::Json,
            input,
            output,
            modality,
            did,
            source,
        } => cmd_convert(&schema, from, &input, &output, modality, did, source, stdout),
        Command::Schema { json } => cmd_schema(&schema, json, stdout),
        Command::Serve { corpus, port, host } => cmd_serve(schema, corpus, SocketAddr::new(host, port), stderr),
    };
    match result {
        Ok(status) => status,
        Err(Failure(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            ExitStatus::Failure
        }
    }
}

fn load_dir(schema: &AnnotationSchema, dir: &Path) -> Result<Corpus, Failure> {
    if !dir.is_dir() {
        return Err(Failure(format!("{} is not a directory", dir.display())));
    }
    Ok(io::read_corpus_dir(dir, schema, ParseOptions::strict())?)
}

fn write_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    out.write_all(&bytes)?;
    Ok(())
}

fn cmd_validate(
    schema: &AnnotationSchema,
    dir: &Path,
    json: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let corpus = load_dir(schema, dir)?;
    let report = validate(&corpus, schema);
    if json {
        write_json(stdout, &report)?;
    } else {
        for finding in &report.findings {
            writeln!(stdout, "{finding}")?;
        }
    }
    let errors = report.errors().count();
    let warnings = report.findings.len() - errors;
    writeln!(
        stderr,
        "{} dialogues checked: {errors} errors, {warnings} warnings",
        corpus.dialogues.len()
    )?;
    Ok(if report.has_errors() {
        ExitStatus::Invalid
    } else {
        ExitStatus::Success
    })
}

fn cmd_stats(schema: &AnnotationSchema, dir: &Path, json: bool, stdout: &mut dyn Write) -> CmdResult {
    let stats: ExactStats = compute_stats(&load_dir(schema, dir)?);
    if json {
        write_json(stdout, &stats)?;
    } else {
        stdout.write_all(stats.to_table().as_bytes())?;
    }
    Ok(ExitStatus::Success)
}

fn cmd_translit(to_bw: bool, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let mut input = String::new();
    stdin
        .read_to_string(&mut input)
        .map_err(|e| Failure(format!("reading stdin: {e}")))?;
    let out = if to_bw {
        dialact::to_buckwalter(&input)
    } else {
        dialact::from_buckwalter(&input)
    };
    stdout.write_all(out.text.as_bytes())?;
    if out.out_of_alphabet {
        writeln!(stderr, "warning: input contains characters outside the table; they were copied unchanged")?;
    }
    Ok(ExitStatus::Success)
}

/// Reads a corpus from a directory, a corpus document or a single dialogue file.
pub fn load_annotations(schema: &AnnotationSchema, path: &Path) -> Result<Corpus, String> {
    if path.is_dir() {
        return io::read_corpus_dir(path, schema, ParseOptions::strict()).map_err(|e| e.to_string());
    }
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let is_document = serde_json::from_slice::<serde_json::Value>(&bytes)
        .map(|v| v.get("dialogues").is_some())
        .unwrap_or(true);
    if is_document {
        io::parse(&bytes, schema, ParseOptions::strict()).map_err(|e| format!("{}: {e}", path.display()))
    } else {
        io::read_dialogue_file(path, schema, ParseOptions::strict())
            .map(|d| Corpus::new(vec![d]))
            .map_err(|e| e.to_string())
    }
}

/// One label per (UID, 1-based segment ordinal). An unsegmented turn is a
/// single unit carrying its overall act.
pub fn annotation_units(corpus: &Corpus) -> BTreeMap<(String, usize), String> {
    let mut units = BTreeMap::new();
    for turn in corpus.turns() {
        for (i, act) in turn.utterance_acts().into_iter().enumerate() {
            units.insert((turn.uid.clone(), i + 1), act.to_string());
        }
    }
    units
}

/// Aligned label sequences over the units both corpora share, plus the
/// number of units present in only one of them.
pub fn align_labels(a: &Corpus, b: &Corpus) -> (Vec<String>, Vec<String>, usize) {
    let ua = annotation_units(a);
    let mut ub = annotation_units(b);
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    let mut unaligned = 0;
    for (key, label) in ua {
        match ub.remove(&key) {
            Some(other) => {
                la.push(label);
                lb.push(other);
            }
            None => unaligned += 1,
        }
    }
    (la, lb, unaligned + ub.len())
}

fn cmd_kappa(
    schema: &AnnotationSchema,
    a: &Path,
    b: &Path,
    json: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let ca = load_annotations(schema, a).map_err(Failure)?;
    let cb = load_annotations(schema, b).map_err(Failure)?;
    let (la, lb, unaligned) = align_labels(&ca, &cb);
    if unaligned > 0 {
        writeln!(stderr, "warning: {unaligned} units appear in only one annotation and were skipped")?;
    }
    let report: ExactAgreement = cohen_kappa(&la, &lb).map_err(|e| Failure(format!("no aligned units: {e}")))?;
    if json {
        let mut value = serde_json::to_value(&report)?;
        value["kappa_exact"] = serde_json::Value::String(report.kappa.to_string());
        write_json(stdout, &value)?;
    } else {
        stdout.write_all(report.to_table().as_bytes())?;
        writeln!(stdout, "kappa (exact)         {:>10}", report.kappa.to_string())?;
    }
    Ok(ExitStatus::Success)
}

fn did_from_file_name(path: &Path) -> Option<u32> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok().filter(|&d| d > 0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_convert(
    schema: &AnnotationSchema,
    from: FromFormat,
    input: &Path,
    output: &Path,
    modality: Option<ModalityArg>,
    did: Option<u32>,
    source: String,
    stdout: &mut dyn Write,
) -> CmdResult {
    let (format, default_modality) = match from {
        FromFormat::Trs => (TranscriptFormat::Trs, Modality::Spoken),
        FromFormat::Txt => (TranscriptFormat::Txt, Modality::Chat),
    };
    let modality = match modality {
        Some(ModalityArg::Spoken) => Modality::Spoken,
        Some(ModalityArg::Chat) => Modality::Chat,
        None => default_modality,
    };
    let bytes = std::fs::read(input).map_err(|e| Failure(format!("{}: {e}", input.display())))?;
    let options = ImportOptions {
        did: did.or_else(|| did_from_file_name(input)).unwrap_or(1),
        source,
    };
    let corpus = io::import_transcript_as(format, &bytes, modality, &options)
        .map_err(|e| Failure(format!("{}: {e}", input.display())))?;
    let dialogue = &corpus.dialogues[0];
    let target = if output.is_dir() {
        output.join(io::dialogue_file_name(dialogue.did))
    } else {
        output.to_path_buf()
    };
    io::write_atomic(&target, &io::serialize_dialogue(dialogue, schema)?)?;
    writeln!(stdout, "{}", target.display())?;
    Ok(ExitStatus::Success)
}

fn cmd_schema(schema: &AnnotationSchema, json: bool, stdout: &mut dyn Write) -> CmdResult {
    if json {
        stdout.write_all(&io::export_schema(schema))?;
    } else {
        for act in schema.acts() {
            writeln!(stdout, "{}\t{}", act.name, act.dimension)?;
        }
    }
    Ok(ExitStatus::Success)
}

fn cmd_serve(schema: AnnotationSchema, corpus: PathBuf, addr: SocketAddr, stderr: &mut dyn Write) -> CmdResult {
    let store = dialact_service::AnnotationStore::open(&corpus, schema)?;
    let report = store.validate();
    let errors = report.findings.iter().filter(|f| f.severity == Severity::Error).count();
    if errors > 0 {
        writeln!(stderr, "note: corpus has {errors} validation errors (pending annotations included)")?;
    }
    writeln!(stderr, "serving {} on http://{addr}", corpus.display())?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(dialact_service::serve(store, addr))?;
    Ok(ExitStatus::Success)
}
