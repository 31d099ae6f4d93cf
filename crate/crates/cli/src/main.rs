use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use clozegen::evalkit::{
    agreement_from_ratings, read_labels_csv, read_ratings_csv, tally, Vocabulary,
};
use clozegen::gateway::{
    transcript_from_log_csv, write_log_csv, MemorySink, RequestTag, TranscriptStore,
};
use clozegen::morphology::{AcceptAll, FixtureTagger, Morphology, SecondaryTagger};
use clozegen::pipeline::{build_transport, preprocess, run_pipeline, LlmTagger, RunConfig};
use clozegen::wordlist::{read_headword_list, write_word_groups_to_path};
use clozegen::Gateway;
use clozegen_review::{serve_blocking, ReviewConfig};

const EXIT_CONFIG: u8 = 1;
const EXIT_PARTIAL: u8 = 2;
const EXIT_TRANSPORT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "clozegen",
    version,
    about = "Generate and review multiple-choice cloze items"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build word groups from a headword list.
    Preprocess(PreprocessArgs),
    /// Generate items from word groups.
    Generate(GenerateArgs),
    /// Serve the review interface over generated items.
    Review(ReviewArgs),
    /// Agreement statistics and error tallies.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Turn a run's call log into a replay transcript.
    Record(RecordArgs),
    /// Print the recorded response for a prompt.
    Replay(ReplayArgs),
}

/// Run settings shared by the commands that call the model.
#[derive(Args, Default)]
struct RunArgs {
    /// `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting; repeatable. Applied after the file and flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// live or replay.
    #[arg(long)]
    transport: Option<String>,
    /// Transcript file read by the replay transport.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        push("transport", &self.transport);
        push(
            "transcript",
            &self.transcript.as_ref().map(|p| p.display().to_string()),
        );
        push("endpoint", &self.endpoint);
        push("model", &self.model);
        out
    }

    fn build(&self, extra: Vec<(&'static str, String)>) -> Result<RunConfig, String> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            config.apply_file_text(&text).map_err(|e| e.to_string())?;
        }
        for (k, v) in self.pairs().into_iter().chain(extra) {
            config.set(k, &v).map_err(|e| e.to_string())?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            config.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct PreprocessArgs {
    /// Headword list CSV (headword,sublist).
    #[arg(long)]
    wordlist: PathBuf,
    /// Word group CSV to write.
    #[arg(long, default_value = "word_groups.csv")]
    out: PathBuf,
    /// Lexicon to use instead of the bundled one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Second tagger: accept (keep the engine's tags), llm, or a
    /// `headword TAG ...` file.
    #[arg(long, default_value = "accept")]
    secondary: String,
    /// Write the per-headword tag consensus as JSON.
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Call log for the llm tagger.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Word group CSV.
    #[arg(long)]
    wordlist: Option<PathBuf>,
    /// Number of items to produce.
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Save the run's prompts and responses as a transcript.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Item CSV to write.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Call log CSV to write.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Headwords processed concurrently.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Blank timestamps and latencies in the log.
    #[arg(long)]
    no_timestamps: bool,
    /// Print the run summary as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReviewArgs {
    /// Item CSV written by `generate`.
    #[arg(long)]
    items: PathBuf,
    /// Ratings store (JSON Lines); created if missing.
    #[arg(long, default_value = "ratings.jsonl")]
    ratings: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Seed for option order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory of static files for the browser interface.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Inter-rater agreement from a ratings CSV.
    Agreement {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Count error labels by category.
    Tally {
        #[arg(long)]
        labels: PathBuf,
        /// Extra `category,subcategory` lines added to the default vocabulary.
        #[arg(long)]
        vocabulary: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RecordArgs {
    /// Call log CSV written by `generate`.
    #[arg(long)]
    log: PathBuf,
    /// Transcript JSONL to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    transcript: PathBuf,
    /// stem, judgment, stem_check or tagging.
    #[arg(long)]
    tag: RequestTag,
    /// File holding the prompt; stdin if omitted.
    #[arg(long)]
    prompt: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    // usage errors are configuration errors; clap's own code 2 would read as a partial run
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Preprocess(args) => run_preprocess(args),
        Command::Generate(args) => run_generate(args),
        Command::Review(args) => run_review(args),
        Command::Eval(cmd) => run_eval(cmd),
        Command::Record(args) => run_record(args),
        Command::Replay(args) => run_replay(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            log::error!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn source_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "wordlist".into())
}

fn run_preprocess(args: PreprocessArgs) -> Outcome {
    let entries = read_headword_list(&args.wordlist).map_err(Failure::config)?;
    let morphology = match &args.lexicon {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(Failure::config)?;
            Morphology::from_lexicon_str(&text).map_err(Failure::config)?
        }
        None => Morphology::bundled(),
    };
    let label = source_label(&args.wordlist);
    let sink = Arc::new(MemorySink::new());
    let gateway;
    let fixture;
    let secondary: &dyn SecondaryTagger = match args.secondary.as_str() {
        "accept" => &AcceptAll,
        "llm" => {
            let config = args.run.build(Vec::new()).map_err(Failure::config)?;
            let transport = build_transport(&config).map_err(Failure::config)?;
            gateway = Gateway::new(transport, sink.clone());
            &LlmTagger { gateway: &gateway }
        }
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read tag file {path}: {e}")))?;
            fixture = FixtureTagger::parse(&text).map_err(Failure::config)?;
            &fixture
        }
    };
    let result = preprocess(&entries, &morphology, secondary, &label).map_err(Failure::config)?;
    write_word_groups_to_path(&result.groups, &args.out).map_err(Failure::config)?;
    if let Some(path) = &args.audit {
        let audit = serde_json::json!({
            "consensus": result.reports,
            "skipped": result.skipped,
        });
        fs::write(
            path,
            serde_json::to_string_pretty(&audit).expect("audit serializes"),
        )
        .map_err(Failure::config)?;
    }
    if let Some(path) = &args.log {
        let file = File::create(path).map_err(Failure::config)?;
        write_log_csv(&sink.records(), BufWriter::new(file), false).map_err(Failure::config)?;
    }
    log::info!(
        "wrote {} word groups to {} ({} skipped)",
        result.groups.len(),
        args.out.display(),
        result.skipped.len()
    );
    Ok(if result.skipped.is_empty() {
        0
    } else {
        EXIT_PARTIAL
    })
}

fn run_generate(args: GenerateArgs) -> Outcome {
    let mut extra: Vec<(&'static str, String)> = Vec::new();
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    for (key, value) in [
        ("wordlist", path(&args.wordlist)),
        ("threshold", args.threshold.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("record", path(&args.record)),
        ("output", path(&args.output)),
        ("log", path(&args.log)),
        ("parallelism", args.parallelism.map(|v| v.to_string())),
        (
            "no_timestamps",
            args.no_timestamps.then(|| "true".to_string()),
        ),
    ] {
        if let Some(v) = value {
            extra.push((key, v));
        }
    }
    let config = args.run.build(extra).map_err(Failure::config)?;
    let summary = run_pipeline(&config).map_err(Failure::config)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
    }
    if let Some(failure) = &summary.transport_failure {
        log::error!("run stopped: {failure}");
    }
    for s in &summary.shortfalls {
        log::warn!(
            "item {} ({}) has {} empty distractor slot(s)",
            s.item_id,
            s.headword,
            s.missing
        );
    }
    for e in &summary.exhausted {
        log::warn!(
            "no item for `{}` after {} attempts: {}",
            e.headword,
            e.attempts,
            e.reasons.join("; ")
        );
    }
    log::info!(
        "wrote {} of {} items ({} distractors, {} model calls) to {}",
        summary.items_written,
        summary.threshold,
        summary.distractors_written,
        summary.llm_calls,
        config.output_path.display()
    );
    Ok(summary.exit_code() as u8)
}

fn run_review(args: ReviewArgs) -> Outcome {
    serve_blocking(ReviewConfig {
        output_csv: args.items,
        ratings_path: args.ratings,
        bind: args.bind,
        seed: args.seed,
        static_dir: args.static_dir,
    })
    .map_err(Failure::config)?;
    Ok(0)
}

fn run_eval(cmd: EvalCommand) -> Outcome {
    match cmd {
        EvalCommand::Agreement { ratings, json } => {
            let file = File::open(&ratings).map_err(Failure::config)?;
            let records = read_ratings_csv(file).map_err(Failure::config)?;
            let report = agreement_from_ratings(&records).map_err(Failure::config)?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
        }
        EvalCommand::Tally { labels, vocabulary } => {
            let mut vocab = Vocabulary::default();
            if let Some(path) = vocabulary {
                let text = fs::read_to_string(path).map_err(Failure::config)?;
                vocab.extend_from_str(&text).map_err(Failure::config)?;
            }
            let file = File::open(&labels).map_err(Failure::config)?;
            let labels = read_labels_csv(file).map_err(Failure::config)?;
            print!(
                "{}",
                tally(&labels, &vocab).map_err(Failure::config)?.to_text()
            );
        }
    }
    Ok(0)
}

fn run_record(args: RecordArgs) -> Outcome {
    let file = File::open(&args.log).map_err(Failure::config)?;
    let store = transcript_from_log_csv(file).map_err(Failure::config)?;
    store.save(&args.out).map_err(Failure::config)?;
    log::info!(
        "wrote {} transcript entries to {}",
        store.len(),
        args.out.display()
    );
    Ok(0)
}

fn run_replay(args: ReplayArgs) -> Outcome {
    let store = TranscriptStore::load(&args.transcript).map_err(Failure::config)?;
    let prompt = match &args.prompt {
        Some(path) => fs::read_to_string(path).map_err(Failure::config)?,
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(Failure::config)?;
            s
        }
    };
    match store.lookup(args.tag, &prompt) {
        Some(entry) => {
            let mut out = io::stdout().lock();
            writeln!(out, "{}", entry.response).map_err(Failure::config)?;
            Ok(0)
        }
        None => Err(Failure {
            code: EXIT_TRANSPORT,
            message: format!("no {} response recorded for this prompt", args.tag),
        }),
    }
}
