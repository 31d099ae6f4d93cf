//! Generation run: one item per headword, in word-group order, until the
//! item threshold is met.

mod config;
mod output;
mod preprocess;

use std::fs::File;
use std::io::{self, BufWriter};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::distractor::{select_distractors, SelectionError};
use crate::gateway::{
    transcript_from_records, write_log_csv, CompletionRequest, Gateway, GatewayError,
    LiveTransport, LogRecord, MemorySink, RequestTag, TranscriptError, TranscriptStore, Transport,
};
use crate::morphology::WordGroup;
use crate::stem::{
    assess_response, blank_out, build_stem_check_prompt, build_stem_prompt, parse_stem_check,
    pick_key, TaggedKey,
};
use crate::wordlist::{load_word_groups_from_path, WordGroupSet, WordlistError};

pub use self::config::{ConfigError, RunConfig, TransportKind};
pub use self::output::{
    read_output_csv, read_output_csv_from_path, write_output_csv, write_output_csv_to_path,
    OutputError, OutputRow, QuestionItem, MISSING_SLOT, OUTPUT_HEADER,
};
pub use self::preprocess::{
    build_tagging_prompt, parse_tagging_response, preprocess, LlmTagger, Preprocessed,
    SkippedHeadword,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Wordlist(#[from] WordlistError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A headword that yielded no item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeadwordFailure {
    pub headword: String,
    pub key: TaggedKey,
    pub attempts: usize,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub item_id: u32,
    pub headword: String,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub threshold: usize,
    pub items_written: usize,
    pub distractors_written: usize,
    pub llm_calls: usize,
    pub stem_retries: usize,
    pub shortfalls: Vec<Shortfall>,
    pub exhausted: Vec<HeadwordFailure>,
    pub transport_failure: Option<String>,
    pub duration_ms: u64,
}

impl RunSummary {
    /// 0 complete, 2 partial, 3 transport failure.
    pub fn exit_code(&self) -> i32 {
        if self.transport_failure.is_some() {
            3
        } else if !self.shortfalls.is_empty()
            || !self.exhausted.is_empty()
            || self.items_written < self.threshold
        {
            2
        } else {
            0
        }
    }
}

/// Items, failures and the merged call log of a run.
#[derive(Debug, Clone)]
pub struct Generation {
    pub items: Vec<QuestionItem>,
    pub failures: Vec<HeadwordFailure>,
    pub records: Vec<LogRecord>,
    pub stem_retries: usize,
    pub fatal: Option<GatewayError>,
}

impl Generation {
    pub fn rows(&self) -> Vec<OutputRow> {
        self.items.iter().map(QuestionItem::row).collect()
    }

    pub fn summary(&self, threshold: usize, duration_ms: u64) -> RunSummary {
        RunSummary {
            threshold,
            items_written: self.items.len(),
            distractors_written: self.items.iter().map(|i| i.distractors.len()).sum(),
            llm_calls: self.records.len(),
            stem_retries: self.stem_retries,
            shortfalls: self
                .items
                .iter()
                .filter(|i| i.shortfall() > 0)
                .map(|i| Shortfall {
                    item_id: i.item_id,
                    headword: i.key().headword.clone(),
                    missing: i.shortfall(),
                })
                .collect(),
            exhausted: self.failures.clone(),
            transport_failure: self.fatal.as_ref().map(|e| e.to_string()),
            duration_ms,
        }
    }
}

enum Outcome {
    Item(QuestionItem),
    Failed(HeadwordFailure),
}

/// The random stream for the headword at `index`; independent of how many
/// headwords run concurrently.
pub fn headword_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn stem_check_passes(
    gateway: &Gateway,
    sentence: &crate::stem::GeneratedSentence,
    key: &TaggedKey,
) -> Result<Option<String>, GatewayError> {
    let request = CompletionRequest::new(
        RequestTag::StemCheck,
        build_stem_check_prompt(sentence, key),
    )
    .expect("stem check prompt is never empty");
    let response = gateway.complete(&request)?;
    Ok(match parse_stem_check(&response.raw_text) {
        Ok(v) if v.key_present && v.pos_ok => None,
        Ok(v) => Some(format!(
            "STEM_CHECK(key_present={}, pos_ok={})",
            v.key_present, v.pos_ok
        )),
        Err(e) => Some(format!("STEM_CHECK({e})")),
    })
}

fn process_headword(
    index: usize,
    group: &WordGroup,
    groups: &WordGroupSet,
    gateway: &Gateway,
    config: &RunConfig,
) -> Result<Outcome, GatewayError> {
    let mut rng = headword_rng(config.seed, index);
    let key = pick_key(group, &mut rng);
    let prompt = build_stem_prompt(&key, &config.stem_constraints);
    let request = CompletionRequest::with_params(
        RequestTag::Stem,
        prompt,
        config.stem_temperature,
        crate::gateway::DEFAULT_MAX_OUTPUT_TOKENS,
    )
    .expect("validated stem request");
    let mut reasons = Vec::new();
    for attempt in 1..=config.stem_attempts {
        let response = gateway.complete(&request)?;
        let (sentence, report) =
            assess_response(&response.raw_text, &key, group, &config.stem_constraints);
        let sentence = match sentence {
            Some(s) if report.passed() => s,
            _ => {
                log::info!(
                    "{}: stem attempt {attempt} rejected: {}",
                    key,
                    report.summary()
                );
                reasons.push(report.summary());
                continue;
            }
        };
        if config.stem_check {
            if let Some(reason) = stem_check_passes(gateway, &sentence, &key)? {
                reasons.push(reason);
                continue;
            }
        }
        let stem = blank_out(&sentence, &key);
        let set = match select_distractors(&stem, groups, gateway, &mut rng, &config.selection) {
            Ok(set) => set,
            Err(SelectionError::Gateway(e)) => return Err(e),
            Err(e) => {
                reasons.push(e.to_string());
                return Ok(Outcome::Failed(HeadwordFailure {
                    headword: group.headword().to_string(),
                    key,
                    attempts: attempt,
                    reasons,
                }));
            }
        };
        return Ok(Outcome::Item(QuestionItem {
            item_id: 0,
            sublist_id: group.sublist_id(),
            stem,
            distractors: set.distractors,
            attempts_used: attempt,
            rounds_used: set.rounds_used,
        }));
    }
    Ok(Outcome::Failed(HeadwordFailure {
        headword: group.headword().to_string(),
        key,
        attempts: config.stem_attempts,
        reasons,
    }))
}

/// Generates items headword by headword until `item_threshold` is reached or
/// the groups run out. Up to `parallelism` headwords run at once; results and
/// log records are merged in word-group order, so the output does not depend
/// on scheduling.
pub fn generate_items(groups: &WordGroupSet, gateway: &Gateway, config: &RunConfig) -> Generation {
    let mut generation = Generation {
        items: Vec::new(),
        failures: Vec::new(),
        records: Vec::new(),
        stem_retries: 0,
        fatal: None,
    };
    let all = groups.groups();
    let mut next = 0;
    while generation.items.len() < config.item_threshold
        && next < all.len()
        && generation.fatal.is_none()
    {
        let width = (config.item_threshold - generation.items.len())
            .min(config.parallelism.max(1))
            .min(all.len() - next);
        let chunk = next..next + width;
        next += width;
        let results: Vec<(Vec<LogRecord>, Result<Outcome, GatewayError>)> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .map(|index| {
                        scope.spawn(move || {
                            let sink = Arc::new(MemorySink::new());
                            let local = gateway.with_sink(sink.clone());
                            let outcome =
                                process_headword(index, &all[index], groups, &local, config);
                            (sink.take(), outcome)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("headword worker panicked"))
                    .collect()
            });
        for (records, outcome) in results {
            generation.records.extend(records);
            match outcome {
                Ok(Outcome::Item(mut item)) => {
                    generation.stem_retries += item.attempts_used - 1;
                    item.item_id = generation.items.len() as u32 + 1;
                    generation.items.push(item);
                }
                Ok(Outcome::Failed(failure)) => {
                    log::warn!(
                        "{}: no item ({})",
                        failure.headword,
                        failure.reasons.join("; ")
                    );
                    generation.stem_retries += failure.attempts.saturating_sub(1);
                    generation.failures.push(failure);
                }
                Err(e) => {
                    log::error!("transport failure: {e}");
                    generation.fatal.get_or_insert(e);
                }
            }
        }
    }
    generation
}

/// The transport `config` selects: a replay of its transcript, or the live service.
pub fn build_transport(config: &RunConfig) -> Result<Arc<dyn Transport>, PipelineError> {
    Ok(match config.transport {
        TransportKind::Replay => {
            let path = config
                .transcript_path
                .as_ref()
                .ok_or_else(|| ConfigError("replay transport needs a transcript file".into()))?;
            Arc::new(crate::gateway::replay_transport(TranscriptStore::load(
                path,
            )?))
        }
        TransportKind::Live => Arc::new(
            LiveTransport::new(config.live.clone()).map_err(|e| ConfigError(e.to_string()))?,
        ),
    })
}

/// Loads word groups, runs generation, and writes the output CSV, the log
/// CSV and, if requested, a transcript of the run.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let groups = load_word_groups_from_path(&config.wordlist_path)?;
    if config.item_threshold > groups.len() {
        return Err(ConfigError(format!(
            "threshold {} exceeds the {} word groups available",
            config.item_threshold,
            groups.len()
        ))
        .into());
    }
    run_with_transport(config, &groups, build_transport(config)?)
}

/// [`run_pipeline`] with already-loaded groups and a caller-supplied transport.
pub fn run_with_transport(
    config: &RunConfig,
    groups: &WordGroupSet,
    transport: Arc<dyn Transport>,
) -> Result<RunSummary, PipelineError> {
    let started = Instant::now();
    let gateway =
        Gateway::new(transport, Arc::new(MemorySink::new())).with_max_in_flight(config.parallelism);
    let generation = generate_items(groups, &gateway, config);
    write_output_csv_to_path(&generation.rows(), &config.output_path)?;
    write_log_csv(
        &generation.records,
        BufWriter::new(File::create(&config.log_path)?),
        config.no_timestamps,
    )?;
    if let Some(path) = &config.record_path {
        transcript_from_records(&generation.records).save(path)?;
    }
    Ok(generation.summary(config.item_threshold, started.elapsed().as_millis() as u64))
}
