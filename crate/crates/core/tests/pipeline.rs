use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use clozegen::gateway::{
    replay_transport, CompletionRequest, RequestTag, TranscriptStore, Transport, TransportError,
};
use clozegen::morphology::{AcceptAll, Morphology};
use clozegen::pipeline::{
    generate_items, read_output_csv_from_path, run_pipeline, run_with_transport, RunConfig,
    TransportKind, MISSING_SLOT,
};
use clozegen::stem::BLANK;
use clozegen::wordlist::{read_headword_list, write_word_groups_to_path, WordGroupSet};
use clozegen::{Gateway, PosTag};
use tempfile::TempDir;

/// Stand-in model: writes a fixed frame sentence around the requested word
/// and judges candidates by word length.
struct Synthetic {
    calls: AtomicUsize,
    fail_after: Option<usize>,
}

impl Synthetic {
    fn new() -> Self {
        Synthetic {
            calls: AtomicUsize::new(0),
            fail_after: None,
        }
    }
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> &'a str {
    let from = text.find(start).unwrap() + start.len();
    let to = from + text[from..].find(end).unwrap();
    &text[from..to]
}

impl Transport for Synthetic {
    fn label(&self) -> &'static str {
        "live"
    }

    fn model(&self) -> &str {
        "synthetic"
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if self.fail_after.is_some_and(|limit| n >= limit) {
            return Err(TransportError::Http {
                status: 401,
                body: "unauthorized".into(),
            });
        }
        let p = &request.prompt_text;
        Ok(match request.request_tag {
            RequestTag::Stem => {
                let word = between(p, "with the word \"", "\"");
                if word == "context" {
                    format!("`{word}` first, then context again.")
                } else {
                    format!("Many people said the `{word}` was clear to them.")
                }
            }
            RequestTag::Judgment => {
                let words = between(p, "Words: ```", "```");
                let body: Vec<String> = words
                    .split(", ")
                    .map(|w| {
                        format!(
                            "\"{w}\": {{\"syntax\": {}, \"semantics\": {}}}",
                            w.len() % 3 != 0,
                            w.len() % 2 == 0
                        )
                    })
                    .collect();
                format!("{{{}}}", body.join(", "))
            }
            _ => "{}".into(),
        })
    }
}

fn awl_groups() -> WordGroupSet {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/awl_sublist1.csv");
    let morph = Morphology::bundled();
    let groups = read_headword_list(&path)
        .unwrap()
        .iter()
        .map(|e| morph.build_word_group(e, &AcceptAll).unwrap())
        .collect();
    WordGroupSet::new(groups, "awl").unwrap()
}

fn config(dir: &TempDir, tag: &str) -> RunConfig {
    RunConfig {
        seed: 7,
        output_path: dir.path().join(format!("items_{tag}.csv")),
        log_path: dir.path().join(format!("log_{tag}.csv")),
        no_timestamps: true,
        ..Default::default()
    }
}

#[test]
fn full_run_is_deterministic_across_parallelism() {
    let dir = TempDir::new().unwrap();
    let groups = awl_groups();
    let mut outputs = Vec::new();
    for parallelism in [1, 4, 16] {
        let mut c = config(&dir, &parallelism.to_string());
        c.parallelism = parallelism;
        let summary = run_with_transport(&c, &groups, Arc::new(Synthetic::new())).unwrap();
        outputs.push((
            fs::read(&c.output_path).unwrap(),
            fs::read(&c.log_path).unwrap(),
            summary.llm_calls,
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let c = config(&dir, "1");
    let rows = read_output_csv_from_path(&c.output_path).unwrap();
    // "context" can never pass validation, so the run falls one short of 60
    assert_eq!(rows.len(), 59);
    let heads: std::collections::BTreeSet<&str> =
        rows.iter().map(|r| r.headword.as_str()).collect();
    assert_eq!(heads.len(), 59);
    assert!(!heads.contains("context"));
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.item_id as usize, i + 1);
        assert_eq!(row.stem.matches(BLANK).count(), 1);
        assert!(!row.stem.contains(&row.key));
    }
    let log = fs::read_to_string(&c.log_path).unwrap();
    let mut rdr = csv::Reader::from_reader(log.as_bytes());
    assert_eq!(rdr.records().count(), outputs[0].2);
}

#[test]
fn exhausted_headword_and_partial_exit() {
    let dir = TempDir::new().unwrap();
    let groups = awl_groups();
    let c = config(&dir, "x");
    let summary = run_with_transport(&c, &groups, Arc::new(Synthetic::new())).unwrap();
    assert_eq!(summary.items_written, 59);
    assert_eq!(summary.exhausted.len(), 1);
    let failure = &summary.exhausted[0];
    assert_eq!(failure.headword, "context");
    assert_eq!(failure.attempts, 3);
    assert!(failure
        .reasons
        .iter()
        .all(|r| r.contains("KEY_AT_START") && r.contains("KEY_DUPLICATED")));
    assert_eq!(summary.stem_retries, 2);
    assert_eq!(summary.exit_code(), 2);
    let na = fs::read_to_string(&c.output_path)
        .unwrap()
        .matches(MISSING_SLOT)
        .count();
    let missing: usize = summary.shortfalls.iter().map(|s| s.missing).sum();
    assert_eq!(na, missing);
    assert_eq!(
        summary.distractors_written + missing,
        3 * summary.items_written
    );
}

#[test]
fn threshold_stops_early() {
    let dir = TempDir::new().unwrap();
    let mut c = config(&dir, "t");
    c.item_threshold = 5;
    c.parallelism = 3;
    let summary = run_with_transport(&c, &awl_groups(), Arc::new(Synthetic::new())).unwrap();
    assert_eq!(summary.items_written, 5);
    let rows = read_output_csv_from_path(&c.output_path).unwrap();
    let heads: Vec<&str> = rows.iter().map(|r| r.headword.as_str()).collect();
    assert_eq!(heads, ["analyse", "approach", "area", "assess", "assume"]);
}

#[test]
fn record_then_replay_reproduces_run() {
    let dir = TempDir::new().unwrap();
    let groups = awl_groups();
    let mut live = config(&dir, "live");
    live.record_path = Some(dir.path().join("transcript.jsonl"));
    run_with_transport(&live, &groups, Arc::new(Synthetic::new())).unwrap();

    let groups_path = dir.path().join("groups.csv");
    write_word_groups_to_path(&groups, &groups_path).unwrap();
    let mut replay = config(&dir, "replay");
    replay.wordlist_path = groups_path;
    replay.transport = TransportKind::Replay;
    replay.transcript_path = live.record_path.clone();
    replay.item_threshold = 60;
    let summary = run_pipeline(&replay).unwrap();
    assert_eq!(summary.items_written, 59);
    assert_eq!(
        fs::read(&live.output_path).unwrap(),
        fs::read(&replay.output_path).unwrap()
    );
    let strip_model = |p: &Path| {
        fs::read_to_string(p)
            .unwrap()
            .replace("synthetic", "replay")
    };
    assert_eq!(strip_model(&live.log_path), strip_model(&replay.log_path));
}

#[test]
fn transport_failure_stops_run() {
    let dir = TempDir::new().unwrap();
    let c = config(&dir, "f");
    let transport = Synthetic {
        calls: AtomicUsize::new(0),
        fail_after: Some(5),
    };
    let summary = run_with_transport(&c, &awl_groups(), Arc::new(transport)).unwrap();
    assert_eq!(summary.exit_code(), 3);
    assert!(summary.transport_failure.unwrap().contains("401"));
    assert_eq!(summary.llm_calls, 6);
    assert!(summary.items_written < 3);
}

#[test]
fn replay_miss_is_a_transport_failure() {
    let gateway = Gateway::new(
        Arc::new(replay_transport(TranscriptStore::new())),
        Arc::new(clozegen::gateway::MemorySink::new()),
    );
    let c = RunConfig {
        item_threshold: 1,
        ..Default::default()
    };
    let generation = generate_items(&awl_groups(), &gateway, &c);
    assert!(generation.items.is_empty());
    assert!(generation.fatal.is_some());
    assert_eq!(generation.summary(1, 0).exit_code(), 3);
    assert_eq!(generation.records.len(), 1);
    assert_eq!(generation.records[0].status, "replay_miss");
}

#[test]
fn config_errors() {
    let dir = TempDir::new().unwrap();
    let groups_path = dir.path().join("groups.csv");
    write_word_groups_to_path(&awl_groups(), &groups_path).unwrap();
    let mut c = config(&dir, "c");
    c.wordlist_path = groups_path;
    c.transport = TransportKind::Replay;
    c.transcript_path = Some(dir.path().join("missing.jsonl"));
    c.item_threshold = 0;
    assert!(run_pipeline(&c).is_err());
    c.item_threshold = 61;
    assert!(run_pipeline(&c)
        .unwrap_err()
        .to_string()
        .contains("exceeds"));
    c.item_threshold = 1;
    assert!(run_pipeline(&c).is_err(), "missing transcript file");
}

#[test]
fn distractors_share_key_tag() {
    let dir = TempDir::new().unwrap();
    let c = config(&dir, "tags");
    let groups = awl_groups();
    let gateway = Gateway::new(
        Arc::new(Synthetic::new()),
        Arc::new(clozegen::gateway::MemorySink::new()),
    );
    let generation = generate_items(&groups, &gateway, &c);
    for item in &generation.items {
        let key = item.key();
        let mut heads = std::collections::BTreeSet::new();
        for d in &item.distractors {
            assert_eq!(d.tag, key.tag);
            assert_ne!(d.headword, key.headword);
            assert!(heads.insert(d.headword.clone()));
            assert!(groups
                .get(&d.headword)
                .unwrap()
                .forms(d.tag)
                .unwrap()
                .contains(&d.surface));
        }
        assert!(groups
            .get(&key.headword)
            .unwrap()
            .forms(key.tag)
            .unwrap()
            .contains(&key.surface));
        assert!(PosTag::ALL.contains(&key.tag));
    }
}
