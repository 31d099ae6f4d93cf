//! Transcript store and the record/replay transports built on it.
//!
//! Transcript files are JSON Lines, one `{request_tag, prompt, response}`
//! object per line. Lookups are exact matches on the request tag plus the
//! normalized prompt (CRLF folded to LF, trailing whitespace trimmed per
//! line). When a prompt is stored twice the later entry wins.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionRequest, RequestTag, Transport, TransportError};

pub fn normalize_prompt(prompt: &str) -> String {
    prompt
        .replace("\r\n", "\n")
        .split('\n')
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Hex SHA-256 of the normalized prompt.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(normalize_prompt(prompt).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_tag: RequestTag,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("transcript line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("log line {line}: {message}")]
    Log { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TranscriptStore {
    entries: Vec<TranscriptEntry>,
    index: HashMap<(RequestTag, String), usize>,
}

impl TranscriptStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: TranscriptEntry) {
        let key = (entry.request_tag, prompt_hash(&entry.prompt));
        match self.index.get(&key) {
            Some(&i) => self.entries[i] = entry,
            None => {
                self.index.insert(key, self.entries.len());
                self.entries.push(entry);
            }
        }
    }

    pub fn lookup(&self, tag: RequestTag, prompt: &str) -> Option<&TranscriptEntry> {
        self.index
            .get(&(tag, prompt_hash(prompt)))
            .map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_jsonl<R: BufRead>(input: R) -> Result<Self, TranscriptError> {
        let mut store = Self::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|source| TranscriptError::Parse {
                line: idx + 1,
                source,
            })?;
            store.insert(entry);
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        Self::from_jsonl(BufReader::new(File::open(path)?))
    }

    pub fn write_jsonl<W: Write>(&self, mut output: W) -> io::Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut output, entry)?;
            output.write_all(b"\n")?;
        }
        output.flush()
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        self.write_jsonl(BufWriter::new(File::create(path)?))
    }
}

/// Builds a store from the successful exchanges in a log CSV.
pub fn transcript_from_log_csv<R: io::Read>(input: R) -> Result<TranscriptStore, TranscriptError> {
    #[derive(Deserialize)]
    struct Row {
        request_tag: String,
        prompt: String,
        raw_response: String,
        status: String,
    }
    let mut store = TranscriptStore::new();
    let mut rdr = csv::Reader::from_reader(input);
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| TranscriptError::Log {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if row.status != "ok" {
            continue;
        }
        let request_tag = row
            .request_tag
            .parse()
            .map_err(|message| TranscriptError::Log { line: 0, message })?;
        store.insert(TranscriptEntry {
            request_tag,
            prompt: row.prompt,
            response: row.raw_response,
        });
    }
    Ok(store)
}

/// Builds a store from the successful exchanges among `records`.
pub fn transcript_from_records(records: &[super::LogRecord]) -> TranscriptStore {
    let mut store = TranscriptStore::new();
    for r in records.iter().filter(|r| r.status == "ok") {
        store.insert(TranscriptEntry {
            request_tag: r.request_tag,
            prompt: r.prompt.clone(),
            response: r.raw_response.clone(),
        });
    }
    store
}

/// Builds a store from `(request, response)` pairs.
pub fn record_transcript<'a, I>(pairs: I) -> TranscriptStore
where
    I: IntoIterator<Item = (&'a CompletionRequest, &'a str)>,
{
    let mut store = TranscriptStore::new();
    for (request, response) in pairs {
        store.insert(TranscriptEntry {
            request_tag: request.request_tag,
            prompt: request.prompt_text.clone(),
            response: response.to_string(),
        });
    }
    store
}

/// Answers from a transcript store; never touches the network.
#[derive(Debug, Clone)]
pub struct ReplayTransport {
    store: Arc<TranscriptStore>,
}

pub fn replay_transport(store: TranscriptStore) -> ReplayTransport {
    ReplayTransport {
        store: Arc::new(store),
    }
}

impl ReplayTransport {
    pub fn store(&self) -> &TranscriptStore {
        &self.store
    }
}

impl Transport for ReplayTransport {
    fn label(&self) -> &'static str {
        "replay"
    }

    fn model(&self) -> &str {
        "replay"
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        self.store
            .lookup(request.request_tag, &request.prompt_text)
            .map(|e| e.response.clone())
            .ok_or_else(|| TransportError::ReplayMiss {
                request_tag: request.request_tag,
                prompt_hash: prompt_hash(&request.prompt_text),
            })
    }
}

/// Wraps another transport and records every successful exchange.
pub struct RecordingTransport<T> {
    inner: T,
    recorded: Mutex<TranscriptStore>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            recorded: Mutex::new(TranscriptStore::new()),
        }
    }

    pub fn transcript(&self) -> TranscriptStore {
        self.recorded.lock().expect("recorder poisoned").clone()
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn label(&self) -> &'static str {
        self.inner.label()
    }

    fn model(&self) -> &str {
        self.inner.model()
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, TransportError> {
        let response = self.inner.send(request)?;
        self.recorded
            .lock()
            .expect("recorder poisoned")
            .insert(TranscriptEntry {
                request_tag: request.request_tag,
                prompt: request.prompt_text.clone(),
                response: response.clone(),
            });
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(tag: RequestTag, prompt: &str) -> CompletionRequest {
        CompletionRequest::new(tag, prompt).unwrap()
    }

    #[test]
    fn log_csv_round_trip() {
        use chrono::DateTime;
        let rec = |prompt: &str, response: &str, status: &str| super::super::LogRecord {
            timestamp: DateTime::from_timestamp(0, 0).unwrap(),
            request_tag: RequestTag::Judgment,
            model: "m".into(),
            prompt: prompt.into(),
            raw_response: response.into(),
            status: status.into(),
            latency_ms: 1,
        };
        let records = vec![
            rec("p1\nwith, comma", "{\"a\": 1}", "ok"),
            rec("p2", "", "timeout"),
        ];
        let mut csv = Vec::new();
        super::super::write_log_csv(&records, &mut csv, true).unwrap();
        let store = transcript_from_log_csv(csv.as_slice()).unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store, transcript_from_records(&records));
        let entry = store
            .lookup(RequestTag::Judgment, "p1\nwith, comma")
            .unwrap();
        assert_eq!(entry.response, "{\"a\": 1}");
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_prompt("a  \r\nb\t\n"), "a\nb\n");
        assert_eq!(prompt_hash("x \r\ny"), prompt_hash("x\ny"));
        assert_ne!(prompt_hash("x y"), prompt_hash("xy"));
    }

    #[test]
    fn empty_store_misses() {
        let t = replay_transport(TranscriptStore::new());
        assert!(matches!(
            t.send(&req(RequestTag::Stem, "anything")),
            Err(TransportError::ReplayMiss { .. })
        ));
    }

    #[test]
    fn tag_is_part_of_the_key() {
        let r = req(RequestTag::Stem, "p");
        let t = replay_transport(record_transcript([(&r, "resp")]));
        assert_eq!(t.send(&r).unwrap(), "resp");
        assert!(t.send(&req(RequestTag::Judgment, "p")).is_err());
    }

    #[test]
    fn duplicate_prompt_last_write_wins() {
        let r = req(RequestTag::Stem, "p");
        let store = record_transcript([(&r, "first"), (&r, "second")]);
        assert_eq!(store.len(), 1);
        assert_eq!(replay_transport(store).send(&r).unwrap(), "second");
    }

    #[test]
    fn crlf_prompt_matches_lf_recording() {
        let r = req(RequestTag::Stem, "line one\nline two");
        let t = replay_transport(record_transcript([(&r, "x")]));
        assert_eq!(
            t.send(&req(RequestTag::Stem, "line one  \r\nline two"))
                .unwrap(),
            "x"
        );
    }

    #[test]
    fn jsonl_round_trip() {
        let r1 = req(RequestTag::Stem, "a \"quoted\"\nprompt");
        let r2 = req(RequestTag::Judgment, "b");
        let store = record_transcript([(&r1, "one"), (&r2, "{\"x\": 1}")]);
        let mut buf = Vec::new();
        store.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"request_tag\":\"stem\",\"prompt\":"));
        let back = TranscriptStore::from_jsonl(&buf[..]).unwrap();
        assert_eq!(back.entries(), store.entries());
    }

    #[test]
    fn bad_jsonl_reports_line() {
        let err = TranscriptStore::from_jsonl("\n{\"bad\":1}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TranscriptError::Parse { line: 2, .. }));
    }

    #[test]
    fn recorder_captures_exchanges() {
        let r = req(RequestTag::Stem, "p");
        let inner = replay_transport(record_transcript([(&r, "resp")]));
        let rec = RecordingTransport::new(inner);
        rec.send(&r).unwrap();
        assert!(rec.send(&req(RequestTag::Stem, "missing")).is_err());
        assert_eq!(rec.transcript().len(), 1);
    }
}
