use std::io::{self, Write};
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};

use super::RequestTag;

pub const LOG_HEADER: [&str; 7] = [
    "timestamp",
    "request_tag",
    "model",
    "prompt",
    "raw_response",
    "status",
    "latency_ms",
];

/// One gateway exchange, successful or not.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub timestamp: DateTime<Utc>,
    pub request_tag: RequestTag,
    pub model: String,
    pub prompt: String,
    pub raw_response: String,
    pub status: String,
    pub latency_ms: u64,
}

pub trait LogSink: Send + Sync {
    fn append(&self, record: LogRecord);
}

/// In-memory sink; appends are serialized by a mutex.
#[derive(Debug, Default)]
pub struct MemorySink {
    records: Mutex<Vec<LogRecord>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> Vec<LogRecord> {
        self.records.lock().expect("log sink poisoned").clone()
    }

    pub fn take(&self) -> Vec<LogRecord> {
        std::mem::take(&mut *self.records.lock().expect("log sink poisoned"))
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("log sink poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl LogSink for MemorySink {
    fn append(&self, record: LogRecord) {
        self.records.lock().expect("log sink poisoned").push(record);
    }
}

/// Writes the log CSV. With `mask_volatile`, the timestamp and latency
/// columns are left empty so that replayed runs diff cleanly.
pub fn write_log_csv<W: Write>(
    records: &[LogRecord],
    output: W,
    mask_volatile: bool,
) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record(LOG_HEADER)?;
    for r in records {
        let (timestamp, latency) = if mask_volatile {
            (String::new(), String::new())
        } else {
            (
                r.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true),
                r.latency_ms.to_string(),
            )
        };
        wtr.write_record([
            timestamp.as_str(),
            r.request_tag.as_str(),
            &r.model,
            &r.prompt,
            &r.raw_response,
            &r.status,
            &latency,
        ])?;
    }
    wtr.flush()
}
