use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distractor::DISTRACTORS_PER_ITEM;
use crate::morphology::PosTag;
use crate::stem::{QuestionStem, TaggedKey, BLANK};

/// Written in place of a distractor that could not be found.
pub const MISSING_SLOT: &str = "N/A";

pub const OUTPUT_HEADER: [&str; 9] = [
    "item_id",
    "headword",
    "sublist",
    "key",
    "key_pos",
    "stem",
    "distractor_1",
    "distractor_2",
    "distractor_3",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionItem {
    pub item_id: u32,
    pub sublist_id: u32,
    pub stem: QuestionStem,
    pub distractors: Vec<TaggedKey>,
    pub attempts_used: usize,
    pub rounds_used: usize,
}

impl QuestionItem {
    pub fn key(&self) -> &TaggedKey {
        &self.stem.key
    }

    pub fn shortfall(&self) -> usize {
        DISTRACTORS_PER_ITEM - self.distractors.len()
    }

    pub fn row(&self) -> OutputRow {
        let mut distractors: [Option<String>; DISTRACTORS_PER_ITEM] = Default::default();
        for (slot, d) in distractors.iter_mut().zip(&self.distractors) {
            *slot = Some(d.surface.clone());
        }
        OutputRow {
            item_id: self.item_id,
            headword: self.key().headword.clone(),
            sublist: self.sublist_id,
            key: self.key().surface.clone(),
            key_pos: self.key().tag,
            stem: self.stem.text_with_blank.clone(),
            distractors,
        }
    }
}

/// One line of the output CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRow {
    pub item_id: u32,
    pub headword: String,
    pub sublist: u32,
    pub key: String,
    pub key_pos: PosTag,
    pub stem: String,
    pub distractors: [Option<String>; DISTRACTORS_PER_ITEM],
}

impl OutputRow {
    pub fn shortfall(&self) -> usize {
        self.distractors.iter().filter(|d| d.is_none()).count()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("output line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_output_csv<W: Write>(rows: &[OutputRow], output: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record(OUTPUT_HEADER)?;
    for row in rows {
        let mut record = vec![
            row.item_id.to_string(),
            row.headword.clone(),
            row.sublist.to_string(),
            row.key.clone(),
            row.key_pos.to_string(),
            row.stem.clone(),
        ];
        record.extend(
            row.distractors
                .iter()
                .map(|d| d.clone().unwrap_or_else(|| MISSING_SLOT.to_string())),
        );
        wtr.write_record(&record)?;
    }
    wtr.flush()
}

pub fn write_output_csv_to_path(rows: &[OutputRow], path: &Path) -> io::Result<()> {
    write_output_csv(rows, BufWriter::new(File::create(path)?))
}

pub fn read_output_csv<R: Read>(input: R) -> Result<Vec<OutputRow>, OutputError> {
    #[derive(Deserialize)]
    struct Raw {
        item_id: u32,
        headword: String,
        sublist: u32,
        key: String,
        key_pos: String,
        stem: String,
        distractor_1: String,
        distractor_2: String,
        distractor_3: String,
    }
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for raw in rdr.deserialize::<Raw>() {
        let raw = raw.map_err(|e| OutputError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rows.len() as u64 + 2;
        let malformed = |message: String| OutputError::Malformed { line, message };
        let key_pos = raw.key_pos.parse().map_err(|e| malformed(format!("{e}")))?;
        if raw.stem.matches(BLANK).count() != 1 {
            return Err(malformed("stem must contain exactly one blank".into()));
        }
        let slot = |s: String| (s != MISSING_SLOT && !s.is_empty()).then_some(s);
        rows.push(OutputRow {
            item_id: raw.item_id,
            headword: raw.headword,
            sublist: raw.sublist,
            key: raw.key,
            key_pos,
            stem: raw.stem,
            distractors: [
                slot(raw.distractor_1),
                slot(raw.distractor_2),
                slot(raw.distractor_3),
            ],
        });
    }
    Ok(rows)
}

pub fn read_output_csv_from_path(path: &Path) -> Result<Vec<OutputRow>, OutputError> {
    read_output_csv(File::open(path)?)
}
