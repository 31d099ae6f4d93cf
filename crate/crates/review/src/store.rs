use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use clozegen::evalkit::ReviewRecord;
use serde::{Deserialize, Serialize};

/// One persisted verdict; the file holds one per line, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredRating {
    #[serde(flatten)]
    pub record: ReviewRecord,
    pub recorded_at: DateTime<Utc>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("ratings store line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Append-only JSON Lines store. Later lines for the same (reviewer,
/// target) supersede earlier ones.
#[derive(Debug)]
pub struct RatingsStore {
    path: PathBuf,
    file: Mutex<File>,
    ratings: RwLock<Vec<StoredRating>>,
}

impl RatingsStore {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let mut ratings = Vec::new();
        if path.exists() {
            for (idx, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rating: StoredRating =
                    serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                        line: idx + 1,
                        message: e.to_string(),
                    })?;
                ratings.push(rating);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RatingsStore {
            path: path.to_path_buf(),
            file: Mutex::new(file),
            ratings: RwLock::new(ratings),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes and syncs the rating before it becomes visible.
    pub fn append(&self, record: ReviewRecord) -> Result<StoredRating, StoreError> {
        let stored = StoredRating {
            record,
            recorded_at: Utc::now(),
        };
        let mut line = serde_json::to_string(&stored).expect("rating serializes");
        line.push('\n');
        let mut file = self.file.lock().expect("store poisoned");
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        self.ratings
            .write()
            .expect("store poisoned")
            .push(stored.clone());
        Ok(stored)
    }

    pub fn all(&self) -> Vec<StoredRating> {
        self.ratings.read().expect("store poisoned").clone()
    }

    /// Current verdicts: one per (reviewer, target), the latest, in the
    /// order each pair was first rated.
    pub fn current(&self) -> Vec<ReviewRecord> {
        let ratings = self.ratings.read().expect("store poisoned");
        let mut out: Vec<ReviewRecord> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for r in ratings.iter() {
            let key = (r.record.reviewer_id.clone(), r.record.target_id);
            match index.get(&key) {
                Some(&i) => out[i] = r.record.clone(),
                None => {
                    index.insert(key, out.len());
                    out.push(r.record.clone());
                }
            }
        }
        out
    }

    pub fn for_reviewer(&self, reviewer_id: &str) -> Vec<ReviewRecord> {
        self.current()
            .into_iter()
            .filter(|r| r.reviewer_id == reviewer_id)
            .collect()
    }
}
