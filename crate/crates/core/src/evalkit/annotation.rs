use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Error categories found when annotating stems and distractors.
const DEFAULT_VOCABULARY: &[(&str, &[&str])] = &[
    ("Mechanical", &["Capitalization"]),
    (
        "Syntax",
        &[
            "Determiner",
            "Noun number",
            "Clause conjunction",
            "POS",
            "Verb transitivity",
            "Article match",
            "Inflection",
        ],
    ),
    ("Semantics", &["Perplexity", "Acceptable answers"]),
    (
        "Key fitness",
        &["Rare use/collocation", "Syntactic unfitness"],
    ),
    ("Others", &["Similar distractors"]),
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("vocabulary line {0}: expected `category,subcategory`")]
    Malformed(usize),
}

/// Allowed (category, subcategory) pairs, in presentation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<(String, String)>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        let mut v = Vocabulary {
            entries: Vec::new(),
        };
        for (category, subs) in DEFAULT_VOCABULARY {
            for sub in *subs {
                v.add(category, sub);
            }
        }
        v
    }
}

impl Vocabulary {
    pub fn empty() -> Self {
        Vocabulary {
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, category: &str, subcategory: &str) {
        if !self.contains(category, subcategory) {
            self.entries
                .push((category.to_string(), subcategory.to_string()));
        }
    }

    pub fn contains(&self, category: &str, subcategory: &str) -> bool {
        self.position(category, subcategory).is_some()
    }

    fn position(&self, category: &str, subcategory: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|(c, s)| c == category && s == subcategory)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Adds the `category,subcategory` lines of `text`; `#` starts a comment.
    pub fn extend_from_str(&mut self, text: &str) -> Result<(), VocabularyError> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (c, s) = line
                .split_once(',')
                .filter(|(c, s)| !c.trim().is_empty() && !s.trim().is_empty())
                .ok_or(VocabularyError::Malformed(idx + 1))?;
            self.add(c.trim(), s.trim());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLabel {
    pub target_id: String,
    pub category: String,
    pub subcategory: String,
}

pub fn read_labels_csv<R: Read>(input: R) -> Result<Vec<AnnotationLabel>, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    rdr.deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TallyRow {
    pub category: String,
    pub subcategory: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub rows: Vec<TallyRow>,
    /// Number of labels; a target with two labels counts twice.
    pub instances: usize,
    /// Number of distinct labeled targets.
    pub targets: usize,
}

impl Tally {
    pub fn count(&self, category: &str, subcategory: &str) -> usize {
        self.rows
            .iter()
            .find(|r| r.category == category && r.subcategory == subcategory)
            .map_or(0, |r| r.count)
    }

    pub fn category_total(&self, category: &str) -> usize {
        self.rows
            .iter()
            .filter(|r| r.category == category)
            .map(|r| r.count)
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let width = self
            .rows
            .iter()
            .map(|r| r.category.len())
            .max()
            .unwrap_or(0)
            .max("Category".len());
        let sub_width = self
            .rows
            .iter()
            .map(|r| r.subcategory.len())
            .max()
            .unwrap_or(0)
            .max("Subcategory".len());
        let _ = writeln!(
            out,
            "{:width$}  {:sub_width$}  Instances",
            "Category", "Subcategory"
        );
        let mut last = "";
        for r in &self.rows {
            let shown = if r.category == last {
                ""
            } else {
                r.category.as_str()
            };
            last = &r.category;
            let _ = writeln!(
                out,
                "{shown:width$}  {:sub_width$}  {}",
                r.subcategory, r.count
            );
        }
        let _ = writeln!(
            out,
            "Total: {} instances over {} targets",
            self.instances, self.targets
        );
        out
    }
}

/// Counts labels per (category, subcategory), rows in vocabulary order.
pub fn tally(labels: &[AnnotationLabel], vocabulary: &Vocabulary) -> Result<Tally, EvalError> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for label in labels {
        let pos = vocabulary
            .position(&label.category, &label.subcategory)
            .ok_or_else(|| EvalError::UnknownCategory {
                category: label.category.clone(),
                subcategory: label.subcategory.clone(),
            })?;
        *counts.entry(pos).or_default() += 1;
    }
    let rows = vocabulary
        .entries()
        .iter()
        .enumerate()
        .filter_map(|(i, (c, s))| {
            counts.get(&i).map(|&count| TallyRow {
                category: c.clone(),
                subcategory: s.clone(),
                count,
            })
        })
        .collect();
    let targets: BTreeSet<&str> = labels.iter().map(|l| l.target_id.as_str()).collect();
    Ok(Tally {
        rows,
        instances: labels.len(),
        targets: targets.len(),
    })
}
