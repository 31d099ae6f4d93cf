//! Line-oriented lexicon format.
//!
//! ```text
//! # headword<TAB>classes<TAB>attributes
//! analyse     V
//! data        N       uncountable
//! occur       V       double
//! undergo     V       past=underwent participle=undergone
//! ```
//!
//! Classes are `N`, `V`, `A`, `R`. Attributes are whitespace separated flags
//! (`uncountable`, `double`, `graded`) or `key=value` overrides (`plural`,
//! `third`, `past`, `participle`, `gerund`, `comparative`, `superlative`).
//! Columns are separated by tabs or runs of spaces.

use std::collections::{BTreeMap, BTreeSet};

use super::tag::WordClass;
use super::MorphologyError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LexiconEntry {
    pub headword: String,
    pub classes: BTreeSet<WordClass>,
    pub countable: bool,
    pub doubles_final: bool,
    pub graded: bool,
    pub overrides: BTreeMap<String, String>,
}

const OVERRIDE_KEYS: [&str; 7] = [
    "plural",
    "third",
    "past",
    "participle",
    "gerund",
    "comparative",
    "superlative",
];

fn lexicon_error(line: usize, message: impl Into<String>) -> MorphologyError {
    MorphologyError::Lexicon {
        line,
        message: message.into(),
    }
}

pub fn parse_lexicon(text: &str) -> Result<BTreeMap<String, LexiconEntry>, MorphologyError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let headword = fields
            .next()
            .ok_or_else(|| lexicon_error(line_no, "missing headword"))?
            .to_string();
        if headword.chars().any(|c| c.is_uppercase()) {
            return Err(lexicon_error(
                line_no,
                format!("headword `{headword}` must be lowercase"),
            ));
        }
        let mut entry = LexiconEntry {
            headword: headword.clone(),
            countable: true,
            ..Default::default()
        };
        for field in fields {
            if let Some(class) = WordClass::from_code(field) {
                entry.classes.insert(class);
                continue;
            }
            match field {
                "uncountable" => entry.countable = false,
                "double" => entry.doubles_final = true,
                "graded" => entry.graded = true,
                _ => {
                    let (key, value) = field.split_once('=').ok_or_else(|| {
                        lexicon_error(line_no, format!("unrecognized field `{field}`"))
                    })?;
                    if !OVERRIDE_KEYS.contains(&key) || value.is_empty() {
                        return Err(lexicon_error(line_no, format!("bad override `{field}`")));
                    }
                    entry.overrides.insert(key.to_string(), value.to_string());
                }
            }
        }
        if entry.classes.is_empty() {
            return Err(lexicon_error(
                line_no,
                format!("`{headword}` has no word class"),
            ));
        }
        if entries.insert(headword.clone(), entry).is_some() {
            return Err(lexicon_error(
                line_no,
                format!("duplicate headword `{headword}`"),
            ));
        }
    }
    Ok(entries)
}
