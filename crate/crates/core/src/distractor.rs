//! Distractor selection: same-POS candidate pools from other word groups,
//! batched syntax/semantics judgment, and seeded choice of three.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gateway::{
    extract_json, CompletionRequest, Gateway, GatewayError, JsonError, RequestError, RequestTag,
};
use crate::stem::{QuestionStem, TaggedKey};
use crate::wordlist::WordGroupSet;

const JUDGMENT_TEMPLATE: &str = include_str!("../resources/judgment_prompt.v1.txt");
const SENTENCE_JUDGMENT_TEMPLATE: &str =
    include_str!("../resources/sentence_judgment_prompt.v1.txt");

pub const JUDGMENT_TEMPLATE_VERSION: &str = "judgment_prompt.v1";
pub const DISTRACTORS_PER_ITEM: usize = 3;
pub const DEFAULT_POOL_SIZE: usize = 10;
pub const DEFAULT_MAX_ROUNDS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePool {
    pub key: TaggedKey,
    pub candidates: Vec<TaggedKey>,
    /// Set when every eligible candidate was taken.
    pub exhausted: bool,
}

impl CandidatePool {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.surface.as_str()).collect()
    }
}

/// Draws up to `size` candidates with the key's tag, at most one per word
/// group. The key's own group, and any group owning a surface in
/// `already_tried`, is skipped. Candidates keep word-group order.
pub fn draw_pool<R: Rng + ?Sized>(
    key: &TaggedKey,
    groups: &WordGroupSet,
    size: usize,
    rng: &mut R,
    already_tried: &BTreeSet<String>,
) -> CandidatePool {
    let key_surface = key.surface.to_lowercase();
    let eligible: Vec<(&str, Vec<&String>)> = groups
        .iter()
        .filter(|g| g.headword() != key.headword)
        .filter(|g| !g.contains_form(&key_surface))
        .filter(|g| !already_tried.iter().any(|s| g.contains_form(s)))
        .filter_map(|g| {
            let forms: Vec<&String> = g.forms(key.tag)?.iter().collect();
            Some((g.headword(), forms))
        })
        .collect();

    let take = size.min(eligible.len());
    let mut picked = index::sample(rng, eligible.len(), take).into_vec();
    picked.sort_unstable();
    let candidates = picked
        .into_iter()
        .map(|i| {
            let (headword, forms) = &eligible[i];
            let surface = forms.choose(rng).expect("form sets are never empty");
            TaggedKey::new(surface.as_str(), key.tag, *headword)
        })
        .collect();
    CandidatePool {
        key: key.clone(),
        candidates,
        exhausted: eligible.len() <= size,
    }
}

pub fn build_judgment_prompt(stem: &QuestionStem, pool: &CandidatePool) -> String {
    JUDGMENT_TEMPLATE
        .replace("{words}", &pool.words().join(", "))
        .replace("{stem}", &stem.text_with_blank)
}

/// Variant that shows the model each candidate already inserted in the stem.
pub fn build_sentence_judgment_prompt(stem: &QuestionStem, pool: &CandidatePool) -> String {
    let lines: Vec<String> = pool
        .candidates
        .iter()
        .map(|c| format!("{}: {}", c.surface, stem.fill(&c.surface)))
        .collect();
    SENTENCE_JUDGMENT_TEMPLATE.replace("{sentences}", &lines.join("\n"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentVerdict {
    pub word: String,
    pub syntax_ok: bool,
    pub semantics_ok: bool,
}

impl JudgmentVerdict {
    /// Grammatical in the blank but wrong in meaning.
    pub fn is_good(&self) -> bool {
        self.syntax_ok && !self.semantics_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerdictError {
    #[error(transparent)]
    Json(#[from] JsonError),
    #[error("judgment response is not a JSON object keyed by word")]
    NotAnObject,
    #[error("no verdict for `{0}`")]
    MissingVerdict(String),
    #[error("field `{field}` for `{word}` is not a boolean")]
    NonBooleanField { word: String, field: String },
}

fn bool_field(entry: &Value, word: &str, field: &str) -> Result<bool, VerdictError> {
    entry
        .get(field)
        .and_then(Value::as_bool)
        .ok_or_else(|| VerdictError::NonBooleanField {
            word: word.to_string(),
            field: field.to_string(),
        })
}

/// One verdict per pool candidate, in pool order.
pub fn parse_verdicts(
    raw: &str,
    pool: &CandidatePool,
) -> Result<Vec<JudgmentVerdict>, VerdictError> {
    let value = extract_json(raw)?.value;
    let object = value.as_object().ok_or(VerdictError::NotAnObject)?;
    let mut used = BTreeSet::new();
    let mut verdicts = Vec::with_capacity(pool.candidates.len());
    for candidate in &pool.candidates {
        let word = candidate.surface.as_str();
        let (matched, entry) = match object.get_key_value(word) {
            Some((k, v)) => (k.as_str(), v),
            None => {
                let (k, v) = object
                    .iter()
                    .find(|(k, _)| k.to_lowercase() == word.to_lowercase())
                    .ok_or_else(|| VerdictError::MissingVerdict(word.to_string()))?;
                log::warn!("verdict key `{k}` matched candidate `{word}` ignoring case");
                (k.as_str(), v)
            }
        };
        used.insert(matched);
        verdicts.push(JudgmentVerdict {
            word: word.to_string(),
            syntax_ok: bool_field(entry, word, "syntax")?,
            semantics_ok: bool_field(entry, word, "semantics")?,
        });
    }
    for extra in object.keys().filter(|k| !used.contains(k.as_str())) {
        log::warn!("ignoring verdict for `{extra}`, which was not submitted");
    }
    Ok(verdicts)
}

/// Words judged syntactically right and semantically wrong, in input order.
pub fn filter_good(verdicts: &[JudgmentVerdict]) -> Vec<String> {
    verdicts
        .iter()
        .filter(|v| v.is_good())
        .map(|v| v.word.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgmentMode {
    /// One masked stem plus a comma-separated word list.
    #[default]
    Batch,
    /// Each candidate inserted into the stem as a full sentence.
    WholeSentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub pool_size: usize,
    pub max_rounds: usize,
    pub mode: JudgmentMode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            pool_size: DEFAULT_POOL_SIZE,
            max_rounds: DEFAULT_MAX_ROUNDS,
            mode: JudgmentMode::Batch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Filled,
    Depleted,
    RoundCap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistractorSet {
    pub distractors: Vec<TaggedKey>,
    pub shortfall: usize,
    pub rounds_used: usize,
    /// Every good candidate found, in judgment order.
    pub good: Vec<TaggedKey>,
    pub judged: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectionError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("judgment response unusable after re-ask: {0}")]
    Verdict(VerdictError),
    #[error(transparent)]
    Request(#[from] RequestError),
}

fn judge(
    gateway: &Gateway,
    stem: &QuestionStem,
    pool: &CandidatePool,
    mode: JudgmentMode,
) -> Result<Vec<JudgmentVerdict>, SelectionError> {
    let prompt = match mode {
        JudgmentMode::Batch => build_judgment_prompt(stem, pool),
        JudgmentMode::WholeSentence => build_sentence_judgment_prompt(stem, pool),
    };
    let request = CompletionRequest::new(RequestTag::Judgment, prompt)?;
    let response = gateway.complete(&request)?;
    match parse_verdicts(&response.raw_text, pool) {
        Ok(v) => Ok(v),
        Err(first) => {
            log::warn!("judgment response rejected ({first}); asking again for JSON only");
            let response = gateway.complete(&request.json_reask())?;
            parse_verdicts(&response.raw_text, pool).map_err(SelectionError::Verdict)
        }
    }
}

/// Runs judgment rounds until three good distractors are found, the
/// same-POS pool is used up, or `max_rounds` is reached, then picks three at
/// random from the accumulated good candidates.
pub fn select_distractors<R: Rng + ?Sized>(
    stem: &QuestionStem,
    groups: &WordGroupSet,
    gateway: &Gateway,
    rng: &mut R,
    config: &SelectionConfig,
) -> Result<DistractorSet, SelectionError> {
    let key = &stem.key;
    let mut tried: BTreeSet<String> = BTreeSet::new();
    let mut good: Vec<TaggedKey> = Vec::new();
    let mut rounds = 0;
    let mut judged = 0;
    let stop = loop {
        if good.len() >= DISTRACTORS_PER_ITEM {
            break StopReason::Filled;
        }
        if rounds >= config.max_rounds {
            break StopReason::RoundCap;
        }
        let pool = draw_pool(key, groups, config.pool_size, rng, &tried);
        if pool.is_empty() {
            break StopReason::Depleted;
        }
        rounds += 1;
        tried.extend(pool.candidates.iter().map(|c| c.surface.to_lowercase()));
        judged += pool.candidates.len();
        let verdicts = judge(gateway, stem, &pool, config.mode)?;
        for (candidate, verdict) in pool.candidates.iter().zip(&verdicts) {
            if verdict.is_good() {
                good.push(candidate.clone());
            }
        }
    };
    let distractors: Vec<TaggedKey> = if good.len() > DISTRACTORS_PER_ITEM {
        good.choose_multiple(rng, DISTRACTORS_PER_ITEM)
            .cloned()
            .collect()
    } else {
        good.clone()
    };
    Ok(DistractorSet {
        shortfall: DISTRACTORS_PER_ITEM - distractors.len(),
        distractors,
        rounds_used: rounds,
        good,
        judged,
        stop,
    })
}
