//! Stem generation: key selection, prompt construction, parsing of the
//! backtick-marked response, validation and blanking.

use std::fmt;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gateway::{extract_json, JsonError};
use crate::morphology::{PosTag, WordGroup};

const STEM_TEMPLATE: &str = include_str!("../resources/stem_prompt.v1.txt");
const STEM_CHECK_TEMPLATE: &str = include_str!("../resources/stem_check_prompt.v1.txt");
const POSITION_RULE: &str = " It should not be at the beginning of the sentence.";

/// Template version recorded alongside generated items.
pub const STEM_TEMPLATE_VERSION: &str = "stem_prompt.v1";

/// Rendered blank.
pub const BLANK: &str = "____";

/// One surface form chosen from a word group, with its tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedKey {
    pub surface: String,
    pub tag: PosTag,
    pub headword: String,
}

impl TaggedKey {
    pub fn new(surface: impl Into<String>, tag: PosTag, headword: impl Into<String>) -> Self {
        TaggedKey {
            surface: surface.into(),
            tag,
            headword: headword.into(),
        }
    }
}

impl fmt::Display for TaggedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<{}>", self.surface, self.tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemConstraints {
    pub max_words: usize,
    pub domain_label: String,
    pub forbid_initial_position: bool,
}

impl Default for StemConstraints {
    fn default() -> Self {
        StemConstraints {
            max_words: 20,
            domain_label: "Academic English".to_string(),
            forbid_initial_position: true,
        }
    }
}

impl StemConstraints {
    /// A key may appear once per stem; not configurable.
    pub const MAX_KEY_OCCURRENCES: usize = 1;
    pub const MIN_WORDS: usize = 5;

    pub fn validate(&self) -> Result<(), String> {
        if self.max_words < Self::MIN_WORDS {
            return Err(format!(
                "max_words must be at least {}, got {}",
                Self::MIN_WORDS,
                self.max_words
            ));
        }
        if self.domain_label.trim().is_empty() {
            return Err("domain label is empty".into());
        }
        Ok(())
    }
}

/// Picks a tag uniformly from the group, then a form uniformly from that
/// tag's forms. All randomness comes from `rng`.
pub fn pick_key<R: Rng + ?Sized>(group: &WordGroup, rng: &mut R) -> TaggedKey {
    let tags: Vec<PosTag> = group.tags().collect();
    let tag = *tags.choose(rng).expect("word groups are never empty");
    let forms: Vec<&String> = group.forms(tag).expect("tag from group").iter().collect();
    let surface = *forms.choose(rng).expect("form sets are never empty");
    TaggedKey::new(surface.clone(), tag, group.headword())
}

pub fn build_stem_prompt(key: &TaggedKey, constraints: &StemConstraints) -> String {
    let position_rule = if constraints.forbid_initial_position {
        POSITION_RULE
    } else {
        ""
    };
    STEM_TEMPLATE
        .replace("{key}", &key.surface)
        .replace("{max_words}", &constraints.max_words.to_string())
        .replace("{domain}", &constraints.domain_label)
        .replace("{tag}", key.tag.as_str())
        .replace("{position_rule}", position_rule)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("response contains no backtick-delimited word")]
    NoBackticks,
    #[error("response marks more than one word with backticks")]
    MultipleKeys,
    #[error("response has an unpaired backtick")]
    UnpairedBacktick,
    #[error("backticks enclose nothing")]
    EmptyKey,
}

/// A sentence returned by the model, backticks removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedSentence {
    pub full_text: String,
    pub key_surface: String,
    /// Byte range of the key within `full_text`.
    pub key_span: Range<usize>,
}

fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    if let Some(inner) = t.strip_prefix("```").and_then(|s| s.strip_suffix("```")) {
        // drop an optional language tag line
        let inner = match inner.split_once('\n') {
            Some((first, rest)) if !first.contains(' ') && !first.contains('`') => rest,
            _ => inner,
        };
        inner.trim()
    } else {
        t
    }
}

pub fn parse_sentence(raw: &str) -> Result<GeneratedSentence, ParseError> {
    let text = strip_code_fence(raw);
    let ticks: Vec<usize> = text.match_indices('`').map(|(i, _)| i).collect();
    match ticks.len() {
        0 => return Err(ParseError::NoBackticks),
        2 => {}
        n if n % 2 == 1 => return Err(ParseError::UnpairedBacktick),
        _ => return Err(ParseError::MultipleKeys),
    }
    let (open, close) = (ticks[0], ticks[1]);
    let key = &text[open + 1..close];
    if key.trim().is_empty() {
        return Err(ParseError::EmptyKey);
    }
    let full_text = format!("{}{}{}", &text[..open], key, &text[close + 1..]);
    Ok(GeneratedSentence {
        key_surface: key.to_string(),
        key_span: open..close - 1,
        full_text,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    KeyMissing,
    KeyAtStart,
    KeyAltered,
    KeyDuplicated,
    TooLong,
    PosMismatch,
    NoBackticks,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::KeyMissing => "KEY_MISSING",
            ViolationCode::KeyAtStart => "KEY_AT_START",
            ViolationCode::KeyAltered => "KEY_ALTERED",
            ViolationCode::KeyDuplicated => "KEY_DUPLICATED",
            ViolationCode::TooLong => "TOO_LONG",
            ViolationCode::PosMismatch => "POS_MISMATCH",
            ViolationCode::NoBackticks => "NO_BACKTICKS",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StemValidationReport {
    violations: Vec<Violation>,
}

impl StemValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn push(&mut self, code: ViolationCode, message: impl Into<String>) {
        if !self.has(code) {
            self.violations.push(Violation {
                code,
                message: message.into(),
            });
        }
    }

    pub fn summary(&self) -> String {
        self.codes()
            .iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

/// Case-insensitive whole-word occurrences of `needle` in `text`.
pub fn find_word_occurrences(text: &str, needle: &str) -> Vec<Range<usize>> {
    let needle: Vec<char> = needle.chars().flat_map(char::to_lowercase).collect();
    if needle.is_empty() {
        return Vec::new();
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    for start in 0..chars.len() {
        if start > 0 && is_word_char(chars[start - 1].1) {
            continue;
        }
        let mut j = start;
        let mut k = 0;
        while k < needle.len() && j < chars.len() {
            let lowered: Vec<char> = chars[j].1.to_lowercase().collect();
            if needle[k..].starts_with(&lowered) {
                k += lowered.len();
                j += 1;
            } else {
                break;
            }
        }
        if k != needle.len() {
            continue;
        }
        if j < chars.len() && is_word_char(chars[j].1) {
            continue;
        }
        let end = chars.get(j).map(|&(i, _)| i).unwrap_or(text.len());
        out.push(chars[start].0..end);
    }
    out
}

/// Whitespace-separated token count; punctuation stays attached.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Index of the whitespace token containing `byte`.
fn token_index_at(text: &str, byte: usize) -> usize {
    let before = &text[..byte];
    let complete = before.split_whitespace().count();
    if before.is_empty() || before.ends_with(char::is_whitespace) {
        complete
    } else {
        complete - 1
    }
}

/// Mechanical checks of a parsed sentence against the requested key.
///
/// `group` is the key's word group; it decides whether an altered key is a
/// different inflection of the same headword (`POS_MISMATCH`).
pub fn validate_stem(
    sentence: &GeneratedSentence,
    requested: &TaggedKey,
    group: &WordGroup,
    constraints: &StemConstraints,
) -> StemValidationReport {
    let mut report = StemValidationReport::default();
    let text = &sentence.full_text;
    let key = sentence.key_surface.trim();

    if text.contains(BLANK) {
        report.push(
            ViolationCode::KeyMissing,
            "sentence already contains a blank marker",
        );
    }

    let altered = key.to_lowercase() != requested.surface.to_lowercase();
    if altered {
        report.push(
            ViolationCode::KeyAltered,
            format!("asked for `{}`, got `{}`", requested.surface, key),
        );
        if find_word_occurrences(text, &requested.surface).is_empty() {
            report.push(
                ViolationCode::KeyMissing,
                format!("`{}` does not occur in the sentence", requested.surface),
            );
        }
    }

    let key_lower = key.to_lowercase();
    let in_requested_tag = group
        .forms(requested.tag)
        .is_some_and(|forms| forms.contains(&key_lower));
    if group.contains_form(&key_lower) && !in_requested_tag {
        let found: Vec<&str> = group
            .tags_of(&key_lower)
            .iter()
            .map(|t| t.as_str())
            .collect();
        report.push(
            ViolationCode::PosMismatch,
            format!(
                "`{key}` is {} in the word group, not {}",
                found.join("/"),
                requested.tag
            ),
        );
    }

    if constraints.forbid_initial_position && token_index_at(text, sentence.key_span.start) == 0 {
        report.push(
            ViolationCode::KeyAtStart,
            "key is the first word of the sentence",
        );
    }

    let mut surfaces = vec![requested.surface.as_str()];
    if altered {
        surfaces.push(key);
    }
    for surface in surfaces {
        let elsewhere = find_word_occurrences(text, surface)
            .into_iter()
            .filter(|r| *r != sentence.key_span)
            .count();
        if elsewhere > 0 {
            report.push(
                ViolationCode::KeyDuplicated,
                format!("`{surface}` appears more than once"),
            );
        }
    }

    let words = word_count(text);
    if words > constraints.max_words {
        report.push(
            ViolationCode::TooLong,
            format!("{words} words, limit {}", constraints.max_words),
        );
    }
    report
}

/// Parses and validates a raw model response in one step. Responses without
/// a usable key marker yield `NO_BACKTICKS`/`KEY_MISSING` instead of an error.
pub fn assess_response(
    raw: &str,
    requested: &TaggedKey,
    group: &WordGroup,
    constraints: &StemConstraints,
) -> (Option<GeneratedSentence>, StemValidationReport) {
    match parse_sentence(raw) {
        Ok(sentence) => {
            let report = validate_stem(&sentence, requested, group, constraints);
            (Some(sentence), report)
        }
        Err(err) => {
            let mut report = StemValidationReport::default();
            match err {
                ParseError::NoBackticks | ParseError::UnpairedBacktick => {
                    report.push(ViolationCode::NoBackticks, err.to_string());
                    report.push(ViolationCode::KeyMissing, "no marked key to blank out");
                }
                ParseError::EmptyKey => {
                    report.push(ViolationCode::KeyMissing, err.to_string());
                }
                ParseError::MultipleKeys => {
                    report.push(ViolationCode::KeyDuplicated, err.to_string());
                }
            }
            (None, report)
        }
    }
}

/// A sentence with its key replaced by [`BLANK`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionStem {
    pub text_with_blank: String,
    pub key: TaggedKey,
    /// The key as written in the sentence, original capitalization kept.
    pub key_text: String,
    pub word_count: usize,
}

impl QuestionStem {
    /// Reinserts the key, reproducing the validated sentence.
    pub fn restore(&self) -> String {
        self.text_with_blank.replacen(BLANK, &self.key_text, 1)
    }

    /// The stem with `word` in the blank.
    pub fn fill(&self, word: &str) -> String {
        self.text_with_blank.replacen(BLANK, word, 1)
    }
}

pub fn blank_out(sentence: &GeneratedSentence, key: &TaggedKey) -> QuestionStem {
    let text = &sentence.full_text;
    let span = sentence.key_span.clone();
    QuestionStem {
        text_with_blank: format!("{}{}{}", &text[..span.start], BLANK, &text[span.end..]),
        key: key.clone(),
        key_text: text[span].to_string(),
        word_count: word_count(text),
    }
}

/// Prompt for the optional model-side check of the key's presence and POS.
pub fn build_stem_check_prompt(sentence: &GeneratedSentence, key: &TaggedKey) -> String {
    let marked = format!(
        "{}`{}`{}",
        &sentence.full_text[..sentence.key_span.start],
        &sentence.full_text[sentence.key_span.clone()],
        &sentence.full_text[sentence.key_span.end..]
    );
    STEM_CHECK_TEMPLATE
        .replace("{key}", &key.surface)
        .replace("{tag}", key.tag.as_str())
        .replace("{sentence}", &marked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StemCheckVerdict {
    pub key_present: bool,
    pub pos_ok: bool,
}

pub fn parse_stem_check(raw: &str) -> Result<StemCheckVerdict, JsonError> {
    let value = extract_json(raw)?.value;
    let field = |name: &str| {
        value
            .get(name)
            .and_then(|v| v.as_bool())
            .ok_or_else(|| JsonError::MalformedJson(format!("missing boolean `{name}`")))
    };
    Ok(StemCheckVerdict {
        key_present: field("key_present")?,
        pos_ok: field("pos_ok")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn group(headword: &str, entries: &[(PosTag, &str)]) -> WordGroup {
        let mut infl: BTreeMap<PosTag, BTreeSet<String>> = BTreeMap::new();
        for (tag, form) in entries {
            infl.entry(*tag).or_default().insert(form.to_string());
        }
        WordGroup::new(headword, 1, infl).unwrap()
    }

    fn create_group() -> WordGroup {
        use PosTag::*;
        group(
            "create",
            &[
                (VB, "create"),
                (VBD, "created"),
                (VBG, "creating"),
                (VBP, "create"),
                (VBZ, "creates"),
            ],
        )
    }

    const EXAMPLE_PROMPT: &str = "Generate a sentence with the word \"creates\" with at most 20 words. The text domain should be Academic English. The given word in the sentence has a pos tag of VBZ. It should not be at the beginning of the sentence. It should not appear more than once. Surround it with a backtick.\n---\nFor example, the given word is \"account\" with pos tag of \"NN\". You should yield a sentence in the following format:\nI have an `account` with the bank.";

    #[test]
    fn prompt_matches_worked_example() {
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        assert_eq!(
            build_stem_prompt(&key, &StemConstraints::default()),
            EXAMPLE_PROMPT
        );
    }

    #[test]
    fn prompt_word_limit_substitution() {
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        let c = StemConstraints {
            max_words: 30,
            ..Default::default()
        };
        assert_eq!(
            build_stem_prompt(&key, &c),
            EXAMPLE_PROMPT.replace("at most 20 words", "at most 30 words")
        );
    }

    #[test]
    fn prompt_example_block_is_fixed() {
        let key = TaggedKey::new("account", PosTag::NN, "account");
        let p = build_stem_prompt(&key, &StemConstraints::default());
        assert!(p.starts_with("Generate a sentence with the word \"account\""));
        assert!(p.ends_with("\"account\" with pos tag of \"NN\". You should yield a sentence in the following format:\nI have an `account` with the bank."));
    }

    #[test]
    fn prompt_without_position_rule() {
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        let c = StemConstraints {
            forbid_initial_position: false,
            ..Default::default()
        };
        assert!(!build_stem_prompt(&key, &c).contains("beginning"));
    }

    #[test]
    fn constraints_validation() {
        assert!(StemConstraints::default().validate().is_ok());
        let c = StemConstraints {
            max_words: 4,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn parses_example_response() {
        let s = parse_sentence(
            "National income `creates` economic growth and development in a country.",
        )
        .unwrap();
        assert_eq!(s.key_surface, "creates");
        assert_eq!(
            s.full_text,
            "National income creates economic growth and development in a country."
        );
        assert_eq!(&s.full_text[s.key_span.clone()], "creates");
        assert_eq!(token_index_at(&s.full_text, s.key_span.start), 2);
    }

    #[test]
    fn parses_key_at_start() {
        let s = parse_sentence("`Assessing` the validity of the research findings requires a critical and thorough examination.").unwrap();
        assert_eq!(s.key_span, 0..9);
        assert_eq!(s.key_surface, "Assessing");
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_sentence("no markers here"),
            Err(ParseError::NoBackticks)
        );
        assert_eq!(
            parse_sentence("a `b` c `d` e"),
            Err(ParseError::MultipleKeys)
        );
        assert_eq!(parse_sentence("a `b c"), Err(ParseError::UnpairedBacktick));
        assert_eq!(parse_sentence("a `` c"), Err(ParseError::EmptyKey));
    }

    #[test]
    fn parses_fenced_response() {
        let s = parse_sentence("```\nThe data `indicate` a trend.\n```").unwrap();
        assert_eq!(s.full_text, "The data indicate a trend.");
    }

    #[test]
    fn worked_example_passes_and_blanks() {
        let s = parse_sentence(
            "National income `creates` economic growth and development in a country.",
        )
        .unwrap();
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        let r = validate_stem(&s, &key, &create_group(), &StemConstraints::default());
        assert!(r.passed(), "{:?}", r);
        let stem = blank_out(&s, &key);
        assert_eq!(
            stem.text_with_blank,
            "National income ____ economic growth and development in a country."
        );
        assert_eq!(stem.restore(), s.full_text);
        assert_eq!(stem.word_count, 10);
    }

    #[test]
    fn blank_abuts_period() {
        let s = parse_sentence("Many factors influence what people `create`.").unwrap();
        let stem = blank_out(&s, &TaggedKey::new("create", PosTag::VBP, "create"));
        assert_eq!(
            stem.text_with_blank,
            "Many factors influence what people ____."
        );
    }

    #[test]
    fn capitalized_key_at_start() {
        let s = parse_sentence("`Assessing` the validity of the research findings requires a critical and thorough examination.").unwrap();
        let g = group("assess", &[(PosTag::VBG, "assessing")]);
        let key = TaggedKey::new("assessing", PosTag::VBG, "assess");
        let r = validate_stem(&s, &key, &g, &StemConstraints::default());
        assert_eq!(r.codes(), vec![ViolationCode::KeyAtStart]);
        let stem = blank_out(&s, &key);
        assert_eq!(stem.text_with_blank.matches(BLANK).count(), 1);
        assert_eq!(stem.restore(), s.full_text);
    }

    #[test]
    fn leading_quote_still_counts_as_start() {
        let s = parse_sentence("\"`Assessing` data is hard,\" she said to the class.").unwrap();
        let g = group("assess", &[(PosTag::VBG, "assessing")]);
        let key = TaggedKey::new("assessing", PosTag::VBG, "assess");
        assert!(
            validate_stem(&s, &key, &g, &StemConstraints::default()).has(ViolationCode::KeyAtStart)
        );
    }

    #[test]
    fn altered_key_with_other_inflection() {
        let s = parse_sentence("The research project involved testing various `methods` to determine the most effective strategy.").unwrap();
        let g = group(
            "method",
            &[(PosTag::NN, "method"), (PosTag::NNS, "methods")],
        );
        let key = TaggedKey::new("method", PosTag::NN, "method");
        let r = validate_stem(&s, &key, &g, &StemConstraints::default());
        assert!(r.has(ViolationCode::KeyAltered));
        assert!(r.has(ViolationCode::PosMismatch));
        assert!(!r.passed());
    }

    #[test]
    fn substituted_key() {
        let s = parse_sentence(
            "The results of the study `indicate` the need for further research on the topic.",
        )
        .unwrap();
        use PosTag::*;
        let g = group(
            "major",
            &[
                (JJ, "major"),
                (VB, "major"),
                (VBP, "major"),
                (VBZ, "majors"),
            ],
        );
        let key = TaggedKey::new("major", VBP, "major");
        let r = validate_stem(&s, &key, &g, &StemConstraints::default());
        assert!(r.has(ViolationCode::KeyAltered));
        assert!(r.has(ViolationCode::KeyMissing));
        assert!(!r.has(ViolationCode::PosMismatch));
    }

    #[test]
    fn duplicated_key() {
        let s = parse_sentence("Data `creates` value, and value creates more data.").unwrap();
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        let r = validate_stem(&s, &key, &create_group(), &StemConstraints::default());
        assert_eq!(r.codes(), vec![ViolationCode::KeyDuplicated]);
    }

    #[test]
    fn duplicate_check_respects_word_boundaries() {
        let s = parse_sentence("Firms that `create` value recreate markets.").unwrap();
        let key = TaggedKey::new("create", PosTag::VBP, "create");
        assert!(validate_stem(&s, &key, &create_group(), &StemConstraints::default()).passed());
    }

    #[test]
    fn too_long() {
        let s = parse_sentence(
            "In this very long sentence the policy `creates` many many many many many many many many many many many many words.",
        )
        .unwrap();
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        let r = validate_stem(&s, &key, &create_group(), &StemConstraints::default());
        assert_eq!(r.codes(), vec![ViolationCode::TooLong]);
        let relaxed = StemConstraints {
            max_words: 30,
            ..Default::default()
        };
        assert!(validate_stem(&s, &key, &create_group(), &relaxed).passed());
    }

    #[test]
    fn unmarked_response_reports_missing_key() {
        let g = group("assume", &[(PosTag::VBD, "assumed")]);
        let key = TaggedKey::new("assumed", PosTag::VBD, "assume");
        let (s, r) = assess_response(
            "The researchers assumed that the data they collected was reliable and unbiased.",
            &key,
            &g,
            &StemConstraints::default(),
        );
        assert!(s.is_none());
        assert!(r.has(ViolationCode::KeyMissing));
        assert!(r.has(ViolationCode::NoBackticks));
    }

    #[test]
    fn existing_underscores_count_as_missing_key() {
        let s = parse_sentence("The ____ policy `creates` jobs in the region.").unwrap();
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        let r = validate_stem(&s, &key, &create_group(), &StemConstraints::default());
        assert!(r.has(ViolationCode::KeyMissing));
    }

    #[test]
    fn word_occurrences() {
        let text = "Create, create; CREATE-d created";
        assert_eq!(find_word_occurrences(text, "create").len(), 2);
        assert_eq!(find_word_occurrences("naïve NAÏVE", "naïve").len(), 2);
        assert!(find_word_occurrences("abc", "").is_empty());
    }

    #[test]
    fn pick_key_is_deterministic_and_member() {
        let g = create_group();
        for seed in 0..50 {
            let a = pick_key(&g, &mut ChaCha20Rng::seed_from_u64(seed));
            let b = pick_key(&g, &mut ChaCha20Rng::seed_from_u64(seed));
            assert_eq!(a, b);
            assert!(g.forms(a.tag).unwrap().contains(&a.surface));
            assert_eq!(a.headword, "create");
        }
    }

    #[test]
    fn pick_key_forced_choice() {
        let g = group("formula", &[(PosTag::NN, "formula")]);
        let k = pick_key(&g, &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(k, TaggedKey::new("formula", PosTag::NN, "formula"));
    }

    #[test]
    fn stem_check_prompt_and_parse() {
        let s = parse_sentence("Income `creates` growth in a country.").unwrap();
        let key = TaggedKey::new("creates", PosTag::VBZ, "create");
        let p = build_stem_check_prompt(&s, &key);
        assert!(p.contains("Sentence: ```Income `creates` growth in a country.```"));
        assert!(p.contains("\"creates\" used with the pos tag VBZ"));
        let v = parse_stem_check("{\"key_present\": true, \"pos_ok\": false}").unwrap();
        assert_eq!(
            v,
            StemCheckVerdict {
                key_present: true,
                pos_ok: false
            }
        );
        assert!(parse_stem_check("{\"key_present\": true}").is_err());
    }
}
