//! POS tagging, inflection and lemmatization for vocabulary headwords.
//!
//! The engine is a lexicon of headwords with their word classes and
//! irregular forms, backed by regular suffix rules. Words outside the lexicon
//! are tagged by suffix heuristics and flagged as [`Confidence::Guessed`].
//!
//! Two deliberate departures from general-purpose inflectors:
//!
//! * Latin plurals (`areae`, `foci`) are never generated when a standard
//!   plural exists.
//! * The singular form never appears under `NNS`, and uncountable nouns carry
//!   `NN` only.

mod lexicon;
pub mod rules;
mod tag;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use lexicon::{parse_lexicon, LexiconEntry};
pub use tag::{PosTag, UnknownPosTag, WordClass};

use crate::wordlist::HeadwordEntry;

const BUNDLED_LEXICON: &str = include_str!("../../resources/lexicon.txt");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MorphologyError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("invalid word `{0}`")]
    InvalidWord(String),
    #[error("tag {tag} is not applicable to `{headword}`")]
    TagNotApplicable { headword: String, tag: PosTag },
    #[error("taggers share no tag for `{0}`")]
    EmptyConsensus(String),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("secondary tagger failed for `{headword}`: {message}")]
    SecondaryTagger { headword: String, message: String },
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("invalid headword `{0}`")]
    InvalidHeadword(String),
    #[error("word group `{0}` has no inflections")]
    Empty(String),
    #[error("word group `{headword}` has an empty form set for {tag}")]
    EmptyForms { headword: String, tag: PosTag },
    #[error("word group `{headword}` contains Latin plural `{form}`")]
    LatinPlural { headword: String, form: String },
    #[error("word group `{headword}` lists singular `{form}` under NNS")]
    SingularUnderPlural { headword: String, form: String },
    #[error("word group `{headword}` has invalid form `{form}`")]
    InvalidForm { headword: String, form: String },
}

/// Letters with optional internal hyphens or apostrophes.
pub fn is_valid_word(word: &str) -> bool {
    let bytes: Vec<char> = word.chars().collect();
    if bytes.is_empty() {
        return false;
    }
    let inner = |c: char| c == '-' || c == '\'';
    if inner(bytes[0]) || inner(bytes[bytes.len() - 1]) {
        return false;
    }
    bytes.iter().all(|&c| c.is_alphabetic() || inner(c))
}

/// A headword together with all of its inflected forms, organized by tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordGroup {
    headword: String,
    sublist_id: u32,
    inflections: BTreeMap<PosTag, BTreeSet<String>>,
}

impl WordGroup {
    pub fn new(
        headword: impl Into<String>,
        sublist_id: u32,
        inflections: BTreeMap<PosTag, BTreeSet<String>>,
    ) -> Result<Self, GroupError> {
        let headword = headword.into();
        if !is_valid_word(&headword) {
            return Err(GroupError::InvalidHeadword(headword));
        }
        if inflections.is_empty() {
            return Err(GroupError::Empty(headword));
        }
        for (&tag, forms) in &inflections {
            if forms.is_empty() {
                return Err(GroupError::EmptyForms { headword, tag });
            }
            for form in forms {
                if !is_valid_word(form) {
                    return Err(GroupError::InvalidForm {
                        headword,
                        form: form.clone(),
                    });
                }
                if form.ends_with("ae") || form.ends_with('æ') {
                    return Err(GroupError::LatinPlural {
                        headword,
                        form: form.clone(),
                    });
                }
            }
        }
        if let (Some(singular), Some(plural)) =
            (inflections.get(&PosTag::NN), inflections.get(&PosTag::NNS))
        {
            if let Some(form) = plural.intersection(singular).next() {
                return Err(GroupError::SingularUnderPlural {
                    headword,
                    form: form.clone(),
                });
            }
        }
        if let Some(plural) = inflections.get(&PosTag::NNS) {
            if plural.contains(&headword) {
                return Err(GroupError::SingularUnderPlural {
                    form: headword.clone(),
                    headword,
                });
            }
        }
        Ok(WordGroup {
            headword,
            sublist_id,
            inflections,
        })
    }

    pub fn headword(&self) -> &str {
        &self.headword
    }

    pub fn sublist_id(&self) -> u32 {
        self.sublist_id
    }

    pub fn inflections(&self) -> &BTreeMap<PosTag, BTreeSet<String>> {
        &self.inflections
    }

    pub fn tags(&self) -> impl Iterator<Item = PosTag> + '_ {
        self.inflections.keys().copied()
    }

    pub fn forms(&self, tag: PosTag) -> Option<&BTreeSet<String>> {
        self.inflections.get(&tag)
    }

    /// Tags under which `surface` appears, compared case-insensitively.
    pub fn tags_of(&self, surface: &str) -> BTreeSet<PosTag> {
        let lower = surface.to_lowercase();
        self.inflections
            .iter()
            .filter(|(_, forms)| forms.contains(&lower))
            .map(|(&tag, _)| tag)
            .collect()
    }

    pub fn contains_form(&self, surface: &str) -> bool {
        !self.tags_of(surface).is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    Lexicon,
    Guessed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagging {
    pub tags: BTreeSet<PosTag>,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaSource {
    Lexicon,
    Rules,
    /// Not resolvable; the surface is returned unchanged.
    NotInLexicon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub headword: String,
    pub source: LemmaSource,
}

impl Lemma {
    pub fn in_lexicon(&self) -> bool {
        self.source != LemmaSource::NotInLexicon
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.headword)
    }
}

/// Outcome of cross-checking two taggers on one headword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsensusReport {
    pub headword: String,
    pub accepted: BTreeSet<PosTag>,
    pub rejected_primary_only: BTreeSet<PosTag>,
    pub rejected_secondary_only: BTreeSet<PosTag>,
}

/// Tags accepted by both taggers. The leftovers are kept for auditing.
pub fn consensus_tags(
    headword: &str,
    primary: &BTreeSet<PosTag>,
    secondary: &BTreeSet<PosTag>,
) -> Result<ConsensusReport, MorphologyError> {
    let accepted: BTreeSet<PosTag> = primary.intersection(secondary).copied().collect();
    if accepted.is_empty() {
        return Err(MorphologyError::EmptyConsensus(headword.to_string()));
    }
    Ok(ConsensusReport {
        headword: headword.to_string(),
        rejected_primary_only: primary.difference(&accepted).copied().collect(),
        rejected_secondary_only: secondary.difference(&accepted).copied().collect(),
        accepted,
    })
}

/// An independent tag source used to cross-validate the engine's tags.
pub trait SecondaryTagger {
    fn tags(&self, headword: &str) -> Result<BTreeSet<PosTag>, MorphologyError>;
}

impl<F> SecondaryTagger for F
where
    F: Fn(&str) -> BTreeSet<PosTag>,
{
    fn tags(&self, headword: &str) -> Result<BTreeSet<PosTag>, MorphologyError> {
        Ok(self(headword))
    }
}

/// Secondary tagger that approves every tag, leaving the engine's own.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl SecondaryTagger for AcceptAll {
    fn tags(&self, _: &str) -> Result<BTreeSet<PosTag>, MorphologyError> {
        Ok(PosTag::ALL.iter().copied().collect())
    }
}

/// Secondary tagger backed by a plain `headword TAG TAG ...` file.
#[derive(Debug, Clone, Default)]
pub struct FixtureTagger {
    tags: HashMap<String, BTreeSet<PosTag>>,
}

impl FixtureTagger {
    pub fn parse(text: &str) -> Result<Self, MorphologyError> {
        let mut tags = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default().to_lowercase();
            let set = fields
                .map(|f| {
                    f.parse::<PosTag>().map_err(|e| MorphologyError::Lexicon {
                        line: idx + 1,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<BTreeSet<_>, _>>()?;
            tags.insert(word, set);
        }
        Ok(FixtureTagger { tags })
    }
}

impl SecondaryTagger for FixtureTagger {
    fn tags(&self, headword: &str) -> Result<BTreeSet<PosTag>, MorphologyError> {
        Ok(self.tags.get(headword).cloned().unwrap_or_default())
    }
}

/// Lexicon-backed morphology engine. Immutable once built.
#[derive(Debug, Clone)]
pub struct Morphology {
    entries: BTreeMap<String, LexiconEntry>,
    reverse: HashMap<(String, PosTag), String>,
}

impl Morphology {
    /// Engine over the lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_lexicon_str(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn from_lexicon_str(text: &str) -> Result<Self, MorphologyError> {
        let entries = parse_lexicon(text)?;
        let mut reverse = HashMap::new();
        for entry in entries.values() {
            for (tag, forms) in entry_forms(entry) {
                for form in forms {
                    // an exact headword match wins over a foreign inflection
                    let key = (form.clone(), tag);
                    if form == entry.headword || !reverse.contains_key(&key) {
                        reverse.insert(key, entry.headword.clone());
                    }
                }
            }
        }
        Ok(Morphology { entries, reverse })
    }

    pub fn contains(&self, headword: &str) -> bool {
        self.entries.contains_key(headword)
    }

    pub fn headwords(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn entry_for(&self, headword: &str) -> Result<(LexiconEntry, Confidence), MorphologyError> {
        if !is_valid_word(headword) || headword.chars().any(char::is_uppercase) {
            return Err(MorphologyError::InvalidWord(headword.to_string()));
        }
        if let Some(entry) = self.entries.get(headword) {
            return Ok((entry.clone(), Confidence::Lexicon));
        }
        guess_entry(headword)
            .map(|e| (e, Confidence::Guessed))
            .ok_or_else(|| MorphologyError::UnknownWord(headword.to_string()))
    }

    pub fn tag_pos(&self, headword: &str) -> Result<Tagging, MorphologyError> {
        let (entry, confidence) = self.entry_for(headword)?;
        Ok(Tagging {
            tags: entry_forms(&entry).into_keys().collect(),
            confidence,
        })
    }

    pub fn inflect(
        &self,
        headword: &str,
        tag: PosTag,
    ) -> Result<BTreeSet<String>, MorphologyError> {
        let (entry, _) = self.entry_for(headword)?;
        entry_forms(&entry)
            .remove(&tag)
            .ok_or_else(|| MorphologyError::TagNotApplicable {
                headword: headword.to_string(),
                tag,
            })
    }

    /// Every tag of `headword` with its forms.
    pub fn paradigm(
        &self,
        headword: &str,
    ) -> Result<BTreeMap<PosTag, BTreeSet<String>>, MorphologyError> {
        let (entry, _) = self.entry_for(headword)?;
        Ok(entry_forms(&entry))
    }

    /// Headword of an inflected surface. Total: unresolvable surfaces come
    /// back unchanged with [`LemmaSource::NotInLexicon`].
    pub fn lemma_of(&self, surface: &str, tag: PosTag) -> Lemma {
        let lower = surface.to_lowercase();
        if let Some(headword) = self.reverse.get(&(lower.clone(), tag)) {
            return Lemma {
                headword: headword.clone(),
                source: LemmaSource::Lexicon,
            };
        }
        for base in rules::candidate_bases(&lower) {
            if self.entries.contains_key(&base) {
                continue;
            }
            let Some(entry) = guess_entry(&base) else {
                continue;
            };
            if entry_forms(&entry)
                .get(&tag)
                .is_some_and(|forms| forms.contains(&lower))
            {
                return Lemma {
                    headword: base,
                    source: LemmaSource::Rules,
                };
            }
        }
        Lemma {
            headword: lower,
            source: LemmaSource::NotInLexicon,
        }
    }

    pub fn build_word_group(
        &self,
        entry: &HeadwordEntry,
        secondary: &dyn SecondaryTagger,
    ) -> Result<WordGroup, MorphologyError> {
        self.build_word_group_audited(entry, secondary)
            .map(|(g, _)| g)
    }

    /// Like [`Morphology::build_word_group`], also returning the consensus
    /// report for the audit trail.
    pub fn build_word_group_audited(
        &self,
        entry: &HeadwordEntry,
        secondary: &dyn SecondaryTagger,
    ) -> Result<(WordGroup, ConsensusReport), MorphologyError> {
        let headword = entry.headword();
        let primary = self.tag_pos(headword)?;
        let other = secondary.tags(headword)?;
        let report = consensus_tags(headword, &primary.tags, &other)?;
        let mut paradigm = self.paradigm(headword)?;
        paradigm.retain(|tag, _| report.accepted.contains(tag));
        let group = WordGroup::new(headword, entry.sublist_id(), paradigm)?;
        Ok((group, report))
    }
}

fn guess_entry(word: &str) -> Option<LexiconEntry> {
    const NOUN: [&str; 12] = [
        "tion", "sion", "ment", "ness", "ity", "ism", "ance", "ence", "ship", "hood", "ist",
        "ology",
    ];
    const VERB: [&str; 4] = ["ize", "ise", "ify", "ate"];
    const ADJ: [&str; 9] = [
        "ive", "ous", "ful", "able", "ible", "al", "ic", "less", "ary",
    ];
    let class = if word.ends_with("ly") && word.len() > 4 {
        WordClass::Adverb
    } else if NOUN.iter().any(|s| word.ends_with(s)) {
        WordClass::Noun
    } else if VERB.iter().any(|s| word.ends_with(s)) {
        WordClass::Verb
    } else if ADJ.iter().any(|s| word.ends_with(s)) {
        WordClass::Adjective
    } else {
        return None;
    };
    Some(LexiconEntry {
        headword: word.to_string(),
        classes: BTreeSet::from([class]),
        countable: true,
        ..Default::default()
    })
}

fn entry_forms(entry: &LexiconEntry) -> BTreeMap<PosTag, BTreeSet<String>> {
    let h = entry.headword.as_str();
    let ov = |key: &str| entry.overrides.get(key).cloned();
    let one = |s: String| BTreeSet::from([s]);
    let mut out = BTreeMap::new();
    for class in &entry.classes {
        match class {
            WordClass::Noun => {
                out.insert(PosTag::NN, one(h.to_string()));
                if entry.countable {
                    let plural = ov("plural")
                        .filter(|p| !rules::is_latin_plural(h, p))
                        .unwrap_or_else(|| rules::noun_plural(h));
                    if plural != h {
                        out.insert(PosTag::NNS, one(plural));
                    }
                }
            }
            WordClass::Verb => {
                let past = ov("past").unwrap_or_else(|| rules::verb_past(h, entry.doubles_final));
                out.insert(PosTag::VB, one(h.to_string()));
                out.insert(PosTag::VBP, one(h.to_string()));
                out.insert(
                    PosTag::VBZ,
                    one(ov("third").unwrap_or_else(|| rules::verb_third_person(h))),
                );
                out.insert(
                    PosTag::VBG,
                    one(ov("gerund").unwrap_or_else(|| rules::verb_gerund(h, entry.doubles_final))),
                );
                // regular participles coincide with the past tense and are
                // carried by VBD alone
                if let Some(participle) = ov("participle").filter(|p| *p != past) {
                    out.insert(PosTag::VBN, one(participle));
                }
                out.insert(PosTag::VBD, one(past));
            }
            WordClass::Adjective | WordClass::Adverb => {
                let (base, comp, sup) = if *class == WordClass::Adjective {
                    (PosTag::JJ, PosTag::JJR, PosTag::JJS)
                } else {
                    (PosTag::RB, PosTag::RBR, PosTag::RBS)
                };
                out.insert(base, one(h.to_string()));
                if entry.graded {
                    out.insert(
                        comp,
                        one(ov("comparative").unwrap_or_else(|| rules::comparative(h))),
                    );
                    out.insert(
                        sup,
                        one(ov("superlative").unwrap_or_else(|| rules::superlative(h))),
                    );
                }
            }
        }
    }
    out
}
