use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Penn Treebank tags used for vocabulary items.
///
/// Only the open-class tags a word group can carry are modelled; the
/// declaration order is the canonical order used when serializing groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosTag {
    NN,
    NNS,
    VB,
    VBD,
    VBG,
    VBN,
    VBP,
    VBZ,
    JJ,
    JJR,
    JJS,
    RB,
    RBR,
    RBS,
}

impl PosTag {
    pub const ALL: [PosTag; 14] = [
        PosTag::NN,
        PosTag::NNS,
        PosTag::VB,
        PosTag::VBD,
        PosTag::VBG,
        PosTag::VBN,
        PosTag::VBP,
        PosTag::VBZ,
        PosTag::JJ,
        PosTag::JJR,
        PosTag::JJS,
        PosTag::RB,
        PosTag::RBR,
        PosTag::RBS,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::NN => "NN",
            PosTag::NNS => "NNS",
            PosTag::VB => "VB",
            PosTag::VBD => "VBD",
            PosTag::VBG => "VBG",
            PosTag::VBN => "VBN",
            PosTag::VBP => "VBP",
            PosTag::VBZ => "VBZ",
            PosTag::JJ => "JJ",
            PosTag::JJR => "JJR",
            PosTag::JJS => "JJS",
            PosTag::RB => "RB",
            PosTag::RBR => "RBR",
            PosTag::RBS => "RBS",
        }
    }

    /// Short human description, e.g. for prompts and reports.
    pub fn description(self) -> &'static str {
        match self {
            PosTag::NN => "noun, singular or mass",
            PosTag::NNS => "noun, plural",
            PosTag::VB => "verb, base form",
            PosTag::VBD => "verb, past tense",
            PosTag::VBG => "verb, gerund or present participle",
            PosTag::VBN => "verb, past participle",
            PosTag::VBP => "verb, non-3rd person singular present",
            PosTag::VBZ => "verb, 3rd person singular present",
            PosTag::JJ => "adjective",
            PosTag::JJR => "adjective, comparative",
            PosTag::JJS => "adjective, superlative",
            PosTag::RB => "adverb",
            PosTag::RBR => "adverb, comparative",
            PosTag::RBS => "adverb, superlative",
        }
    }

    pub fn word_class(self) -> WordClass {
        match self {
            PosTag::NN | PosTag::NNS => WordClass::Noun,
            PosTag::VB | PosTag::VBD | PosTag::VBG | PosTag::VBN | PosTag::VBP | PosTag::VBZ => {
                WordClass::Verb
            }
            PosTag::JJ | PosTag::JJR | PosTag::JJS => WordClass::Adjective,
            PosTag::RB | PosTag::RBR | PosTag::RBS => WordClass::Adverb,
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown POS tag `{0}`")]
pub struct UnknownPosTag(pub String);

impl FromStr for PosTag {
    type Err = UnknownPosTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownPosTag(s.to_string()))
    }
}

/// Coarse word class; a lexicon entry lists the classes a headword belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WordClass {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl WordClass {
    pub fn from_code(code: &str) -> Option<WordClass> {
        match code {
            "N" => Some(WordClass::Noun),
            "V" => Some(WordClass::Verb),
            "A" => Some(WordClass::Adjective),
            "R" => Some(WordClass::Adverb),
            _ => None,
        }
    }
}
