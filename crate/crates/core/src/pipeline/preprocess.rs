use std::collections::BTreeSet;

use serde::Serialize;

use crate::gateway::{extract_json, CompletionRequest, Gateway, RequestTag};
use crate::morphology::{ConsensusReport, Morphology, MorphologyError, PosTag, SecondaryTagger};
use crate::wordlist::{HeadwordEntry, WordGroupSet, WordlistError};

const TAGGING_TEMPLATE: &str = include_str!("../../resources/tagging_prompt.v1.txt");

pub fn build_tagging_prompt(headword: &str) -> String {
    let tags: Vec<&str> = PosTag::ALL.iter().map(|t| t.as_str()).collect();
    TAGGING_TEMPLATE
        .replace("{word}", headword)
        .replace("{tags}", &tags.join(", "))
}

/// Reads `{"tags": [...]}`; unknown tags are dropped with a warning.
pub fn parse_tagging_response(raw: &str) -> Result<BTreeSet<PosTag>, String> {
    let value = extract_json(raw).map_err(|e| e.to_string())?.value;
    let list = value
        .get("tags")
        .and_then(|v| v.as_array())
        .ok_or("response has no `tags` array")?;
    let mut tags = BTreeSet::new();
    for item in list {
        match item.as_str().map(str::parse::<PosTag>) {
            Some(Ok(tag)) => {
                tags.insert(tag);
            }
            _ => log::warn!("ignoring tag {item} in tagging response"),
        }
    }
    Ok(tags)
}

/// Secondary tagger that asks the language model.
pub struct LlmTagger<'a> {
    pub gateway: &'a Gateway,
}

impl SecondaryTagger for LlmTagger<'_> {
    fn tags(&self, headword: &str) -> Result<BTreeSet<PosTag>, MorphologyError> {
        let request = CompletionRequest::new(RequestTag::Tagging, build_tagging_prompt(headword))
            .expect("tagging prompt is never empty");
        let failed = |message: String| MorphologyError::SecondaryTagger {
            headword: headword.to_string(),
            message,
        };
        let response = self
            .gateway
            .complete(&request)
            .map_err(|e| failed(e.to_string()))?;
        parse_tagging_response(&response.raw_text).map_err(failed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedHeadword {
    pub headword: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub groups: WordGroupSet,
    pub reports: Vec<ConsensusReport>,
    pub skipped: Vec<SkippedHeadword>,
}

/// Builds one word group per headword, in list order. Headwords whose
/// taggers share no tag, or that cannot be inflected, are skipped and
/// reported rather than failing the whole list.
pub fn preprocess(
    entries: &[HeadwordEntry],
    morphology: &Morphology,
    secondary: &dyn SecondaryTagger,
    source_label: &str,
) -> Result<Preprocessed, WordlistError> {
    let mut groups = Vec::new();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for entry in entries {
        match morphology.build_word_group_audited(entry, secondary) {
            Ok((group, report)) => {
                groups.push(group);
                reports.push(report);
            }
            Err(e) => {
                log::warn!("skipping `{}`: {e}", entry.headword());
                skipped.push(SkippedHeadword {
                    headword: entry.headword().to_string(),
                    reason: e.to_string(),
                });
            }
        }
    }
    if groups.is_empty() {
        return Err(WordlistError::EmptyList);
    }
    Ok(Preprocessed {
        groups: WordGroupSet::new(groups, source_label)?,
        reports,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::{AcceptAll, FixtureTagger};

    #[test]
    fn tagging_prompt_lists_tags() {
        let p = build_tagging_prompt("formula");
        assert!(p.starts_with("Which of the following Penn Treebank part-of-speech tags can the English word \"formula\""));
        assert!(p.contains("Tags: NN, NNS, VB,"));
    }

    #[test]
    fn tagging_response() {
        let tags =
            parse_tagging_response("```json\n{\"tags\": [\"NN\", \"NNS\", \"XX\"]}\n```").unwrap();
        assert_eq!(tags, BTreeSet::from([PosTag::NN, PosTag::NNS]));
        assert!(parse_tagging_response("{\"pos\": []}").is_err());
    }

    #[test]
    fn consensus_drops_and_skips() {
        let morph = Morphology::bundled();
        let entries = vec![
            HeadwordEntry::new("formula", 1).unwrap(),
            HeadwordEntry::new("create", 1).unwrap(),
        ];
        let fixture = FixtureTagger::parse("formula JJ\ncreate VB VBZ\n").unwrap();
        let out = preprocess(&entries, &morph, &fixture, "t").unwrap();
        assert_eq!(out.groups.len(), 1);
        assert_eq!(out.skipped[0].headword, "formula");
        let create = out.groups.get("create").unwrap();
        assert_eq!(
            create.tags().collect::<Vec<_>>(),
            vec![PosTag::VB, PosTag::VBZ]
        );
        assert!(out.reports[0].rejected_primary_only.contains(&PosTag::VBD));

        let all = preprocess(&entries, &morph, &AcceptAll, "t").unwrap();
        assert_eq!(all.groups.len(), 2);
        assert!(all.skipped.is_empty());
    }
}
