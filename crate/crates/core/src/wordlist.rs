//! Headword lists and persisted word-group files.
//!
//! Word groups are stored in long format, one row per (headword, tag):
//!
//! ```text
//! headword,sublist,pos_tag,forms
//! distribute,1,VB,distribute
//! distribute,1,VBD,distributed
//! distribute,1,VBG,distributing
//! distribute,1,VBP,distribute
//! distribute,1,VBZ,distributes
//! ```
//!
//! `forms` is `|`-separated. Rows of one headword are contiguous.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use crate::morphology::{is_valid_word, GroupError, PosTag, WordGroup};

pub const HEADWORD_HEADER: [&str; 2] = ["headword", "sublist"];
pub const WORD_GROUP_HEADER: [&str; 4] = ["headword", "sublist", "pos_tag", "forms"];

#[derive(Debug, thiserror::Error)]
pub enum WordlistError {
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("list contains no entries")]
    EmptyList,
    #[error("duplicate headword `{0}`")]
    DuplicateHeadword(String),
    #[error("unknown POS tag `{tag}` at line {line}")]
    UnknownPosTag { line: u64, tag: String },
    #[error(transparent)]
    InvalidGroup(#[from] GroupError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn malformed(line: u64, message: impl Into<String>) -> WordlistError {
    WordlistError::MalformedCsv {
        line,
        message: message.into(),
    }
}

impl From<csv::Error> for WordlistError {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(e) => WordlistError::Io(e),
            kind => malformed(line, format!("{kind:?}")),
        }
    }
}

/// A headword and the sublist it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HeadwordEntry {
    headword: String,
    sublist_id: u32,
}

impl HeadwordEntry {
    /// Lower-cases `headword`; `None` when it is not a single word or the
    /// sublist is zero.
    pub fn new(headword: &str, sublist_id: u32) -> Option<Self> {
        let headword = headword.trim().to_lowercase();
        (is_valid_word(&headword) && sublist_id >= 1).then_some(HeadwordEntry {
            headword,
            sublist_id,
        })
    }

    pub fn headword(&self) -> &str {
        &self.headword
    }

    pub fn sublist_id(&self) -> u32 {
        self.sublist_id
    }
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<(), WordlistError> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(malformed(
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

fn parse_sublist(line: u64, field: &str) -> Result<u32, WordlistError> {
    match field.trim().parse::<u32>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(malformed(line, format!("invalid sublist `{field}`"))),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

/// Parses a `headword,sublist` CSV.
pub fn parse_headword_list<R: Read>(input: R) -> Result<Vec<HeadwordEntry>, WordlistError> {
    let mut rdr = reader(input);
    check_header(rdr.headers()?, &HEADWORD_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw = record[0].trim();
        if raw.is_empty() {
            return Err(malformed(line, "blank headword"));
        }
        let sublist = parse_sublist(line, &record[1])?;
        let entry = HeadwordEntry::new(raw, sublist)
            .ok_or_else(|| malformed(line, format!("invalid headword `{raw}`")))?;
        out.push(entry);
    }
    if out.is_empty() {
        return Err(WordlistError::EmptyList);
    }
    Ok(out)
}

pub fn read_headword_list(path: &Path) -> Result<Vec<HeadwordEntry>, WordlistError> {
    parse_headword_list(BufReader::new(File::open(path)?))
}

/// Ordered, headword-unique collection of word groups.
///
/// Order is significant: seeded selection walks the groups in this order.
#[derive(Debug, Clone)]
pub struct WordGroupSet {
    groups: Vec<WordGroup>,
    source_label: String,
}

// source_label is provenance only and is not persisted
impl PartialEq for WordGroupSet {
    fn eq(&self, other: &Self) -> bool {
        self.groups == other.groups
    }
}

impl WordGroupSet {
    pub fn new(
        groups: Vec<WordGroup>,
        source_label: impl Into<String>,
    ) -> Result<Self, WordlistError> {
        let mut seen = HashSet::new();
        for g in &groups {
            if !seen.insert(g.headword().to_string()) {
                return Err(WordlistError::DuplicateHeadword(g.headword().to_string()));
            }
        }
        Ok(WordGroupSet {
            groups,
            source_label: source_label.into(),
        })
    }

    pub fn groups(&self) -> &[WordGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn get(&self, headword: &str) -> Option<&WordGroup> {
        self.groups.iter().find(|g| g.headword() == headword)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, WordGroup> {
        self.groups.iter()
    }
}

impl<'a> IntoIterator for &'a WordGroupSet {
    type Item = &'a WordGroup;
    type IntoIter = std::slice::Iter<'a, WordGroup>;

    fn into_iter(self) -> Self::IntoIter {
        self.groups.iter()
    }
}

pub fn write_word_groups<W: Write>(set: &WordGroupSet, output: W) -> Result<(), WordlistError> {
    if set.is_empty() {
        return Err(WordlistError::EmptyList);
    }
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record(WORD_GROUP_HEADER)?;
    for group in set {
        let sublist = group.sublist_id().to_string();
        for (tag, forms) in group.inflections() {
            let joined = forms
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
                .join("|");
            wtr.write_record([group.headword(), &sublist, tag.as_str(), &joined])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_word_groups_to_path(set: &WordGroupSet, path: &Path) -> Result<(), WordlistError> {
    if set.is_empty() {
        return Err(WordlistError::EmptyList);
    }
    write_word_groups(set, File::create(path)?)
}

pub fn load_word_groups<R: Read>(
    input: R,
    source_label: &str,
) -> Result<WordGroupSet, WordlistError> {
    let mut rdr = reader(input);
    check_header(rdr.headers()?, &WORD_GROUP_HEADER)?;

    struct Pending {
        headword: String,
        sublist: u32,
        inflections: BTreeMap<PosTag, BTreeSet<String>>,
    }

    let mut groups = Vec::new();
    let mut finished: HashSet<String> = HashSet::new();
    let mut current: Option<Pending> = None;

    let finish = |p: Pending| -> Result<WordGroup, WordlistError> {
        Ok(WordGroup::new(p.headword, p.sublist, p.inflections)?)
    };

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let headword = record[0].trim().to_lowercase();
        if headword.is_empty() {
            return Err(malformed(line, "blank headword"));
        }
        let sublist = parse_sublist(line, &record[1])?;
        let tag_field = record[2].trim();
        let tag: PosTag = tag_field
            .parse()
            .map_err(|_| WordlistError::UnknownPosTag {
                line,
                tag: tag_field.to_string(),
            })?;
        let forms: BTreeSet<String> = record[3]
            .split('|')
            .map(|f| f.trim().to_lowercase())
            .filter(|f| !f.is_empty())
            .collect();
        if forms.is_empty() {
            return Err(malformed(line, "empty forms"));
        }

        let continues = current.as_ref().is_some_and(|p| p.headword == headword);
        if !continues {
            if let Some(done) = current.take() {
                finished.insert(done.headword.clone());
                groups.push(finish(done)?);
            }
            if finished.contains(&headword) {
                return Err(WordlistError::DuplicateHeadword(headword));
            }
            current = Some(Pending {
                headword: headword.clone(),
                sublist,
                inflections: BTreeMap::new(),
            });
        }
        let pending = current.as_mut().expect("set above");
        if pending.sublist != sublist {
            return Err(malformed(
                line,
                format!("conflicting sublist for `{headword}`"),
            ));
        }
        if pending.inflections.insert(tag, forms).is_some() {
            return Err(WordlistError::DuplicateHeadword(headword));
        }
    }
    if let Some(done) = current.take() {
        groups.push(finish(done)?);
    }
    if groups.is_empty() {
        return Err(WordlistError::EmptyList);
    }
    WordGroupSet::new(groups, source_label)
}

pub fn load_word_groups_from_path(path: &Path) -> Result<WordGroupSet, WordlistError> {
    let label = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_word_groups(BufReader::new(File::open(path)?), &label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn distribute() -> WordGroup {
        let mut infl = BTreeMap::new();
        for (tag, form) in [
            (PosTag::VB, "distribute"),
            (PosTag::VBD, "distributed"),
            (PosTag::VBG, "distributing"),
            (PosTag::VBP, "distribute"),
            (PosTag::VBZ, "distributes"),
        ] {
            infl.insert(tag, BTreeSet::from([form.to_string()]));
        }
        WordGroup::new("distribute", 1, infl).unwrap()
    }

    #[test]
    fn parses_single_row() {
        let entries = parse_headword_list("headword,sublist\nanalyse,1\n".as_bytes()).unwrap();
        assert_eq!(entries, vec![HeadwordEntry::new("analyse", 1).unwrap()]);
    }

    #[test]
    fn lowercases_headwords() {
        let entries = parse_headword_list("headword,sublist\nAnalyse,2\n".as_bytes()).unwrap();
        assert_eq!(entries[0].headword(), "analyse");
        assert_eq!(entries[0].sublist_id(), 2);
    }

    #[test]
    fn rejects_blank_headword() {
        let err = parse_headword_list("headword,sublist\n,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, WordlistError::MalformedCsv { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_header_and_shape() {
        assert!(matches!(
            parse_headword_list("word,list\nanalyse,1\n".as_bytes()),
            Err(WordlistError::MalformedCsv { .. })
        ));
        assert!(matches!(
            parse_headword_list("headword,sublist\nanalyse,1,extra\n".as_bytes()),
            Err(WordlistError::MalformedCsv { .. })
        ));
        assert!(matches!(
            parse_headword_list("headword,sublist\nanalyse,0\n".as_bytes()),
            Err(WordlistError::MalformedCsv { .. })
        ));
        assert!(matches!(
            parse_headword_list("headword,sublist\nnot a word,1\n".as_bytes()),
            Err(WordlistError::MalformedCsv { .. })
        ));
    }

    #[test]
    fn rejects_empty_list() {
        assert!(matches!(
            parse_headword_list("headword,sublist\n".as_bytes()),
            Err(WordlistError::EmptyList)
        ));
    }

    #[test]
    fn distribute_round_trip() {
        let set = WordGroupSet::new(vec![distribute()], "t").unwrap();
        let mut buf = Vec::new();
        write_word_groups(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "headword,sublist,pos_tag,forms\n\
             distribute,1,VB,distribute\n\
             distribute,1,VBD,distributed\n\
             distribute,1,VBG,distributing\n\
             distribute,1,VBP,distribute\n\
             distribute,1,VBZ,distributes\n"
        );
        assert_eq!(load_word_groups(&buf[..], "t").unwrap(), set);
    }

    #[test]
    fn empty_set_cannot_be_written() {
        let set = WordGroupSet::new(vec![], "t").unwrap();
        assert!(matches!(
            write_word_groups(&set, Vec::new()),
            Err(WordlistError::EmptyList)
        ));
    }

    #[test]
    fn duplicate_headword_rejected() {
        let text = "headword,sublist,pos_tag,forms\n\
                    analyse,1,VB,analyse\n\
                    area,1,NN,area\n\
                    analyse,1,VBZ,analyses\n";
        assert!(matches!(
            load_word_groups(text.as_bytes(), "t"),
            Err(WordlistError::DuplicateHeadword(h)) if h == "analyse"
        ));
        let text = "headword,sublist,pos_tag,forms\nanalyse,1,VB,analyse\nanalyse,1,VB,analyse\n";
        assert!(matches!(
            load_word_groups(text.as_bytes(), "t"),
            Err(WordlistError::DuplicateHeadword(_))
        ));
    }

    #[test]
    fn unknown_tag_rejected() {
        let text = "headword,sublist,pos_tag,forms\nanalyse,1,XX,analyse\n";
        assert!(matches!(
            load_word_groups(text.as_bytes(), "t"),
            Err(WordlistError::UnknownPosTag { tag, .. }) if tag == "XX"
        ));
    }

    #[test]
    fn latin_plural_rejected_on_load() {
        let text = "headword,sublist,pos_tag,forms\narea,1,NNS,areas|areae\n";
        assert!(matches!(
            load_word_groups(text.as_bytes(), "t"),
            Err(WordlistError::InvalidGroup(GroupError::LatinPlural { .. }))
        ));
    }
}
