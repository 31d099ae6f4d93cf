use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{agreement, resolve, wellformedness, AgreementStats64, EvalError, Rate64, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Stem,
    Distractor,
}

impl TargetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Stem => "stem",
            TargetKind::Distractor => "distractor",
        }
    }
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stem" => Ok(TargetKind::Stem),
            "distractor" => Ok(TargetKind::Distractor),
            _ => Err(format!("target kind must be stem or distractor, got `{s}`")),
        }
    }
}

/// `12:stem` or `12:distractor_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TargetId {
    pub item_id: u32,
    /// 0 for the stem, 1–3 for distractor slots.
    pub slot: u8,
}

impl TargetId {
    pub fn stem(item_id: u32) -> Self {
        TargetId { item_id, slot: 0 }
    }

    pub fn distractor(item_id: u32, slot: u8) -> Self {
        assert!((1..=3).contains(&slot), "distractor slots are 1-3");
        TargetId { item_id, slot }
    }

    pub fn kind(&self) -> TargetKind {
        if self.slot == 0 {
            TargetKind::Stem
        } else {
            TargetKind::Distractor
        }
    }

    /// `stem` or `distractor_k`.
    pub fn target_name(&self) -> String {
        match self.slot {
            0 => "stem".to_string(),
            k => format!("distractor_{k}"),
        }
    }

    pub fn parse_target_name(item_id: u32, name: &str) -> Result<Self, String> {
        if name == "stem" {
            return Ok(TargetId::stem(item_id));
        }
        match name
            .strip_prefix("distractor_")
            .and_then(|k| k.parse::<u8>().ok())
        {
            Some(k @ 1..=3) => Ok(TargetId::distractor(item_id, k)),
            _ => Err(format!("unknown target `{name}`")),
        }
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.item_id, self.target_name())
    }
}

impl FromStr for TargetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (item, name) = s
            .split_once(':')
            .ok_or_else(|| format!("target id `{s}` is not `item:target`"))?;
        let item_id = item
            .parse()
            .map_err(|_| format!("target id `{s}` has a bad item number"))?;
        Self::parse_target_name(item_id, name)
    }
}

impl TryFrom<String> for TargetId {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TargetId> for String {
    fn from(t: TargetId) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub target_id: TargetId,
    pub target_kind: TargetKind,
    pub reviewer_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub comment: String,
}

impl ReviewRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.reviewer_id.trim().is_empty() {
            return Err("reviewer_id is empty".into());
        }
        if self.target_id.kind() != self.target_kind {
            return Err(format!(
                "target `{}` is not a {}",
                self.target_id,
                self.target_kind.as_str()
            ));
        }
        if self.verdict == Verdict::Inappropriate && self.comment.trim().is_empty() {
            return Err("an inappropriate verdict needs a comment".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RatingsError {
    #[error("ratings line {line}: {message}")]
    Invalid { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_ratings_csv<R: Read>(input: R) -> Result<Vec<ReviewRecord>, RatingsError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (idx, rec) in rdr.deserialize::<ReviewRecord>().enumerate() {
        let line = idx as u64 + 2;
        let rec = rec.map_err(|e| RatingsError::Invalid {
            line: e.position().map_or(line, |p| p.line()),
            message: e.to_string(),
        })?;
        rec.validate()
            .map_err(|message| RatingsError::Invalid { line, message })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_ratings_csv<W: Write>(records: &[ReviewRecord], output: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    for r in records {
        wtr.serialize(r)?;
    }
    if records.is_empty() {
        wtr.write_record([
            "target_id",
            "target_kind",
            "reviewer_id",
            "verdict",
            "comment",
        ])?;
    }
    wtr.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindAgreement {
    #[serde(flatten)]
    pub stats: AgreementStats64,
    pub disagreements: usize,
    /// Well-formedness after the tie-breaker's verdicts, when every
    /// disagreement has one.
    pub resolved: Option<Rate64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub reviewers: [String; 2],
    pub tie_breaker: Option<String>,
    pub stem: Option<KindAgreement>,
    pub distractor: Option<KindAgreement>,
}

impl AgreementReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Reviewers: {} and {}",
            self.reviewers[0], self.reviewers[1]
        );
        if let Some(t) = &self.tie_breaker {
            let _ = writeln!(out, "Tie-breaker: {t}");
        }
        for (name, kind) in [("Stems", &self.stem), ("Distractors", &self.distractor)] {
            let Some(k) = kind else {
                let _ = writeln!(out, "{name}: no overlapping ratings");
                continue;
            };
            let s = &k.stats;
            let _ = writeln!(
                out,
                "{name}: n={} kappa={:.4}{} agreement={:.4} ({}/{}) disagreements={}",
                s.n,
                s.kappa,
                if s.degenerate { " (degenerate)" } else { "" },
                s.percent_agreement,
                s.matches,
                s.n,
                k.disagreements
            );
            if let Some(r) = &k.resolved {
                let _ = writeln!(
                    out,
                    "{name}: well-formed {}/{} = {:.4}",
                    r.count, r.total, r.value
                );
            }
        }
        out
    }
}

/// Agreement of the first two reviewers (by sorted id) on the targets both
/// rated, per target kind. A third reviewer, if any, is the tie-breaker.
/// Repeated ratings of one target by one reviewer: the last one counts.
pub fn agreement_from_ratings(records: &[ReviewRecord]) -> Result<AgreementReport, EvalError> {
    let mut latest: BTreeMap<&str, BTreeMap<TargetId, Verdict>> = BTreeMap::new();
    for r in records {
        latest
            .entry(r.reviewer_id.as_str())
            .or_default()
            .insert(r.target_id, r.verdict);
    }
    let reviewers: Vec<&str> = latest.keys().copied().collect();
    if reviewers.len() < 2 {
        return Err(EvalError::InsufficientOverlap);
    }
    let (ra, rb) = (&latest[reviewers[0]], &latest[reviewers[1]]);
    let third = reviewers.get(2).map(|t| &latest[*t]);
    let per_kind = |kind: TargetKind| -> Option<KindAgreement> {
        let shared: BTreeSet<&TargetId> = ra
            .keys()
            .filter(|t| t.kind() == kind && rb.contains_key(t))
            .collect();
        if shared.is_empty() {
            return None;
        }
        let a: Vec<Verdict> = shared.iter().map(|t| ra[*t]).collect();
        let b: Vec<Verdict> = shared.iter().map(|t| rb[*t]).collect();
        let stats: AgreementStats64 = agreement(&a, &b).expect("equal non-empty sequences");
        let tie: Vec<Option<Verdict>> = shared
            .iter()
            .map(|t| third.and_then(|m| m.get(*t).copied()))
            .collect();
        let resolved = resolve(&a, &b, &tie)
            .ok()
            .and_then(|f| wellformedness(&f, f.len()).ok());
        Some(KindAgreement {
            disagreements: stats.n - stats.matches,
            stats,
            resolved,
        })
    };
    let stem = per_kind(TargetKind::Stem);
    let distractor = per_kind(TargetKind::Distractor);
    if stem.is_none() && distractor.is_none() {
        return Err(EvalError::InsufficientOverlap);
    }
    Ok(AgreementReport {
        reviewers: [reviewers[0].to_string(), reviewers[1].to_string()],
        tie_breaker: reviewers.get(2).map(|s| s.to_string()),
        stem,
        distractor,
    })
}
