//! Inter-rater agreement, third-rater resolution, error-category tallies and
//! well-formedness rates.

mod annotation;
mod ratings;

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use self::annotation::{
    read_labels_csv, tally, AnnotationLabel, Tally, TallyRow, Vocabulary, VocabularyError,
};
pub use self::ratings::{
    agreement_from_ratings, read_ratings_csv, write_ratings_csv, AgreementReport, KindAgreement,
    RatingsError, ReviewRecord, TargetId, TargetKind,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("rating sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no ratings to compare")]
    EmptyInput,
    #[error("raters disagree at index {0} and no tie-break verdict was given")]
    MissingTieBreak(usize),
    #[error("{count} verdicts exceed a universe of {universe}")]
    UniverseTooSmall { count: usize, universe: usize },
    #[error("unknown annotation category `{category}` / `{subcategory}`")]
    UnknownCategory {
        category: String,
        subcategory: String,
    },
    #[error("fewer than two reviewers rated a common target")]
    InsufficientOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Appropriate,
    Inappropriate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Appropriate => "appropriate",
            Verdict::Inappropriate => "inappropriate",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "appropriate" => Ok(Verdict::Appropriate),
            "inappropriate" => Ok(Verdict::Inappropriate),
            _ => Err(format!(
                "verdict must be appropriate or inappropriate, got `{s}`"
            )),
        }
    }
}

/// Agreement between two raters over the same targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementStats<T> {
    /// Cohen's kappa.
    pub kappa: T,
    pub percent_agreement: T,
    /// Chance agreement from the raters' marginal proportions.
    pub expected_agreement: T,
    pub n: usize,
    pub matches: usize,
    /// Set when chance agreement is 1 (both raters used one and the same
    /// label throughout); kappa is then reported as 1.
    pub degenerate: bool,
}

pub type AgreementStats64 = AgreementStats<f64>;
pub type AgreementStats32 = AgreementStats<f32>;

impl<T> AgreementStats<T> {
    pub fn percent_agreement_exact(&self) -> Ratio<u64> {
        Ratio::new(self.matches as u64, self.n as u64)
    }
}

fn check_lengths<L>(a: &[L], b: &[L]) -> Result<usize, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(a.len())
}

fn cast<T: Float>(x: u128) -> T {
    T::from(x).expect("count representable as float")
}

/// Observed and chance agreement, kappa and the degenerate-case flag.
///
/// Kappa is evaluated as `(m·n − Σ ca·cb) / (n² − Σ ca·cb)` over integer
/// counts, which equals `(p_o − p_e) / (1 − p_e)` with a single rounding.
pub fn agreement<L, T>(a: &[L], b: &[L]) -> Result<AgreementStats<T>, EvalError>
where
    L: Eq + Hash,
    T: Float,
{
    let n = check_lengths(a, b)?;
    let matches = a.iter().zip(b).filter(|(x, y)| x == y).count();
    let mut counts: HashMap<&L, (u128, u128)> = HashMap::new();
    for x in a {
        counts.entry(x).or_default().0 += 1;
    }
    for y in b {
        counts.entry(y).or_default().1 += 1;
    }
    let chance: u128 = counts.values().map(|(ca, cb)| ca * cb).sum();
    let (n_big, m_big) = (n as u128, matches as u128);
    let square = n_big * n_big;
    let degenerate = chance == square;
    let kappa = if degenerate {
        T::one()
    } else {
        let num = cast::<T>(m_big * n_big) - cast::<T>(chance);
        num / cast::<T>(square - chance)
    };
    Ok(AgreementStats {
        kappa,
        percent_agreement: cast::<T>(m_big) / cast::<T>(n_big),
        expected_agreement: cast::<T>(chance) / cast::<T>(square),
        n,
        matches,
        degenerate,
    })
}

pub fn cohen_kappa<L: Eq + Hash, T: Float>(a: &[L], b: &[L]) -> Result<T, EvalError> {
    agreement(a, b).map(|s: AgreementStats<T>| s.kappa)
}

pub fn percent_agreement<L: Eq + Hash, T: Float>(a: &[L], b: &[L]) -> Result<T, EvalError> {
    agreement(a, b).map(|s: AgreementStats<T>| s.percent_agreement)
}

/// Final verdicts: the shared verdict where the raters agree, the third
/// rater's where they do not.
pub fn resolve<L: Eq + Clone>(a: &[L], b: &[L], third: &[Option<L>]) -> Result<Vec<L>, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            if x == y {
                Ok(x.clone())
            } else {
                third
                    .get(i)
                    .cloned()
                    .flatten()
                    .ok_or(EvalError::MissingTieBreak(i))
            }
        })
        .collect()
}

/// A proportion kept both exactly and as a float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate<T> {
    pub count: u64,
    pub total: u64,
    pub value: T,
}

pub type Rate64 = Rate<f64>;

impl<T> Rate<T> {
    pub fn exact(&self) -> Ratio<u64> {
        Ratio::new(self.count, self.total)
    }
}

impl<T: Float> Rate<T> {
    pub fn new(count: u64, total: u64) -> Result<Self, EvalError> {
        if total == 0 {
            return Err(EvalError::EmptyInput);
        }
        if count > total {
            return Err(EvalError::UniverseTooSmall {
                count: count as usize,
                universe: total as usize,
            });
        }
        Ok(Rate {
            count,
            total,
            value: cast::<T>(count as u128) / cast::<T>(total as u128),
        })
    }
}

/// Share of the `universe` judged appropriate in `final_verdicts`.
pub fn wellformedness<T: Float>(
    final_verdicts: &[Verdict],
    universe: usize,
) -> Result<Rate<T>, EvalError> {
    if final_verdicts.len() > universe {
        return Err(EvalError::UniverseTooSmall {
            count: final_verdicts.len(),
            universe,
        });
    }
    let appropriate = final_verdicts
        .iter()
        .filter(|v| **v == Verdict::Appropriate)
        .count();
    Rate::new(appropriate as u64, universe as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Verdict::{Appropriate as A, Inappropriate as I};

    #[test]
    fn kappa_examples() {
        let k: f64 = cohen_kappa(&[A, A, I, I], &[A, I, A, I]).unwrap();
        assert!(k.abs() < 1e-15);
        let s: AgreementStats64 = agreement(&[A, A, A, I], &[A, A, I, I]).unwrap();
        assert!((s.expected_agreement - 0.5).abs() < 1e-15);
        assert!((s.kappa - 0.5).abs() < 1e-15);
        let k: f64 = cohen_kappa(&[A, I, A], &[A, I, A]).unwrap();
        assert_eq!(k, 1.0);
    }

    #[test]
    fn kappa_degenerate() {
        let s: AgreementStats64 = agreement(&[A, A], &[A, A]).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.kappa, 1.0);
        let s: AgreementStats64 = agreement(&[A, A], &[I, I]).unwrap();
        assert!(!s.degenerate);
        assert_eq!(s.kappa, 0.0);
    }

    #[test]
    fn kappa_errors() {
        assert_eq!(
            cohen_kappa::<_, f64>(&[A], &[A, I]),
            Err(EvalError::LengthMismatch(1, 2))
        );
        assert_eq!(
            cohen_kappa::<Verdict, f64>(&[], &[]),
            Err(EvalError::EmptyInput)
        );
    }

    #[test]
    fn generic_over_float() {
        let k32: f32 = cohen_kappa(&[A, A, I, I], &[A, A, I, A]).unwrap();
        let k64: f64 = cohen_kappa(&[A, A, I, I], &[A, A, I, A]).unwrap();
        assert!((k32 as f64 - k64).abs() < 1e-6);
    }

    #[test]
    fn percent_agreement_examples() {
        let mut a = vec![A; 60];
        let b = a.clone();
        for v in a.iter_mut().take(7) {
            *v = I;
        }
        let s: AgreementStats64 = agreement(&a, &b).unwrap();
        assert_eq!(s.matches, 53);
        assert_eq!(s.percent_agreement_exact(), Ratio::new(53, 60));
        assert!((s.percent_agreement - 0.8833333333333333).abs() < 1e-15);
        let p: f64 = percent_agreement(&[A, I], &[I, A]).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn resolution() {
        assert_eq!(resolve(&[A, I], &[A, I], &[]).unwrap(), vec![A, I]);
        assert_eq!(
            resolve(&[A, I], &[A, A], &[None, Some(I)]).unwrap(),
            vec![A, I]
        );
        assert_eq!(
            resolve(&[A, I], &[I, I], &[None]),
            Err(EvalError::MissingTieBreak(0))
        );
    }

    #[test]
    fn rates() {
        let mut stems = vec![A; 45];
        stems.extend([I; 15]);
        let r: Rate64 = wellformedness(&stems, 60).unwrap();
        assert_eq!(r.exact(), Ratio::new(3, 4));
        assert_eq!(r.value, 0.75);
        let mut ds = vec![A; 119];
        ds.extend([I; 59]);
        let r: Rate64 = wellformedness(&ds, 178).unwrap();
        assert_eq!(r.exact(), Ratio::new(119, 178));
        assert!((r.value - 0.6685).abs() < 5e-5);
        let r: Rate64 = wellformedness(&[], 10).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(wellformedness::<f64>(&[A, A], 1).is_err());
    }
}
