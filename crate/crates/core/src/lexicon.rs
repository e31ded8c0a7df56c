//! Verbal labels bound to fuzzy meanings.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::UnitFuzzyNumber;

/// Distances closer than this are treated as ties in [`Lexicon::nearest_label`].
const TIE_EPS: f64 = 1e-12;
/// Uncovered stretches narrower than this are rounding artefacts.
const GAP_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LexiconError {
    #[error("default lexicon size must be between 2 and 9, got {0}")]
    SizeOutOfRange(usize),
    #[error("lexicon is invalid: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticLabel {
    pub name: String,
    pub meaning: UnitFuzzyNumber,
}

impl LinguisticLabel {
    pub fn new(name: impl Into<String>, meaning: UnitFuzzyNumber) -> Self {
        Self {
            name: name.into(),
            meaning,
        }
    }
}

/// A problem found by [`validate_labels`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewLabels { count: usize },
    EmptyName { index: usize },
    DuplicateName { name: String },
    /// Medians must strictly increase along the label order.
    Ordering { index: usize, previous: f64, median: f64 },
    /// Open stretch of [0, 1] where no label applies at all.
    CoverageGap { from: f64, to: f64 },
}

impl Violation {
    /// Coverage gaps are reported but do not make a lexicon unusable.
    pub fn is_warning(&self) -> bool {
        matches!(self, Violation::CoverageGap { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewLabels { count } => write!(f, "need at least 2 labels, got {count}"),
            Violation::EmptyName { index } => write!(f, "label {index} has an empty name"),
            Violation::DuplicateName { name } => write!(f, "duplicate label name {name:?}"),
            Violation::Ordering {
                index,
                previous,
                median,
            } => write!(
                f,
                "label {index} has median {median}, not above the previous median {previous}"
            ),
            Violation::CoverageGap { from, to } => {
                write!(f, "no label applies on ({from}, {to})")
            }
        }
    }
}

/// Checks ordering, naming and coverage of a label list.
pub fn validate_labels(labels: &[LinguisticLabel]) -> Vec<Violation> {
    let mut out = Vec::new();
    if labels.len() < 2 {
        out.push(Violation::TooFewLabels {
            count: labels.len(),
        });
    }
    let mut seen = HashSet::new();
    for (i, l) in labels.iter().enumerate() {
        if l.name.trim().is_empty() {
            out.push(Violation::EmptyName { index: i });
        } else if !seen.insert(l.name.as_str()) {
            out.push(Violation::DuplicateName {
                name: l.name.clone(),
            });
        }
    }
    for (i, w) in labels.windows(2).enumerate() {
        let (p, m) = (w[0].meaning.median(), w[1].meaning.median());
        if m <= p {
            out.push(Violation::Ordering {
                index: i + 1,
                previous: p,
                median: m,
            });
        }
    }
    out.extend(coverage_gaps(labels));
    out
}

/// Maximal open intervals of positive length where every membership is zero.
fn coverage_gaps(labels: &[LinguisticLabel]) -> Vec<Violation> {
    // a label is positive on (a, d), or on the single point of a crisp number
    let mut spans: Vec<(f64, f64)> = labels
        .iter()
        .map(|l| (l.meaning.a(), l.meaning.d()))
        .collect();
    spans.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut gaps = Vec::new();
    let mut reach = 0.0_f64;
    for (lo, hi) in spans {
        if lo > reach + GAP_EPS {
            gaps.push(Violation::CoverageGap { from: reach, to: lo });
        }
        reach = reach.max(hi);
    }
    if reach < 1.0 - GAP_EPS {
        gaps.push(Violation::CoverageGap {
            from: reach,
            to: 1.0,
        });
    }
    gaps
}

#[derive(Serialize, Deserialize)]
struct RawLexicon {
    owner: String,
    labels: Vec<LinguisticLabel>,
}

/// An owner's ordered set of verbal labels.
///
/// Labels are kept in strictly increasing order of their medians; lexicons
/// with fewer than two labels, duplicate names or misordered medians cannot
/// be constructed. Coverage gaps are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLexicon", into = "RawLexicon")]
pub struct Lexicon {
    owner: String,
    labels: Vec<LinguisticLabel>,
}

impl TryFrom<RawLexicon> for Lexicon {
    type Error = LexiconError;

    fn try_from(raw: RawLexicon) -> Result<Self, Self::Error> {
        Lexicon::new(raw.owner, raw.labels)
    }
}

impl From<Lexicon> for RawLexicon {
    fn from(l: Lexicon) -> Self {
        RawLexicon {
            owner: l.owner,
            labels: l.labels,
        }
    }
}

impl Lexicon {
    pub fn new(owner: impl Into<String>, labels: Vec<LinguisticLabel>) -> Result<Self, LexiconError> {
        let errors: Vec<_> = validate_labels(&labels)
            .into_iter()
            .filter(|v| !v.is_warning())
            .collect();
        if !errors.is_empty() {
            return Err(LexiconError::Invalid(errors));
        }
        Ok(Self {
            owner: owner.into(),
            labels,
        })
    }

    /// Like [`Lexicon::new`] but sorts the labels by median first.
    pub fn from_unsorted(
        owner: impl Into<String>,
        mut labels: Vec<LinguisticLabel>,
    ) -> Result<Self, LexiconError> {
        labels.sort_by(|x, y| x.meaning.median().total_cmp(&y.meaning.median()));
        Self::new(owner, labels)
    }

    /// `k` equidistant, equally shaped labels named `L1..Lk`.
    ///
    /// Label `i` has median `(2i - 1) / 2k`, core half-width `1 / 4k` and
    /// support half-width `1 / 2k`.
    pub fn default_lexicon(k: usize) -> Result<Self, LexiconError> {
        if !(2..=9).contains(&k) {
            return Err(LexiconError::SizeOutOfRange(k));
        }
        let kf = k as f64;
        let labels = (1..=k)
            .map(|i| {
                let m = (2.0 * i as f64 - 1.0) / (2.0 * kf);
                let core = 1.0 / (4.0 * kf);
                let supp = 1.0 / (2.0 * kf);
                let meaning =
                    UnitFuzzyNumber::from_corners_clamped([m - supp, m - core, m + core, m + supp]);
                LinguisticLabel::new(format!("L{i}"), meaning)
            })
            .collect();
        Self::new("default", labels)
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn with_owner(mut self, owner: impl Into<String>) -> Self {
        self.owner = owner.into();
        self
    }

    pub fn labels(&self) -> &[LinguisticLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&LinguisticLabel> {
        self.labels.iter().find(|l| l.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.name == name)
    }

    /// Replaces the label names, keeping meanings and order.
    pub fn renamed<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, LexiconError> {
        let labels = self
            .labels
            .iter()
            .zip(names)
            .map(|(l, n)| LinguisticLabel::new(n.as_ref(), l.meaning))
            .collect::<Vec<_>>();
        if labels.len() != self.labels.len() {
            return Err(LexiconError::Invalid(vec![Violation::TooFewLabels {
                count: names.len(),
            }]));
        }
        Self::new(self.owner.clone(), labels)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_labels(&self.labels)
    }

    /// Index of the label closest to `f`; ties go to the lower median.
    pub fn nearest_index(&self, f: &UnitFuzzyNumber) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, l) in self.labels.iter().enumerate() {
            let d = f.distance(&l.meaning);
            if d < best_d - TIE_EPS {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Linguistic approximation of `f`.
    pub fn nearest_label(&self, f: &UnitFuzzyNumber) -> &LinguisticLabel {
        &self.labels[self.nearest_index(f)]
    }
}
