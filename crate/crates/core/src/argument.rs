//! Toulmin arguments with fuzzy quantifiers.
//!
//! A warrant turns the credibility of its premises into a line of support
//! for the claim: the weakest premise is chained with the warrant's
//! quantifier and then with its backing. Rebuttals discount the line they
//! target, or the claim after all lines have been combined.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{FuzzyError, UnitFuzzyNumber};
use crate::lexicon::{Lexicon, LinguisticLabel};

pub const DEFAULT_AGREEMENT_TOLERANCE: f64 = 0.15;
pub const DEFAULT_POOLING_THETA: f64 = 0.5;
/// Reserved rebuttal target naming the claim itself.
pub const CLAIM: &str = "claim";

#[derive(Debug, Error, PartialEq)]
pub enum ArgumentError {
    #[error("unknown quantifier {0:?}")]
    UnknownQuantifier(String),
    #[error("quantifier {0:?} has no senses")]
    NoSenses(String),
    #[error("sense {index} out of range: {term:?} has {count}")]
    SenseOutOfRange { term: String, index: usize, count: usize },
    #[error(transparent)]
    InvalidNumber(#[from] FuzzyError),
    #[error("invalid argument: {0}")]
    Structure(String),
    #[error("label {0:?} is not in the lexicon")]
    UnknownLabel(String),
    #[error("pooling needs at least 2 evaluations, got {0}")]
    TooFewToPool(usize),
    #[error("knowledge base of {0:?} is empty")]
    EmptyKnowledgeBase(String),
    #[error("trace step {step} does not replay: recorded {recorded:?}, recomputed {recomputed:?}")]
    Replay {
        step: usize,
        recorded: UnitFuzzyNumber,
        recomputed: UnitFuzzyNumber,
    },
}

fn structure(msg: impl Into<String>) -> ArgumentError {
    ArgumentError::Structure(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantifierSense {
    pub sense: String,
    pub meaning: UnitFuzzyNumber,
}

/// Terms mapped to one or more proportion meanings on [0, 1].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawQuantifiers", into = "RawQuantifiers")]
pub struct QuantifierLexicon {
    terms: BTreeMap<String, Vec<QuantifierSense>>,
}

#[derive(Serialize, Deserialize)]
struct RawQuantifiers {
    terms: BTreeMap<String, Vec<QuantifierSense>>,
}

impl TryFrom<RawQuantifiers> for QuantifierLexicon {
    type Error = ArgumentError;

    fn try_from(raw: RawQuantifiers) -> Result<Self, Self::Error> {
        let mut lex = Self::default();
        for (term, senses) in raw.terms {
            lex.insert(term, senses)?;
        }
        Ok(lex)
    }
}

impl From<QuantifierLexicon> for RawQuantifiers {
    fn from(l: QuantifierLexicon) -> Self {
        Self { terms: l.terms }
    }
}

impl QuantifierLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a term. Senses are kept ordered by median.
    pub fn insert(&mut self, term: impl Into<String>, mut senses: Vec<QuantifierSense>) -> Result<(), ArgumentError> {
        let term = term.into();
        if senses.is_empty() {
            return Err(ArgumentError::NoSenses(term));
        }
        senses.sort_by(|x, y| x.meaning.median().total_cmp(&y.meaning.median()));
        self.terms.insert(term, senses);
        Ok(())
    }

    pub fn define(&mut self, term: impl Into<String>, sense: impl Into<String>, meaning: UnitFuzzyNumber) {
        let term = term.into();
        let senses = self.terms.entry(term).or_default();
        senses.push(QuantifierSense {
            sense: sense.into(),
            meaning,
        });
        senses.sort_by(|x, y| x.meaning.median().total_cmp(&y.meaning.median()));
    }

    pub fn senses(&self, term: &str) -> Option<&[QuantifierSense]> {
        self.terms.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Lookup {
    Resolved { meaning: UnitFuzzyNumber },
    Ambiguous { term: String, senses: Vec<QuantifierSense> },
}

pub fn lookup_quantifier(term: &str, qlex: &QuantifierLexicon) -> Result<Lookup, ArgumentError> {
    match qlex.senses(term) {
        None => Err(ArgumentError::UnknownQuantifier(term.to_string())),
        Some([one]) => Ok(Lookup::Resolved { meaning: one.meaning }),
        Some(senses) => Ok(Lookup::Ambiguous {
            term: term.to_string(),
            senses: senses.to_vec(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Sense(usize),
    Custom(UnitFuzzyNumber),
}

/// Picks a sense of an ambiguous term, or substitutes a custom meaning.
pub fn resolve_ambiguity(term: &str, senses: &[QuantifierSense], choice: &Choice) -> Result<UnitFuzzyNumber, ArgumentError> {
    match choice {
        Choice::Sense(i) => senses.get(*i).map(|s| s.meaning).ok_or(ArgumentError::SenseOutOfRange {
            term: term.to_string(),
            index: *i,
            count: senses.len(),
        }),
        Choice::Custom(f) => Ok(UnitFuzzyNumber::new(f.a(), f.b(), f.c(), f.d())?),
    }
}

/// Multiplicative chaining: "Q1 of A are B" and "Q2 of B are C" give
/// "Q1*Q2 of A are C".
pub fn chain(q1: &UnitFuzzyNumber, q2: &UnitFuzzyNumber) -> UnitFuzzyNumber {
    q1.mul(q2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub statement: String,
    /// Label the arguer attaches to the claim, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ground {
    pub id: String,
    pub statement: String,
    pub credibility: UnitFuzzyNumber,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuantifierSpec {
    Term(String),
    Explicit(UnitFuzzyNumber),
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warrant {
    pub id: String,
    #[serde(default)]
    pub statement: String,
    /// Ground ids, or ids of warrants whose conclusion this one builds on.
    pub premises: Vec<String>,
    pub quantifier: QuantifierSpec,
    /// Whether this line supports the claim directly.
    #[serde(default = "yes")]
    pub supports_claim: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backing {
    pub warrant: String,
    #[serde(default)]
    pub statement: String,
    pub reliability: UnitFuzzyNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rebuttal {
    /// A warrant id or `"claim"`.
    pub target: String,
    #[serde(default)]
    pub statement: String,
    pub strength: UnitFuzzyNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentGraph {
    pub claim: Claim,
    pub grounds: Vec<Ground>,
    pub warrants: Vec<Warrant>,
    #[serde(default)]
    pub backings: Vec<Backing>,
    #[serde(default)]
    pub rebuttals: Vec<Rebuttal>,
}

impl ArgumentGraph {
    pub fn ground(&self, id: &str) -> Option<&Ground> {
        self.grounds.iter().find(|g| g.id == id)
    }

    pub fn ground_mut(&mut self, id: &str) -> Option<&mut Ground> {
        self.grounds.iter_mut().find(|g| g.id == id)
    }

    pub fn warrant(&self, id: &str) -> Option<&Warrant> {
        self.warrants.iter().find(|w| w.id == id)
    }

    /// Checks references and acyclicity; returns warrant indices in an
    /// order where every warrant follows the warrants it builds on.
    pub fn validate(&self) -> Result<Vec<usize>, ArgumentError> {
        if self.grounds.is_empty() {
            return Err(structure("at least one ground is required"));
        }
        if self.warrants.is_empty() {
            return Err(structure("at least one warrant is required"));
        }
        let mut ids = BTreeSet::new();
        for id in self.grounds.iter().map(|g| &g.id).chain(self.warrants.iter().map(|w| &w.id)) {
            if id.is_empty() || id == CLAIM {
                return Err(structure(format!("invalid id {id:?}")));
            }
            if !ids.insert(id.as_str()) {
                return Err(structure(format!("duplicate id {id:?}")));
            }
        }
        let warrant_index: HashMap<&str, usize> =
            self.warrants.iter().enumerate().map(|(i, w)| (w.id.as_str(), i)).collect();
        for w in &self.warrants {
            if w.premises.is_empty() {
                return Err(structure(format!("warrant {:?} has no premises", w.id)));
            }
            for p in &w.premises {
                if self.ground(p).is_none() && !warrant_index.contains_key(p.as_str()) {
                    return Err(structure(format!("warrant {:?} references unknown premise {p:?}", w.id)));
                }
            }
        }
        if !self.warrants.iter().any(|w| w.supports_claim) {
            return Err(structure("no warrant supports the claim"));
        }
        let mut backed = BTreeSet::new();
        for b in &self.backings {
            if !warrant_index.contains_key(b.warrant.as_str()) {
                return Err(structure(format!("backing for unknown warrant {:?}", b.warrant)));
            }
            if !backed.insert(b.warrant.as_str()) {
                return Err(structure(format!("warrant {:?} has more than one backing", b.warrant)));
            }
        }
        for r in &self.rebuttals {
            if r.target != CLAIM && !warrant_index.contains_key(r.target.as_str()) {
                return Err(structure(format!("rebuttal targets unknown warrant {:?}", r.target)));
            }
        }

        // depth-first topological sort over warrant-to-warrant premises
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        fn visit(
            i: usize,
            g: &ArgumentGraph,
            idx: &HashMap<&str, usize>,
            marks: &mut [Mark],
            order: &mut Vec<usize>,
        ) -> Result<(), ArgumentError> {
            match marks[i] {
                Mark::Done => return Ok(()),
                Mark::Active => return Err(structure(format!("cycle through warrant {:?}", g.warrants[i].id))),
                Mark::New => {}
            }
            marks[i] = Mark::Active;
            for p in &g.warrants[i].premises {
                if let Some(&j) = idx.get(p.as_str()) {
                    visit(j, g, idx, marks, order)?;
                }
            }
            marks[i] = Mark::Done;
            order.push(i);
            Ok(())
        }
        let mut marks = vec![Mark::New; self.warrants.len()];
        let mut order = Vec::with_capacity(self.warrants.len());
        for i in 0..self.warrants.len() {
            visit(i, self, &warrant_index, &mut marks, &mut order)?;
        }
        Ok(order)
    }

    /// Terms used by the warrants, in warrant order.
    pub fn quantifier_terms(&self) -> Vec<(&str, &str)> {
        self.warrants
            .iter()
            .filter_map(|w| match &w.quantifier {
                QuantifierSpec::Term(t) => Some((w.id.as_str(), t.as_str())),
                QuantifierSpec::Explicit(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RebuttalRule {
    /// `x * (1 - strength)`
    #[default]
    Complement,
    /// `max(0, x - strength)`
    BoundedDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub aggregation: Aggregation,
    pub rebuttal: RebuttalRule,
}

impl EngineConfig {
    fn rebut(&self, x: &UnitFuzzyNumber, strength: &UnitFuzzyNumber) -> UnitFuzzyNumber {
        match self.rebuttal {
            RebuttalRule::Complement => x.mul(&strength.complement()),
            RebuttalRule::BoundedDifference => x.sub_bounded(strength),
        }
    }

    fn combine(&self, x: &UnitFuzzyNumber, y: &UnitFuzzyNumber) -> UnitFuzzyNumber {
        match self.aggregation {
            Aggregation::Max => x.fuzzy_max(y),
            Aggregation::Min => x.fuzzy_min(y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TraceOp {
    /// Meaning taken for a warrant's quantifier.
    Quantifier { warrant: String, source: String },
    /// Fuzzy min over a warrant's premises.
    Premises { warrant: String, ids: Vec<String> },
    /// Quantifier chained with the premises.
    Chain { warrant: String },
    /// Line chained with the backing reliability.
    Backing { warrant: String },
    /// Rebuttal applied to a line or the claim.
    Rebuttal { target: String, index: usize },
    /// Lines combined into the claim.
    Aggregate { warrants: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(flatten)]
    pub op: TraceOp,
    pub operands: Vec<UnitFuzzyNumber>,
    pub result: UnitFuzzyNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineResult {
    pub warrant: String,
    pub credibility: UnitFuzzyNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub claim: UnitFuzzyNumber,
    pub lines: Vec<LineResult>,
    pub label: LinguisticLabel,
    pub config: EngineConfig,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingAmbiguity {
    pub warrant: String,
    pub term: String,
    pub senses: Vec<QuantifierSense>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Evaluated(Evaluation),
    Pending { ambiguities: Vec<PendingAmbiguity> },
}

/// Meanings chosen for ambiguous or undefined quantifiers, by warrant id.
pub type Resolutions = BTreeMap<String, UnitFuzzyNumber>;

/// Quantifier meaning per warrant, or the ambiguities still open.
pub fn resolve_quantifiers(
    graph: &ArgumentGraph,
    qlex: &QuantifierLexicon,
    resolutions: &Resolutions,
) -> Result<Result<Vec<(UnitFuzzyNumber, String)>, Vec<PendingAmbiguity>>, ArgumentError> {
    let mut out = Vec::with_capacity(graph.warrants.len());
    let mut pending = Vec::new();
    for w in &graph.warrants {
        if let Some(m) = resolutions.get(&w.id) {
            out.push((*m, "resolved".to_string()));
            continue;
        }
        match &w.quantifier {
            QuantifierSpec::Explicit(f) => out.push((*f, "explicit".to_string())),
            QuantifierSpec::Term(t) => match lookup_quantifier(t, qlex)? {
                Lookup::Resolved { meaning } => out.push((meaning, format!("term:{t}"))),
                Lookup::Ambiguous { term, senses } => pending.push(PendingAmbiguity {
                    warrant: w.id.clone(),
                    term,
                    senses,
                }),
            },
        }
    }
    Ok(if pending.is_empty() { Ok(out) } else { Err(pending) })
}

/// Propagates credibility from the grounds to the claim.
pub fn evaluate(
    graph: &ArgumentGraph,
    qlex: &QuantifierLexicon,
    resolutions: &Resolutions,
    output: &Lexicon,
    config: EngineConfig,
) -> Result<Outcome, ArgumentError> {
    let order = graph.validate()?;
    let quantifiers = match resolve_quantifiers(graph, qlex, resolutions)? {
        Ok(q) => q,
        Err(ambiguities) => return Ok(Outcome::Pending { ambiguities }),
    };
    let mut trace = Vec::new();
    let mut step = |op, operands: Vec<UnitFuzzyNumber>, result: UnitFuzzyNumber| {
        trace.push(TraceStep { op, operands, result });
        result
    };

    let mut line_of: HashMap<&str, UnitFuzzyNumber> = HashMap::new();
    for &i in &order {
        let w = &graph.warrants[i];
        let (q, source) = &quantifiers[i];
        let q = step(
            TraceOp::Quantifier {
                warrant: w.id.clone(),
                source: source.clone(),
            },
            vec![*q],
            *q,
        );
        let premises: Vec<UnitFuzzyNumber> = w
            .premises
            .iter()
            .map(|p| match graph.ground(p) {
                Some(g) => g.credibility,
                None => line_of[p.as_str()],
            })
            .collect();
        let weakest = premises[1..].iter().fold(premises[0], |acc, p| acc.fuzzy_min(p));
        let weakest = step(
            TraceOp::Premises {
                warrant: w.id.clone(),
                ids: w.premises.clone(),
            },
            premises,
            weakest,
        );
        let mut line = step(TraceOp::Chain { warrant: w.id.clone() }, vec![q, weakest], chain(&q, &weakest));
        let reliability = graph
            .backings
            .iter()
            .find(|b| b.warrant == w.id)
            .map(|b| b.reliability)
            .unwrap_or_else(|| UnitFuzzyNumber::crisp(1.0).expect("1 is in range"));
        line = step(
            TraceOp::Backing { warrant: w.id.clone() },
            vec![line, reliability],
            chain(&line, &reliability),
        );
        for (k, r) in graph.rebuttals.iter().enumerate().filter(|(_, r)| r.target == w.id) {
            line = step(
                TraceOp::Rebuttal {
                    target: w.id.clone(),
                    index: k,
                },
                vec![line, r.strength],
                config.rebut(&line, &r.strength),
            );
        }
        line_of.insert(w.id.as_str(), line);
    }

    let lines: Vec<LineResult> = graph
        .warrants
        .iter()
        .map(|w| LineResult {
            warrant: w.id.clone(),
            credibility: line_of[w.id.as_str()],
        })
        .collect();
    let supporting: Vec<&LineResult> = graph
        .warrants
        .iter()
        .zip(&lines)
        .filter(|(w, _)| w.supports_claim)
        .map(|(_, l)| l)
        .collect();
    let operands: Vec<UnitFuzzyNumber> = supporting.iter().map(|l| l.credibility).collect();
    let combined = operands[1..].iter().fold(operands[0], |acc, x| config.combine(&acc, x));
    let mut claim = step(
        TraceOp::Aggregate {
            warrants: supporting.iter().map(|l| l.warrant.clone()).collect(),
        },
        operands,
        combined,
    );
    for (k, r) in graph.rebuttals.iter().enumerate().filter(|(_, r)| r.target == CLAIM) {
        claim = step(
            TraceOp::Rebuttal {
                target: CLAIM.to_string(),
                index: k,
            },
            vec![claim, r.strength],
            config.rebut(&claim, &r.strength),
        );
    }
    let label = output.nearest_label(&claim).clone();
    Ok(Outcome::Evaluated(Evaluation {
        claim,
        lines,
        label,
        config,
        trace,
    }))
}

/// Recomputes every trace step from its recorded operands and returns the
/// final claim credibility.
pub fn replay(e: &Evaluation) -> Result<UnitFuzzyNumber, ArgumentError> {
    let mut last = None;
    for (i, s) in e.trace.iter().enumerate() {
        let ops = &s.operands;
        let fold = |f: &dyn Fn(&UnitFuzzyNumber, &UnitFuzzyNumber) -> UnitFuzzyNumber| {
            ops.get(1..)
                .unwrap_or_default()
                .iter()
                .fold(ops.first().copied(), |acc, x| acc.map(|a| f(&a, x)))
        };
        let recomputed = match &s.op {
            TraceOp::Quantifier { .. } => ops.first().copied(),
            TraceOp::Premises { .. } => fold(&|a, b| a.fuzzy_min(b)),
            TraceOp::Chain { .. } | TraceOp::Backing { .. } => fold(&chain),
            TraceOp::Rebuttal { .. } => match ops.as_slice() {
                [x, r] => Some(e.config.rebut(x, r)),
                _ => None,
            },
            TraceOp::Aggregate { .. } => fold(&|a, b| e.config.combine(a, b)),
        }
        .ok_or_else(|| structure(format!("trace step {i} has malformed operands")))?;
        if recomputed != s.result {
            return Err(ArgumentError::Replay {
                step: i,
                recorded: s.result,
                recomputed,
            });
        }
        if matches!(s.op, TraceOp::Aggregate { .. } | TraceOp::Rebuttal { .. }) {
            last = Some(recomputed);
        }
    }
    let claim = last.ok_or_else(|| structure("trace has no aggregation step"))?;
    if claim != e.claim {
        return Err(ArgumentError::Replay {
            step: e.trace.len(),
            recorded: e.claim,
            recomputed: claim,
        });
    }
    Ok(claim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verbalization {
    pub label: String,
    pub label_meaning: UnitFuzzyNumber,
    pub credibility: UnitFuzzyNumber,
    pub median: f64,
}

pub fn verbalize(credibility: &UnitFuzzyNumber, lexicon: &Lexicon) -> Verbalization {
    let label = lexicon.nearest_label(credibility);
    Verbalization {
        label: label.name.clone(),
        label_meaning: label.meaning,
        credibility: *credibility,
        median: credibility.median(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Comparison {
    Agree { distance: f64 },
    /// `gap` is the analytic median minus the label's median.
    Disagree { distance: f64, gap: f64 },
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        matches!(self, Self::Agree { .. })
    }
}

/// Agreement holds when the distance is at most `tolerance`.
pub fn compare_evaluations(
    analytic: &UnitFuzzyNumber,
    subjective: &str,
    lexicon: &Lexicon,
    tolerance: f64,
) -> Result<Comparison, ArgumentError> {
    let label = lexicon
        .get(subjective)
        .ok_or_else(|| ArgumentError::UnknownLabel(subjective.to_string()))?;
    let distance = analytic.distance(&label.meaning);
    Ok(if distance <= tolerance {
        Comparison::Agree { distance }
    } else {
        Comparison::Disagree {
            distance,
            gap: analytic.median() - label.meaning.median(),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub expert: String,
    pub grounds: BTreeMap<String, UnitFuzzyNumber>,
}

impl KnowledgeBase {
    pub fn from_graph(expert: impl Into<String>, graph: &ArgumentGraph) -> Self {
        Self {
            expert: expert.into(),
            grounds: graph.grounds.iter().map(|g| (g.id.clone(), g.credibility)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingCheck {
    pub overlap: f64,
    pub admissible: bool,
}

/// Overlap coefficient of the ground sets: shared grounds over the size of
/// the smaller set.
pub fn pooling_admissible(kb1: &KnowledgeBase, kb2: &KnowledgeBase, theta: f64) -> Result<PoolingCheck, ArgumentError> {
    for kb in [kb1, kb2] {
        if kb.grounds.is_empty() {
            return Err(ArgumentError::EmptyKnowledgeBase(kb.expert.clone()));
        }
    }
    let shared = kb1.grounds.keys().filter(|g| kb2.grounds.contains_key(*g)).count();
    let smaller = kb1.grounds.len().min(kb2.grounds.len());
    let overlap = shared as f64 / smaller as f64;
    Ok(PoolingCheck {
        overlap,
        admissible: overlap >= theta,
    })
}

/// Corner-wise mean.
pub fn pool(evaluations: &[UnitFuzzyNumber]) -> Result<UnitFuzzyNumber, ArgumentError> {
    if evaluations.len() < 2 {
        return Err(ArgumentError::TooFewToPool(evaluations.len()));
    }
    let n = evaluations.len() as f64;
    let mut sum = [0.0; 4];
    for e in evaluations {
        for (s, c) in sum.iter_mut().zip(e.corners()) {
            *s += c;
        }
    }
    Ok(UnitFuzzyNumber::from_corners_clamped(sum.map(|s| s / n)))
}
