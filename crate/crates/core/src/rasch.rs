//! Rasch (one-parameter logistic) model.
//!
//! Item difficulties are estimated by conditional maximum likelihood: given a
//! subject's raw score, the response pattern no longer depends on the
//! subject's ability, and the conditional likelihood is expressed through the
//! elementary symmetric functions of the item easiness parameters
//! `exp(-delta_j)`. Abilities are then estimated per raw score by maximum
//! likelihood with the difficulties held fixed.

use std::collections::{BTreeMap, HashMap};
use std::io;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Error)]
pub enum RaschError {
    #[error("response matrix needs at least 2 subjects and 2 items, got {subjects}x{items}")]
    TooSmall { subjects: usize, items: usize },
    #[error("row {row} has {got} cells, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("cell ({row}, {col}) is {value:?}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: String },
    #[error("nothing left to fit after dropping degenerate rows and columns ({subjects}x{items} remain)")]
    Unfittable { subjects: usize, items: usize },
    #[error("unknown subject {0:?}")]
    UnknownSubject(String),
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("subject {subject:?} has no label {label:?} in their lexicon")]
    UnknownLabel { subject: String, label: String },
    #[error("no lexicon for subject {0:?}")]
    MissingLexicon(String),
    #[error("success probability of subject {subject:?} on item {item:?} is indeterminate")]
    Indeterminate { subject: String, item: String },
    #[error("calibration curve is empty")]
    EmptyCurve,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// `exp(xi - delta) / (1 + exp(xi - delta))`, evaluated without overflow.
pub fn rasch_probability(xi: f64, delta: f64) -> f64 {
    logistic(xi - delta)
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Dense binary subjects-by-items matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    subject_ids: Vec<String>,
    item_ids: Vec<String>,
    cells: Vec<Vec<u8>>,
}

impl ResponseMatrix {
    pub fn new(
        subject_ids: Vec<String>,
        item_ids: Vec<String>,
        cells: Vec<Vec<u8>>,
    ) -> Result<Self, RaschError> {
        let (n, k) = (cells.len(), item_ids.len());
        if n < 2 || k < 2 || subject_ids.len() != n {
            return Err(RaschError::TooSmall {
                subjects: n,
                items: k,
            });
        }
        for (r, row) in cells.iter().enumerate() {
            if row.len() != k {
                return Err(RaschError::Ragged {
                    row: r,
                    got: row.len(),
                    expected: k,
                });
            }
            if let Some(c) = row.iter().position(|&v| v > 1) {
                return Err(RaschError::NotBinary {
                    row: r,
                    col: c,
                    value: row[c].to_string(),
                });
            }
        }
        Ok(Self {
            subject_ids,
            item_ids,
            cells,
        })
    }

    /// Matrix with subjects named by their 0-based row index.
    pub fn from_rows(item_ids: Vec<String>, cells: Vec<Vec<u8>>) -> Result<Self, RaschError> {
        let ids = (0..cells.len()).map(|i| i.to_string()).collect();
        Self::new(ids, item_ids, cells)
    }

    /// Reads a CSV whose header row holds the item ids. A first column headed
    /// `subject` carries subject ids; otherwise subjects are numbered from 0.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, RaschError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let has_ids = header.first().is_some_and(|h| h == "subject");
        let items = if has_ids { header[1..].to_vec() } else { header };
        let mut ids = Vec::new();
        let mut cells = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut fields = rec.iter();
            ids.push(if has_ids {
                fields.next().unwrap_or_default().to_string()
            } else {
                r.to_string()
            });
            let row = fields
                .enumerate()
                .map(|(c, v)| match v {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(RaschError::NotBinary {
                        row: r,
                        col: c,
                        value: other.to_string(),
                    }),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            cells.push(row);
        }
        Self::new(ids, items, cells)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), RaschError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject".to_string()];
        header.extend(self.item_ids.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.subject_ids.iter().zip(&self.cells) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn subjects(&self) -> usize {
        self.cells.len()
    }

    pub fn items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn get(&self, subject: usize, item: usize) -> u8 {
        self.cells[subject][item]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.cells
    }
}

/// Draws a response matrix from known parameters.
pub fn simulate_responses(abilities: &[f64], difficulties: &[f64], seed: u64) -> ResponseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = abilities
        .iter()
        .map(|&xi| {
            difficulties
                .iter()
                .map(|&d| u8::from(rng.gen::<f64>() < rasch_probability(xi, d)))
                .collect()
        })
        .collect();
    let items = (0..difficulties.len()).map(|j| format!("i{j}")).collect();
    ResponseMatrix::from_rows(items, cells).expect("simulated matrix is well formed")
}

/// Standard-normal abilities and difficulties equally spaced on `[lo, hi]`.
pub fn simulated_parameters(subjects: usize, items: usize, lo: f64, hi: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let abilities = (0..subjects).map(|_| rng.sample(StandardNormal)).collect();
    let step = if items > 1 { (hi - lo) / (items - 1) as f64 } else { 0.0 };
    let difficulties = (0..items).map(|j| lo + step * j as f64).collect();
    (abilities, difficulties)
}

/// Logits serialized as numbers, with `"inf"` / `"-inf"` for the sentinels
/// given to perfect and zero scores.
mod logits {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Logit {
        Finite(f64),
        Sentinel(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Logit> = v
            .iter()
            .map(|&x| {
                if x == f64::INFINITY {
                    Logit::Sentinel("inf".into())
                } else if x == f64::NEG_INFINITY {
                    Logit::Sentinel("-inf".into())
                } else {
                    Logit::Finite(x)
                }
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Logit>::deserialize(d)?
            .into_iter()
            .map(|l| match l {
                Logit::Finite(x) => Ok(x),
                Logit::Sentinel(s) if s == "inf" => Ok(f64::INFINITY),
                Logit::Sentinel(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
                Logit::Sentinel(s) => Err(serde::de::Error::custom(format!("bad logit {s:?}"))),
            })
            .collect()
    }
}

/// Fitted Rasch parameters for every subject and item of the input matrix.
///
/// Subjects and items removed as degenerate carry infinite sentinels:
/// `+inf` ability for a perfect score, `-inf` for a zero score, `-inf`
/// difficulty for an item everybody solved and `+inf` for one nobody solved.
/// Finite difficulties sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschFit {
    pub subject_ids: Vec<String>,
    pub item_ids: Vec<String>,
    #[serde(with = "logits")]
    pub abilities: Vec<f64>,
    #[serde(with = "logits")]
    pub difficulties: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub conditional_log_likelihood: f64,
    pub dropped_subjects: Vec<String>,
    pub dropped_items: Vec<String>,
}

impl RaschFit {
    fn subject_index(&self, id: &str) -> Result<usize, RaschError> {
        self.subject_ids
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| RaschError::UnknownSubject(id.to_string()))
    }

    fn item_index(&self, id: &str) -> Result<usize, RaschError> {
        self.item_ids
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| RaschError::UnknownItem(id.to_string()))
    }

    /// Model probability that `subject` solves `item`.
    pub fn expected_success(&self, subject: &str, item: &str) -> Result<f64, RaschError> {
        let (i, j) = (self.subject_index(subject)?, self.item_index(item)?);
        let (xi, delta) = (self.abilities[i], self.difficulties[j]);
        if xi.is_infinite() && delta.is_infinite() && xi.signum() == delta.signum() {
            return Err(RaschError::Indeterminate {
                subject: subject.to_string(),
                item: item.to_string(),
            });
        }
        Ok(rasch_probability(xi, delta))
    }
}

/// Elementary symmetric functions `gamma_0..=gamma_n` of `eps`.
fn esf(eps: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n + 1];
    g[0] = 1.0;
    let mut len = 0;
    for e in eps {
        len += 1;
        for r in (1..=len).rev() {
            g[r] += e * g[r - 1];
        }
    }
    g
}

/// Conditional log-likelihood of the centred difficulties, the sufficient
/// statistics being item correct-counts and the raw-score distribution.
struct Conditional<'a> {
    item_correct: &'a [f64],
    score_counts: &'a [f64],
}

impl Conditional<'_> {
    fn items(&self) -> usize {
        self.item_correct.len()
    }

    fn log_likelihood(&self, delta: &[f64]) -> f64 {
        let k = self.items();
        let g = esf(delta.iter().map(|d| (-d).exp()), k);
        let linear: f64 = -self.item_correct.iter().zip(delta).map(|(s, d)| s * d).sum::<f64>();
        let norm: f64 = self
            .score_counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0.0)
            .map(|(r, n)| n * g[r].ln())
            .sum();
        linear - norm
    }

    /// Gradient and (negative definite on the centred subspace) Hessian.
    fn derivatives(&self, delta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.items();
        let eps: Vec<f64> = delta.iter().map(|d| (-d).exp()).collect();
        let g = esf(eps.iter().copied(), k);
        let without: Vec<Vec<f64>> = (0..k)
            .map(|j| esf(eps.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &e)| e), k))
            .collect();

        // p[j][r] = P(item j correct | raw score r)
        let p: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                (0..=k)
                    .map(|r| {
                        if r == 0 {
                            0.0
                        } else {
                            eps[j] * without[j][r - 1] / g[r]
                        }
                    })
                    .collect()
            })
            .collect();

        let mut grad = DVector::zeros(k);
        let mut hess = DMatrix::zeros(k, k);
        for j in 0..k {
            let expected: f64 = (0..=k).map(|r| self.score_counts[r] * p[j][r]).sum();
            grad[j] = expected - self.item_correct[j];
            hess[(j, j)] = -(0..=k)
                .map(|r| self.score_counts[r] * p[j][r] * (1.0 - p[j][r]))
                .sum::<f64>();
        }
        for j in 0..k {
            for l in (j + 1)..k {
                let both = esf(
                    eps.iter()
                        .enumerate()
                        .filter(|&(i, _)| i != j && i != l)
                        .map(|(_, &e)| e),
                    k,
                );
                let h: f64 = (2..=k)
                    .map(|r| {
                        let pjl = eps[j] * eps[l] * both[r - 2] / g[r];
                        self.score_counts[r] * (pjl - p[j][r] * p[l][r])
                    })
                    .sum();
                hess[(j, l)] = -h;
                hess[(l, j)] = -h;
            }
        }
        (grad, hess)
    }
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Repeatedly drops all-0 / all-1 rows and columns until none remain.
/// Returns kept subject and item indices.
fn filter_degenerate(m: &ResponseMatrix) -> (Vec<usize>, Vec<usize>) {
    let mut subjects: Vec<usize> = (0..m.subjects()).collect();
    let mut items: Vec<usize> = (0..m.items()).collect();
    loop {
        let before = (subjects.len(), items.len());
        items.retain(|&j| {
            let s: usize = subjects.iter().map(|&i| m.get(i, j) as usize).sum();
            s > 0 && s < subjects.len()
        });
        subjects.retain(|&i| {
            let s: usize = items.iter().map(|&j| m.get(i, j) as usize).sum();
            s > 0 && s < items.len()
        });
        if (subjects.len(), items.len()) == before {
            return (subjects, items);
        }
    }
}

/// Ability whose expected raw score equals `score` given the difficulties.
fn ability_for_score(score: usize, delta: &[f64]) -> f64 {
    let k = delta.len();
    if score == 0 {
        return f64::NEG_INFINITY;
    }
    if score >= k {
        return f64::INFINITY;
    }
    let r = score as f64;
    let mut theta = (r / (k as f64 - r)).ln() + delta.iter().sum::<f64>() / k as f64;
    for _ in 0..100 {
        let (mut f, mut info) = (-r, 0.0);
        for &d in delta {
            let p = rasch_probability(theta, d);
            f += p;
            info += p * (1.0 - p);
        }
        let step = (f / info).clamp(-2.0, 2.0);
        theta -= step;
        if step.abs() < 1e-12 {
            break;
        }
    }
    theta
}

/// Fits the Rasch model to `m`.
pub fn fit(m: &ResponseMatrix) -> Result<RaschFit, RaschError> {
    let (subjects, items) = filter_degenerate(m);
    if subjects.len() < 2 || items.len() < 2 {
        return Err(RaschError::Unfittable {
            subjects: subjects.len(),
            items: items.len(),
        });
    }
    let k = items.len();
    let mut item_correct = vec![0.0; k];
    let mut score_counts = vec![0.0; k + 1];
    for &i in &subjects {
        let mut r = 0;
        for (slot, &j) in item_correct.iter_mut().zip(&items) {
            let x = m.get(i, j);
            *slot += x as f64;
            r += x as usize;
        }
        score_counts[r] += 1.0;
    }
    let n = subjects.len() as f64;
    let model = Conditional {
        item_correct: &item_correct,
        score_counts: &score_counts,
    };

    let mut delta: Vec<f64> = item_correct.iter().map(|&s| ((n - s) / s).ln()).collect();
    center(&mut delta);
    let mut ll = model.log_likelihood(&delta);
    let mut converged = false;
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    let ones = DMatrix::from_element(k, k, 1.0 / k as f64);

    while iterations < MAX_ITER {
        let (grad, hess) = model.derivatives(&delta);
        gnorm = grad.norm();
        if gnorm <= GRAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        // -H is singular along the all-ones direction; the projector fills it in
        let system = -hess + &ones;
        let Some(step) = system.lu().solve(&grad) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let mut trial: Vec<f64> = delta.iter().zip(step.iter()).map(|(d, s)| d + scale * s).collect();
            center(&mut trial);
            let trial_ll = model.log_likelihood(&trial);
            if trial_ll.is_finite() && trial_ll >= ll - 1e-12 * ll.abs() {
                delta = trial;
                ll = trial_ll;
                accepted = true;
                break;
            }
            scale /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        let (grad, _) = model.derivatives(&delta);
        gnorm = grad.norm();
        converged = gnorm <= GRAD_TOL;
    }

    let mut difficulties = vec![0.0; m.items()];
    let kept_items: HashMap<usize, usize> = items.iter().enumerate().map(|(p, &j)| (j, p)).collect();
    for (j, slot) in difficulties.iter_mut().enumerate() {
        *slot = match kept_items.get(&j) {
            Some(&p) => delta[p],
            None => {
                let s: usize = subjects.iter().map(|&i| m.get(i, j) as usize).sum();
                if s == 0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
        };
    }

    let by_score: Vec<f64> = (0..=k).map(|r| ability_for_score(r, &delta)).collect();
    let abilities = (0..m.subjects())
        .map(|i| {
            let r: usize = items.iter().map(|&j| m.get(i, j) as usize).sum();
            by_score[r]
        })
        .collect();

    let dropped_subjects = (0..m.subjects())
        .filter(|i| !subjects.contains(i))
        .map(|i| m.subject_ids[i].clone())
        .collect();
    let dropped_items = (0..m.items())
        .filter(|j| !kept_items.contains_key(j))
        .map(|j| m.item_ids[j].clone())
        .collect();

    Ok(RaschFit {
        subject_ids: m.subject_ids.clone(),
        item_ids: m.item_ids.clone(),
        abilities,
        difficulties,
        converged,
        iterations,
        gradient_norm: gnorm,
        conditional_log_likelihood: ll,
        dropped_subjects,
        dropped_items,
    })
}

/// Conditional log-likelihood of arbitrary difficulties on the filtered
/// matrix; exposed for checking fits against other optimizers.
pub fn conditional_log_likelihood(m: &ResponseMatrix, difficulties: &[f64]) -> f64 {
    let k = m.items();
    let mut item_correct = vec![0.0; k];
    let mut score_counts = vec![0.0; k + 1];
    for row in m.rows() {
        let mut r = 0;
        for (slot, &x) in item_correct.iter_mut().zip(row) {
            *slot += x as f64;
            r += x as usize;
        }
        score_counts[r] += 1.0;
    }
    Conditional {
        item_correct: &item_correct,
        score_counts: &score_counts,
    }
    .log_likelihood(difficulties)
}

/// A subject's verbal confidence that their answer to an item is correct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceRecord {
    pub subject: String,
    pub item: String,
    pub label: String,
}

pub fn read_records<R: io::Read>(reader: R) -> Result<Vec<ConfidenceRecord>, RaschError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

pub fn write_records<W: io::Write>(records: &[ConfidenceRecord], writer: W) -> Result<(), RaschError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Lexicons by owner, with an optional fallback for subjects that have none.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    by_owner: BTreeMap<String, Lexicon>,
    fallback: Option<Lexicon>,
}

impl LexiconSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shared(lexicon: Lexicon) -> Self {
        Self {
            by_owner: BTreeMap::new(),
            fallback: Some(lexicon),
        }
    }

    pub fn insert(&mut self, lexicon: Lexicon) {
        if lexicon.owner() == "default" {
            self.fallback = Some(lexicon);
        } else {
            self.by_owner.insert(lexicon.owner().to_string(), lexicon);
        }
    }

    pub fn for_subject(&self, subject: &str) -> Option<&Lexicon> {
        self.by_owner.get(subject).or(self.fallback.as_ref())
    }

    fn all(&self) -> impl Iterator<Item = &Lexicon> {
        self.by_owner.values().chain(self.fallback.iter())
    }
}

impl FromIterator<Lexicon> for LexiconSet {
    fn from_iter<T: IntoIterator<Item = Lexicon>>(iter: T) -> Self {
        let mut set = Self::new();
        for l in iter {
            set.insert(l);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub label: String,
    /// Median of the label's meaning, averaged over the records using it.
    pub median: f64,
    /// Mean model success probability over those records.
    pub mean_probability: f64,
    pub records: usize,
}

/// Difficulty-by-label curve, ordered by label median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub points: Vec<CurvePoint>,
    /// Labels with no usable records, and records skipped for infinite
    /// parameters.
    pub warnings: Vec<String>,
}

impl CalibrationCurve {
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), RaschError> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, RaschError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let points = rdr.deserialize().collect::<Result<Vec<CurvePoint>, _>>()?;
        Ok(Self {
            points,
            warnings: Vec::new(),
        })
    }
}

/// Groups confidence records by label and pairs each label's median with the
/// mean model probability of success over its records.
pub fn difficulty_by_label(
    fit: &RaschFit,
    records: &[ConfidenceRecord],
    lexicons: &LexiconSet,
) -> Result<CalibrationCurve, RaschError> {
    #[derive(Default)]
    struct Acc {
        median_sum: f64,
        prob_sum: f64,
        n: usize,
    }
    let mut groups: BTreeMap<String, Acc> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut skipped = 0usize;
    for rec in records {
        let i = fit.subject_index(&rec.subject)?;
        let j = fit.item_index(&rec.item)?;
        let lex = lexicons
            .for_subject(&rec.subject)
            .ok_or_else(|| RaschError::MissingLexicon(rec.subject.clone()))?;
        let label = lex.get(&rec.label).ok_or_else(|| RaschError::UnknownLabel {
            subject: rec.subject.clone(),
            label: rec.label.clone(),
        })?;
        if !(fit.abilities[i].is_finite() && fit.difficulties[j].is_finite()) {
            skipped += 1;
            continue;
        }
        let acc = groups.entry(rec.label.clone()).or_default();
        acc.median_sum += label.meaning.median();
        acc.prob_sum += rasch_probability(fit.abilities[i], fit.difficulties[j]);
        acc.n += 1;
    }
    if skipped > 0 {
        warnings.push(format!(
            "{skipped} records skipped: subject or item has an infinite parameter"
        ));
    }
    let mut seen: Vec<&str> = lexicons
        .all()
        .flat_map(|l| l.labels().iter().map(|x| x.name.as_str()))
        .collect();
    seen.sort_unstable();
    seen.dedup();
    for name in seen {
        if !groups.contains_key(name) {
            warnings.push(format!("label {name:?} has no records; omitted"));
        }
    }
    let mut points: Vec<CurvePoint> = groups
        .into_iter()
        .map(|(label, a)| CurvePoint {
            label,
            median: a.median_sum / a.n as f64,
            mean_probability: a.prob_sum / a.n as f64,
            records: a.n,
        })
        .collect();
    points.sort_by(|x, y| x.median.total_cmp(&y.median));
    Ok(CalibrationCurve { points, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGap {
    /// `median - mean_probability` per label, in curve order.
    pub gaps: Vec<(String, f64)>,
    pub max_abs_gap: f64,
    /// Mean probability never decreases along the label order.
    pub monotone: bool,
}

pub fn calibration_gap(curve: &CalibrationCurve) -> Result<CalibrationGap, RaschError> {
    if curve.points.is_empty() {
        return Err(RaschError::EmptyCurve);
    }
    let gaps: Vec<(String, f64)> = curve
        .points
        .iter()
        .map(|p| (p.label.clone(), p.median - p.mean_probability))
        .collect();
    let max_abs_gap = gaps.iter().map(|(_, g)| g.abs()).fold(0.0, f64::max);
    let monotone = curve
        .points
        .windows(2)
        .all(|w| w[1].mean_probability >= w[0].mean_probability);
    Ok(CalibrationGap {
        gaps,
        max_abs_gap,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[u8]]) -> ResponseMatrix {
        let k = rows[0].len();
        ResponseMatrix::from_rows(
            (0..k).map(|j| format!("i{j}")).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn probability_examples() {
        assert_eq!(rasch_probability(0.0, 0.0), 0.5);
        assert!((rasch_probability(3f64.ln(), 0.0) - 0.75).abs() < 1e-12);
        assert_eq!(rasch_probability(f64::NEG_INFINITY, 0.0), 0.0);
        assert_eq!(rasch_probability(-800.0, 0.0), 0.0);
        assert_eq!(rasch_probability(800.0, 0.0), 1.0);
        assert!(rasch_probability(-700.0, 0.0) > 0.0);
    }

    #[test]
    fn esf_matches_expansion() {
        // (1 + 2t)(1 + 3t)(1 + 5t) = 1 + 10t + 31t^2 + 30t^3
        assert_eq!(esf([2.0, 3.0, 5.0].into_iter(), 3), vec![1.0, 10.0, 31.0, 30.0]);
    }

    #[test]
    fn identical_columns_get_equal_difficulties() {
        let m = matrix(&[
            &[1, 1, 0, 1],
            &[0, 0, 1, 1],
            &[1, 1, 0, 0],
            &[0, 0, 1, 0],
            &[1, 1, 1, 0],
            &[0, 0, 0, 1],
        ]);
        let f = fit(&m).unwrap();
        assert!(f.converged);
        assert!((f.difficulties[0] - f.difficulties[1]).abs() < 1e-6);
        assert!(f.difficulties.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn degenerate_matrix_is_unfittable() {
        // item 0 solved by all, subject 2 solves all; what remains collapses
        let m = matrix(&[&[1, 1, 0], &[1, 0, 0], &[1, 1, 1]]);
        assert!(matches!(fit(&m), Err(RaschError::Unfittable { .. })));
    }

    #[test]
    fn dropped_rows_and_columns_get_sentinels() {
        let m = matrix(&[
            &[1, 1, 0, 0],
            &[1, 0, 1, 0],
            &[1, 0, 0, 0],
            &[1, 1, 1, 0],
            &[1, 0, 1, 0],
        ]);
        let f = fit(&m).unwrap();
        assert_eq!(f.difficulties[0], f64::NEG_INFINITY);
        assert_eq!(f.difficulties[3], f64::INFINITY);
        assert_eq!(f.dropped_items, vec!["i0", "i3"]);
        // subject 2 only solved the dropped easy item
        assert_eq!(f.abilities[2], f64::NEG_INFINITY);
        assert_eq!(f.abilities[3], f64::INFINITY);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"-inf\""));
        let back: RaschFit = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn expected_success_validates_indices() {
        let m = matrix(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 0], &[0, 0, 1]]);
        let f = fit(&m).unwrap();
        let p = f.expected_success("0", "i1").unwrap();
        let want = rasch_probability(f.abilities[0], f.difficulties[1]);
        assert_eq!(p, want);
        assert!(matches!(
            f.expected_success("9", "i0"),
            Err(RaschError::UnknownSubject(_))
        ));
        assert!(matches!(
            f.expected_success("0", "zz"),
            Err(RaschError::UnknownItem(_))
        ));
    }

    #[test]
    fn abilities_reproduce_raw_scores() {
        let (xi, delta) = simulated_parameters(60, 8, -1.5, 1.5, 2);
        let m = simulate_responses(&xi, &delta, 3);
        let f = fit(&m).unwrap();
        let kept: Vec<f64> = f.difficulties.iter().copied().filter(|d| d.is_finite()).collect();
        for (i, row) in m.rows().iter().enumerate() {
            let theta = f.abilities[i];
            if !theta.is_finite() {
                continue;
            }
            let expected: f64 = kept.iter().map(|&d| rasch_probability(theta, d)).sum();
            let observed: f64 = row
                .iter()
                .zip(&f.difficulties)
                .filter(|(_, d)| d.is_finite())
                .map(|(&x, _)| x as f64)
                .sum();
            assert!((expected - observed).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = matrix(&[&[1, 0, 1], &[0, 1, 1]]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("subject,i0,i1,i2\n0,1,0,1\n"));
        assert_eq!(ResponseMatrix::read_csv(buf.as_slice()).unwrap(), m);
        let bare = "a,b\n1,0\n0,1\n";
        let m2 = ResponseMatrix::read_csv(bare.as_bytes()).unwrap();
        assert_eq!(m2.subject_ids(), ["0", "1"]);
        assert!(ResponseMatrix::read_csv("a,b\n1,2\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn calibration_gap_examples() {
        let point = |l: &str, m: f64, p: f64| CurvePoint {
            label: l.into(),
            median: m,
            mean_probability: p,
            records: 1,
        };
        let same = CalibrationCurve {
            points: vec![point("a", 0.2, 0.2), point("b", 0.6, 0.6)],
            warnings: vec![],
        };
        let g = calibration_gap(&same).unwrap();
        assert!(g.gaps.iter().all(|(_, v)| *v == 0.0));
        assert!(g.monotone);

        let medians = [0.1, 0.3, 0.5, 0.7, 0.9];
        let probs = [0.12, 0.31, 0.5, 0.69, 0.88];
        let c = CalibrationCurve {
            points: medians
                .iter()
                .zip(probs)
                .enumerate()
                .map(|(i, (&m, p))| point(&format!("L{i}"), m, p))
                .collect(),
            warnings: vec![],
        };
        assert!((calibration_gap(&c).unwrap().max_abs_gap - 0.02).abs() < 1e-12);

        let bumpy = CalibrationCurve {
            points: vec![point("a", 0.2, 0.5), point("b", 0.6, 0.3)],
            warnings: vec![],
        };
        assert!(!calibration_gap(&bumpy).unwrap().monotone);
        assert!(calibration_gap(&CalibrationCurve {
            points: vec![],
            warnings: vec![]
        })
        .is_err());
    }

    #[test]
    fn curve_with_single_label() {
        let m = matrix(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 0], &[0, 0, 1]]);
        let f = fit(&m).unwrap();
        let lex = Lexicon::default_lexicon(3).unwrap();
        let records: Vec<ConfidenceRecord> = ["0", "1", "2"]
            .iter()
            .map(|s| ConfidenceRecord {
                subject: s.to_string(),
                item: "i2".into(),
                label: "L2".into(),
            })
            .collect();
        let curve = difficulty_by_label(&f, &records, &LexiconSet::shared(lex)).unwrap();
        assert_eq!(curve.points.len(), 1);
        let mean = ["0", "1", "2"]
            .iter()
            .map(|s| f.expected_success(s, "i2").unwrap())
            .sum::<f64>()
            / 3.0;
        assert!((curve.points[0].mean_probability - mean).abs() < 1e-12);
        assert_eq!(curve.points[0].records, 3);
        assert_eq!(curve.warnings.len(), 2);
    }

    #[test]
    fn curve_rejects_labels_outside_the_lexicon() {
        let m = matrix(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 0], &[0, 0, 1]]);
        let f = fit(&m).unwrap();
        let rec = vec![ConfidenceRecord {
            subject: "0".into(),
            item: "i0".into(),
            label: "sure".into(),
        }];
        let set = LexiconSet::shared(Lexicon::default_lexicon(3).unwrap());
        assert!(matches!(
            difficulty_by_label(&f, &rec, &set),
            Err(RaschError::UnknownLabel { .. })
        ));
        assert!(matches!(
            difficulty_by_label(&f, &rec, &LexiconSet::new()),
            Err(RaschError::MissingLexicon(_))
        ));
    }
}
