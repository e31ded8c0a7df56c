//! Probability-revision bench: two bins of chips, one with a share `r` of
//! A-chips and the other with `1 - r`. A bin is picked at random and chips
//! are drawn with replacement; after each draw the responder reports how
//! likely it is that the A-majority bin was picked.

use std::io;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::UnitFuzzyNumber;
use crate::lexicon::{Lexicon, LexiconError, LinguisticLabel};
use crate::rasch::logistic;

/// Reported probabilities are clamped this far from 0 and 1 before taking
/// log-odds.
pub const LOGIT_CLAMP: f64 = 1e-12;
const CALIBRATION_STREAM: u64 = 0x6361_6c69_6272_6174;
const KMEDIANS_MAX_ITER: usize = 200;

#[derive(Debug, Error)]
pub enum BayesError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("conservatism coefficient undefined: every Bayes log-odds is zero")]
    Undefined,
    #[error("calibration collapsed two labels onto median {0}")]
    Calibration(f64),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub success_ratio: f64,
    pub draws: usize,
    pub prior: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            success_ratio: 0.7,
            draws: 20,
            prior: 0.5,
            trials: 200,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BayesError> {
        if !(self.success_ratio > 0.0 && self.success_ratio < 1.0) {
            return Err(BayesError::InvalidConfig(format!(
                "success_ratio {} not in (0, 1)",
                self.success_ratio
            )));
        }
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return Err(BayesError::InvalidConfig(format!("prior {} not in (0, 1)", self.prior)));
        }
        Ok(())
    }
}

/// A chip consistent with the A-majority bin, or with the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Draw {
    A,
    B,
}

/// Net evidence: A-draws minus B-draws.
pub fn net_count(draws: &[Draw]) -> i64 {
    draws.iter().map(|d| if *d == Draw::A { 1 } else { -1 }).sum()
}

/// Posterior probability of the A-majority bin.
pub fn bayes_posterior(config: &BenchConfig, draws: &[Draw]) -> f64 {
    posterior_for_net(config.success_ratio, config.prior, net_count(draws))
}

fn posterior_for_net(r: f64, prior: f64, d: i64) -> f64 {
    if d == 0 {
        return prior;
    }
    let (up, down) = if d > 0 { (r, 1.0 - r) } else { (1.0 - r, r) };
    let n = d.unsigned_abs();
    if n <= 500 {
        let n = n as i32;
        let num = prior * up.powi(n);
        let den = num + (1.0 - prior) * down.powi(n);
        if den > 0.0 && den.is_normal() {
            return num / den;
        }
    }
    logistic(logit(prior) + d as f64 * (r / (1.0 - r)).ln())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn clamped_logit(p: f64) -> f64 {
    logit(p.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponderKind {
    Bayesian,
    /// Reports a posterior whose log-odds are `kappa` times Bayes' log-odds.
    Conservative { kappa: f64 },
    /// Reports the meaning of the label nearest to the Bayes posterior.
    Verbal { lexicon: Lexicon },
    /// Verbal responder whose `k` label medians were fitted to the posteriors
    /// seen in a separate calibration run.
    CalibratedVerbal { k: usize },
}

impl ResponderKind {
    pub fn name(&self) -> String {
        match self {
            Self::Bayesian => "bayesian".into(),
            Self::Conservative { kappa } => format!("conservative({kappa})"),
            Self::Verbal { lexicon } => format!("verbal(k={})", lexicon.len()),
            Self::CalibratedVerbal { k } => format!("calibrated-verbal(k={k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionStep {
    pub draw: Draw,
    pub bayes: f64,
    pub reported: UnitFuzzyNumber,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionTrace {
    pub responder: String,
    pub steps: Vec<RevisionStep>,
}

/// A responder ready to answer; calibrated kinds are resolved to a lexicon.
#[derive(Debug, Clone)]
enum Resolved {
    Bayesian,
    Conservative(f64),
    Verbal(Lexicon),
}

fn resolve(kind: &ResponderKind, config: &BenchConfig) -> Result<Resolved, BayesError> {
    Ok(match kind {
        ResponderKind::Bayesian => Resolved::Bayesian,
        ResponderKind::Conservative { kappa } => {
            if !(*kappa > 0.0 && kappa.is_finite()) {
                return Err(BayesError::InvalidConfig(format!("kappa {kappa} must be positive")));
            }
            Resolved::Conservative(*kappa)
        }
        ResponderKind::Verbal { lexicon } => Resolved::Verbal(lexicon.clone()),
        ResponderKind::CalibratedVerbal { k } => Resolved::Verbal(calibrated_lexicon(config, *k)?),
    })
}

fn report(resolved: &Resolved, bayes: f64) -> (UnitFuzzyNumber, Option<String>) {
    let crisp = |p: f64| UnitFuzzyNumber::crisp(p.clamp(0.0, 1.0)).expect("clamped");
    match resolved {
        Resolved::Bayesian => (crisp(bayes), None),
        Resolved::Conservative(kappa) => (crisp(logistic(kappa * clamped_logit(bayes))), None),
        Resolved::Verbal(lex) => {
            let label = lex.nearest_label(&crisp(bayes));
            (label.meaning, Some(label.name.clone()))
        }
    }
}

/// Draw sequence for one trial: the bin is picked with probability `prior`.
pub fn draw_sequence(config: &BenchConfig, rng: &mut dyn RngCore) -> Vec<Draw> {
    let bin_a = rng.gen::<f64>() < config.prior;
    let p_a = if bin_a {
        config.success_ratio
    } else {
        1.0 - config.success_ratio
    };
    (0..config.draws)
        .map(|_| if rng.gen::<f64>() < p_a { Draw::A } else { Draw::B })
        .collect()
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws of every trial; trial `t` uses its own stream of `seed`.
pub fn trial_draws(config: &BenchConfig, seed: u64) -> Vec<Vec<Draw>> {
    (0..config.trials)
        .map(|t| draw_sequence(config, &mut trial_rng(seed, t as u64)))
        .collect()
}

fn trace_for(resolved: &Resolved, name: String, config: &BenchConfig, draws: &[Draw]) -> RevisionTrace {
    let steps = (1..=draws.len())
        .map(|n| {
            let bayes = bayes_posterior(config, &draws[..n]);
            let (reported, label) = report(resolved, bayes);
            RevisionStep {
                draw: draws[n - 1],
                bayes,
                reported,
                label,
            }
        })
        .collect();
    RevisionTrace { responder: name, steps }
}

/// Responses of `kind` to a given draw sequence.
pub fn respond(kind: &ResponderKind, config: &BenchConfig, draws: &[Draw]) -> Result<RevisionTrace, BayesError> {
    config.validate()?;
    let resolved = resolve(kind, config)?;
    Ok(trace_for(&resolved, kind.name(), config, draws))
}

/// One seeded trial of `kind`.
pub fn simulate_responder(kind: &ResponderKind, config: &BenchConfig) -> Result<RevisionTrace, BayesError> {
    let draws = draw_sequence(config, &mut trial_rng(config.seed, 0));
    respond(kind, config, &draws)
}

/// Least-squares slope through the origin of reported log-odds (decoded from
/// the median) on Bayes log-odds, pooled over the given traces.
pub fn conservatism_coefficient<'a>(traces: impl IntoIterator<Item = &'a RevisionTrace>) -> Result<f64, BayesError> {
    let (mut xy, mut xx) = (0.0, 0.0);
    for t in traces {
        for s in &t.steps {
            let x = clamped_logit(s.bayes);
            let y = clamped_logit(s.reported.median());
            xy += x * y;
            xx += x * x;
        }
    }
    if xx == 0.0 {
        return Err(BayesError::Undefined);
    }
    Ok(xy / xx)
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// One-dimensional k-medians (Lloyd iterations with nearest-centre
/// assignment, ties to the lower centre) started from `init`.
pub fn k_medians(values: &[f64], init: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut centres = init.to_vec();
    for _ in 0..KMEDIANS_MAX_ITER {
        let mut groups: Vec<Vec<f64>> = vec![Vec::new(); centres.len()];
        for &v in &sorted {
            let mut best = 0;
            for (i, c) in centres.iter().enumerate() {
                if (v - c).abs() < (v - centres[best]).abs() {
                    best = i;
                }
            }
            groups[best].push(v);
        }
        let next: Vec<f64> = groups
            .iter()
            .zip(&centres)
            .map(|(g, &c)| if g.is_empty() { c } else { median_of(g) })
            .collect();
        if next == centres {
            break;
        }
        centres = next;
    }
    centres
}

/// Lexicon `L1..Lk` with the given strictly increasing medians. Each
/// label's support runs between its neighbours' medians and its core is
/// centred on its own median.
pub fn lexicon_from_medians(owner: &str, medians: &[f64]) -> Result<Lexicon, BayesError> {
    let k = medians.len();
    if let Some(w) = medians.windows(2).find(|w| w[1] <= w[0]) {
        return Err(BayesError::Calibration(w[1]));
    }
    let labels = (0..k)
        .map(|i| {
            let m = medians[i];
            let lo = if i == 0 { 0.0 } else { medians[i - 1] };
            let hi = if i + 1 == k { 1.0 } else { medians[i + 1] };
            let h = (m - lo).min(hi - m) / 4.0;
            let meaning = UnitFuzzyNumber::new(lo.min(m - h), m - h, m + h, hi.max(m + h))
                .or_else(|_| UnitFuzzyNumber::crisp(m))
                .expect("medians lie in [0, 1]");
            LinguisticLabel::new(format!("L{}", i + 1), meaning)
        })
        .collect();
    Ok(Lexicon::new(owner, labels)?)
}

/// Fits `k` label medians to the Bayes posteriors of a calibration run drawn
/// from a stream independent of the benchmark's trials.
pub fn calibrated_lexicon(config: &BenchConfig, k: usize) -> Result<Lexicon, BayesError> {
    let start = Lexicon::default_lexicon(k)?;
    let calibration_seed = config.seed ^ CALIBRATION_STREAM;
    let posteriors: Vec<f64> = trial_draws(config, calibration_seed)
        .iter()
        .flat_map(|draws| (1..=draws.len()).map(|n| bayes_posterior(config, &draws[..n])))
        .collect();
    let init: Vec<f64> = start.labels().iter().map(|l| l.meaning.median()).collect();
    let medians = k_medians(&posteriors, &init);
    lexicon_from_medians("calibrated", &medians)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub responder: String,
    /// Mean |reported median - Bayes posterior| at draw steps 1..=draws.
    pub mean_abs_deviation: Vec<f64>,
    /// Pooled slope of reported on Bayes log-odds.
    pub conservatism: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    step: usize,
    kind: &'a str,
    mean_abs_deviation: f64,
}

impl BenchTable {
    pub fn row(&self, responder: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.responder == responder)
    }

    /// Long format: `step,kind,mean_abs_deviation`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), BayesError> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            for (i, &dev) in row.mean_abs_deviation.iter().enumerate() {
                w.serialize(CsvRow {
                    step: i + 1,
                    kind: &row.responder,
                    mean_abs_deviation: dev,
                })?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Runs every responder kind on the same seeded draw sequences.
pub fn run_benchmark(config: &BenchConfig, kinds: &[ResponderKind]) -> Result<BenchTable, BayesError> {
    config.validate()?;
    let draws = trial_draws(config, config.seed);
    let mut rows = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let resolved = resolve(kind, config)?;
        let traces: Vec<RevisionTrace> = draws
            .iter()
            .map(|d| trace_for(&resolved, kind.name(), config, d))
            .collect();
        let mut sums = vec![0.0; config.draws];
        for t in &traces {
            for (slot, s) in sums.iter_mut().zip(&t.steps) {
                *slot += (s.reported.median() - s.bayes).abs();
            }
        }
        let n = traces.len().max(1) as f64;
        rows.push(BenchRow {
            responder: kind.name(),
            mean_abs_deviation: sums.into_iter().map(|s| s / n).collect(),
            conservatism: conservatism_coefficient(&traces).ok(),
        });
    }
    Ok(BenchTable {
        config: config.clone(),
        rows,
    })
}
