//! Robbins-Monro elicitation of a label's elastic constraints.
//!
//! Each label is elicited in two stages. A coarse scan over the stimulus grid
//! finds a provisional median (where the label applies most often). Then four
//! stochastic-approximation chains track the stimuli at which the label is
//! accepted with probability 0.1 and 0.9 on the rising ramp (left of the
//! median) and on the falling ramp (right of it). The corners of the
//! trapezoid are read off by extending the line through each pair of ramp
//! estimates to membership 0 and 1.
//!
//! The machinery is steppable ([`LabelElicitation`], [`LexiconElicitation`])
//! so that a live respondent can be served one stimulus at a time; the batch
//! functions drive the same state machines with a [`Responder`].

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::UnitFuzzyNumber;
use crate::lexicon::{Lexicon, LexiconError, LinguisticLabel};

/// Lowest stimulus proportion presented.
pub const STIMULUS_MIN: f64 = 0.05;
/// Highest stimulus proportion presented.
pub const STIMULUS_MAX: f64 = 0.95;

const SCAN_STEP: f64 = 0.05;
const SCAN_POINTS: usize = 19;
const LOW_TARGET: f64 = 0.1;
const HIGH_TARGET: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponderError {
    #[error("responder disconnected: {0}")]
    Disconnected(String),
    #[error("responder has no meaning for label {0:?}")]
    UnknownLabel(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElicitationError {
    #[error("elicitation of {label:?} aborted after {} trials: {reason}", partial.trials())]
    Aborted {
        label: String,
        reason: ResponderError,
        partial: Box<LabelTranscript>,
    },
    #[error("label {0:?} was never accepted during the scan")]
    NeverApplies(String),
    #[error("responses for {label:?} are inconsistent: ramp estimates {estimates:?}")]
    InconsistentResponder { label: String, estimates: [f64; 4] },
    #[error("at least 2 labels are required, got {0}")]
    TooFewLabels(usize),
    #[error("label {0:?} is listed more than once")]
    DuplicateLabel(String),
    #[error("elicited lexicon failed validation: {0}")]
    CalibrationFailed(#[from] LexiconError),
    #[error("invalid elicitation setting: {0}")]
    InvalidConfig(String),
    #[error("no stimulus is pending")]
    NothingPending,
}

/// Which side of the label's core a chain tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    /// Membership increases with the stimulus.
    Rising,
    /// Membership decreases with the stimulus.
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub stimulus: f64,
    pub accepted: bool,
}

/// One Robbins-Monro stochastic-approximation chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmChain {
    target: f64,
    step_c: f64,
    ramp: Ramp,
    x: f64,
    n: usize,
    lower: f64,
    upper: f64,
    history: Vec<Trial>,
}

impl RmChain {
    /// Chain on a rising ramp over the full stimulus range.
    pub fn new(target: f64, step_c: f64, start: f64) -> Result<Self, ElicitationError> {
        if !(target > 0.0 && target < 1.0) {
            return Err(ElicitationError::InvalidConfig(format!(
                "target {target} outside (0, 1)"
            )));
        }
        if !(step_c > 0.0 && step_c.is_finite()) {
            return Err(ElicitationError::InvalidConfig(format!(
                "step constant {step_c} must be positive"
            )));
        }
        Ok(Self {
            target,
            step_c,
            ramp: Ramp::Rising,
            x: start.clamp(STIMULUS_MIN, STIMULUS_MAX),
            n: 0,
            lower: STIMULUS_MIN,
            upper: STIMULUS_MAX,
            history: Vec::new(),
        })
    }

    pub fn on_ramp(mut self, ramp: Ramp) -> Self {
        self.ramp = ramp;
        self
    }

    /// Narrows the admissible stimulus range (always within the global one).
    pub fn bounded(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower.clamp(STIMULUS_MIN, STIMULUS_MAX);
        self.upper = upper.clamp(self.lower, STIMULUS_MAX);
        self.x = self.x.clamp(self.lower, self.upper);
        self
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn ramp(&self) -> Ramp {
        self.ramp
    }

    /// Stimulus to present next.
    pub fn stimulus(&self) -> f64 {
        self.x
    }

    pub fn trials(&self) -> usize {
        self.n
    }

    pub fn history(&self) -> &[Trial] {
        &self.history
    }

    /// Records the answer to the current stimulus and moves it.
    ///
    /// `x' = clamp(x - s * c/(n+1) * (y - target))` with `s = +1` on a rising
    /// ramp and `-1` on a falling one.
    pub fn update(&mut self, accepted: bool) {
        let y = if accepted { 1.0 } else { 0.0 };
        let sign = match self.ramp {
            Ramp::Rising => 1.0,
            Ramp::Falling => -1.0,
        };
        self.history.push(Trial {
            stimulus: self.x,
            accepted,
        });
        let step = self.step_c / (self.n as f64 + 1.0);
        self.x = (self.x - sign * step * (y - self.target)).clamp(self.lower, self.upper);
        self.n += 1;
    }

    /// Mean stimulus over the last quarter of trials (at least one).
    pub fn estimate(&self) -> Option<f64> {
        if self.history.is_empty() {
            return None;
        }
        let tail = self.history.len().div_ceil(4);
        let slice = &self.history[self.history.len() - tail..];
        Some(slice.iter().map(|t| t.stimulus).sum::<f64>() / tail as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElicitationConfig {
    /// Trials per chain.
    pub trials: usize,
    /// Robbins-Monro step constant `c`.
    pub step_c: f64,
    /// Passes over the scan grid used to locate the provisional median.
    pub scan_repeats: usize,
    /// Allowed misordering of ramp estimates before the responder is
    /// declared inconsistent.
    pub ordering_tolerance: f64,
}

impl Default for ElicitationConfig {
    fn default() -> Self {
        Self {
            trials: 400,
            step_c: 0.2,
            scan_repeats: 2,
            ordering_tolerance: 0.05,
        }
    }
}

impl ElicitationConfig {
    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    fn check(&self) -> Result<(), ElicitationError> {
        if self.trials == 0 {
            return Err(ElicitationError::InvalidConfig("trials must be >= 1".into()));
        }
        if self.scan_repeats == 0 {
            return Err(ElicitationError::InvalidConfig(
                "scan_repeats must be >= 1".into(),
            ));
        }
        if !(self.step_c > 0.0 && self.step_c.is_finite()) {
            return Err(ElicitationError::InvalidConfig(
                "step_c must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTranscript {
    pub ramp: Ramp,
    pub target: f64,
    pub stimuli: Vec<f64>,
    pub responses: Vec<bool>,
    pub estimate: Option<f64>,
}

impl ChainTranscript {
    fn of(chain: &RmChain) -> Self {
        Self {
            ramp: chain.ramp,
            target: chain.target,
            stimuli: chain.history.iter().map(|t| t.stimulus).collect(),
            responses: chain.history.iter().map(|t| t.accepted).collect(),
            estimate: chain.estimate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTranscript {
    pub label: String,
    pub scan: Vec<Trial>,
    pub provisional_median: Option<f64>,
    pub chains: Vec<ChainTranscript>,
    pub meaning: Option<UnitFuzzyNumber>,
}

impl LabelTranscript {
    pub fn trials(&self) -> usize {
        self.scan.len() + self.chains.iter().map(|c| c.stimuli.len()).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
enum Stage {
    Scan { next: usize },
    Chains { current: usize, chain: RmChain },
    Done { meaning: UnitFuzzyNumber },
}

/// Steppable elicitation of a single label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelElicitation {
    label: String,
    config: ElicitationConfig,
    scan: Vec<Trial>,
    median: Option<f64>,
    finished: Vec<ChainTranscript>,
    stage: Stage,
}

fn scan_stimulus(index: usize) -> f64 {
    STIMULUS_MIN + SCAN_STEP * (index % SCAN_POINTS) as f64
}

/// (ramp, target) of the four chains, in the order they are run.
const CHAIN_PLAN: [(Ramp, f64); 4] = [
    (Ramp::Rising, LOW_TARGET),
    (Ramp::Rising, HIGH_TARGET),
    (Ramp::Falling, HIGH_TARGET),
    (Ramp::Falling, LOW_TARGET),
];

impl LabelElicitation {
    pub fn new(label: impl Into<String>, config: ElicitationConfig) -> Result<Self, ElicitationError> {
        config.check()?;
        Ok(Self {
            label: label.into(),
            config,
            scan: Vec::new(),
            median: None,
            finished: Vec::new(),
            stage: Stage::Scan { next: 0 },
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn next_stimulus(&self) -> Option<f64> {
        match &self.stage {
            Stage::Scan { next } => Some(scan_stimulus(*next)),
            Stage::Chains { chain, .. } => Some(chain.stimulus()),
            Stage::Done { .. } => None,
        }
    }

    pub fn meaning(&self) -> Option<UnitFuzzyNumber> {
        match self.stage {
            Stage::Done { meaning } => Some(meaning),
            _ => None,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.stage, Stage::Done { .. })
    }

    pub fn transcript(&self) -> LabelTranscript {
        let mut chains = self.finished.clone();
        if let Stage::Chains { chain, .. } = &self.stage {
            chains.push(ChainTranscript::of(chain));
        }
        LabelTranscript {
            label: self.label.clone(),
            scan: self.scan.clone(),
            provisional_median: self.median,
            chains,
            meaning: self.meaning(),
        }
    }

    fn start_chain(&self, index: usize, median: f64) -> RmChain {
        let (ramp, target) = CHAIN_PLAN[index];
        // chains may not cross the provisional median onto the other ramp
        let (lo, hi) = match ramp {
            Ramp::Rising => (STIMULUS_MIN, median),
            Ramp::Falling => (median, STIMULUS_MAX),
        };
        RmChain {
            target,
            step_c: self.config.step_c,
            ramp,
            x: self.scan_crossing(ramp, target, median).clamp(lo, hi),
            n: 0,
            lower: lo,
            upper: hi,
            history: Vec::new(),
        }
    }

    /// Start point for a chain: walking outward from the median, the last scan
    /// point accepted at a rate of at least `target` (high targets) or the
    /// first one below it (low targets). Either way the chain begins on the
    /// side from which its small steps lead onto the ramp.
    fn scan_crossing(&self, ramp: Ramp, target: f64, median: f64) -> f64 {
        let mut accepted = [0usize; SCAN_POINTS];
        let mut shown = [0usize; SCAN_POINTS];
        for (i, t) in self.scan.iter().enumerate() {
            shown[i % SCAN_POINTS] += 1;
            accepted[i % SCAN_POINTS] += usize::from(t.accepted);
        }
        let rate = |i: usize| accepted[i] as f64 / shown[i].max(1) as f64;
        let outward: Vec<usize> = match ramp {
            Ramp::Rising => (0..SCAN_POINTS)
                .rev()
                .filter(|&i| scan_stimulus(i) <= median)
                .collect(),
            Ramp::Falling => (0..SCAN_POINTS)
                .filter(|&i| scan_stimulus(i) >= median)
                .collect(),
        };
        let mut inner = median;
        for i in outward {
            let x = scan_stimulus(i);
            if rate(i) < target {
                return if target >= 0.5 { inner } else { x };
            }
            inner = x;
        }
        inner
    }

    /// Records the answer to the pending stimulus.
    pub fn record(&mut self, accepted: bool) -> Result<(), ElicitationError> {
        match &mut self.stage {
            Stage::Scan { next } => {
                self.scan.push(Trial {
                    stimulus: scan_stimulus(*next),
                    accepted,
                });
                *next += 1;
                if *next == SCAN_POINTS * self.config.scan_repeats {
                    let median = self.provisional_median()?;
                    self.median = Some(median);
                    self.stage = Stage::Chains {
                        current: 0,
                        chain: self.start_chain(0, median),
                    };
                }
                Ok(())
            }
            Stage::Chains { current, chain } => {
                chain.update(accepted);
                if chain.trials() < self.config.trials {
                    return Ok(());
                }
                let index = *current;
                self.finished.push(ChainTranscript::of(chain));
                let median = self.median.expect("median is set before chains start");
                if index + 1 < CHAIN_PLAN.len() {
                    self.stage = Stage::Chains {
                        current: index + 1,
                        chain: self.start_chain(index + 1, median),
                    };
                } else {
                    let meaning = self.assemble()?;
                    self.stage = Stage::Done { meaning };
                }
                Ok(())
            }
            Stage::Done { .. } => Err(ElicitationError::NothingPending),
        }
    }

    /// Midpoint of the scan stimuli with the highest acceptance count.
    fn provisional_median(&self) -> Result<f64, ElicitationError> {
        let mut counts = [0usize; SCAN_POINTS];
        for (i, t) in self.scan.iter().enumerate() {
            if t.accepted {
                counts[i % SCAN_POINTS] += 1;
            }
        }
        let best = counts.iter().copied().max().unwrap_or(0);
        if best == 0 {
            return Err(ElicitationError::NeverApplies(self.label.clone()));
        }
        let hits: Vec<f64> = (0..SCAN_POINTS)
            .filter(|&i| counts[i] == best)
            .map(scan_stimulus)
            .collect();
        Ok((hits[0] + hits[hits.len() - 1]) / 2.0)
    }

    fn assemble(&self) -> Result<UnitFuzzyNumber, ElicitationError> {
        let mut e = [0.0; 4];
        for (slot, chain) in e.iter_mut().zip(&self.finished) {
            *slot = chain.estimate.expect("finished chains have trials");
        }
        let tol = self.config.ordering_tolerance;
        // expected order: rising 0.1 <= rising 0.9 <= falling 0.9 <= falling 0.1
        if e.windows(2).any(|w| w[0] > w[1] + tol) {
            return Err(ElicitationError::InconsistentResponder {
                label: self.label.clone(),
                estimates: e,
            });
        }
        let (a, b) = extend_ramp(e[0], e[1]);
        let (c, d) = extend_ramp(e[2], e[3]);
        Ok(UnitFuzzyNumber::from_corners_clamped([a, b, c, d]))
    }
}

/// Extends the segment between the two tracked points of a linear ramp (the
/// 0.1 and 0.9 membership stimuli, left one first) to where the ramp reaches
/// membership 0 and 1.
fn extend_ramp(left: f64, right: f64) -> (f64, f64) {
    if right <= left {
        let mid = (left + right) / 2.0;
        return (mid, mid);
    }
    let pad = (right - left) * (LOW_TARGET / (HIGH_TARGET - LOW_TARGET));
    (left - pad, right + pad)
}

/// Answers "does this label apply to this stimulus?".
pub trait Responder {
    fn respond(
        &mut self,
        label: &str,
        stimulus: f64,
        rng: &mut dyn RngCore,
    ) -> Result<bool, ResponderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMode {
    /// Accepts with probability equal to the true membership.
    Probabilistic,
    /// Accepts exactly when the true membership is at least one half.
    Threshold,
}

/// Simulated respondent with known label meanings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedResponder {
    truth: BTreeMap<String, UnitFuzzyNumber>,
    mode: ResponseMode,
}

impl SimulatedResponder {
    pub fn new(truth: impl IntoIterator<Item = (String, UnitFuzzyNumber)>) -> Self {
        Self {
            truth: truth.into_iter().collect(),
            mode: ResponseMode::Probabilistic,
        }
    }

    pub fn from_lexicon(lexicon: &Lexicon) -> Self {
        Self::new(
            lexicon
                .labels()
                .iter()
                .map(|l| (l.name.clone(), l.meaning)),
        )
    }

    pub fn with_mode(mut self, mode: ResponseMode) -> Self {
        self.mode = mode;
        self
    }
}

impl Responder for SimulatedResponder {
    fn respond(
        &mut self,
        label: &str,
        stimulus: f64,
        rng: &mut dyn RngCore,
    ) -> Result<bool, ResponderError> {
        let truth = self
            .truth
            .get(label)
            .ok_or_else(|| ResponderError::UnknownLabel(label.to_string()))?;
        let mu = truth.membership_unchecked(stimulus);
        Ok(match self.mode {
            ResponseMode::Probabilistic => rng.gen::<f64>() < mu,
            ResponseMode::Threshold => mu >= 0.5,
        })
    }
}

fn label_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs a single chain for `trials` trials and returns its transcript; the
/// estimate is the tail average of the visited stimuli.
pub fn run_chain<R: Responder + ?Sized>(
    responder: &mut R,
    label: &str,
    mut chain: RmChain,
    trials: usize,
    seed: u64,
) -> Result<ChainTranscript, ElicitationError> {
    if trials == 0 {
        return Err(ElicitationError::InvalidConfig("trials must be >= 1".into()));
    }
    let mut rng = label_rng(seed, 0);
    for _ in 0..trials {
        match responder.respond(label, chain.stimulus(), &mut rng) {
            Ok(y) => chain.update(y),
            Err(reason) => {
                return Err(ElicitationError::Aborted {
                    label: label.to_string(),
                    reason,
                    partial: Box::new(LabelTranscript {
                        label: label.to_string(),
                        scan: Vec::new(),
                        provisional_median: None,
                        chains: vec![ChainTranscript::of(&chain)],
                        meaning: None,
                    }),
                })
            }
        }
    }
    Ok(ChainTranscript::of(&chain))
}

fn drive<R: Responder + ?Sized>(
    responder: &mut R,
    mut state: LabelElicitation,
    rng: &mut dyn RngCore,
) -> Result<(UnitFuzzyNumber, LabelTranscript), ElicitationError> {
    while let Some(x) = state.next_stimulus() {
        match responder.respond(&state.label, x, rng) {
            Ok(y) => state.record(y)?,
            Err(reason) => {
                return Err(ElicitationError::Aborted {
                    label: state.label.clone(),
                    reason,
                    partial: Box::new(state.transcript()),
                })
            }
        }
    }
    let meaning = state.meaning().expect("loop ends only when done");
    Ok((meaning, state.transcript()))
}

/// Elicits one label's trapezoid.
pub fn elicit_label<R: Responder + ?Sized>(
    responder: &mut R,
    label: &str,
    config: &ElicitationConfig,
    seed: u64,
) -> Result<(UnitFuzzyNumber, LabelTranscript), ElicitationError> {
    let state = LabelElicitation::new(label, *config)?;
    drive(responder, state, &mut label_rng(seed, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationTranscript {
    pub owner: String,
    pub seed: Option<u64>,
    pub config: ElicitationConfig,
    pub labels: Vec<LabelTranscript>,
}

fn check_names<S: AsRef<str>>(names: &[S]) -> Result<(), ElicitationError> {
    if names.len() < 2 {
        return Err(ElicitationError::TooFewLabels(names.len()));
    }
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_ref()) {
            return Err(ElicitationError::DuplicateLabel(n.as_ref().to_string()));
        }
    }
    Ok(())
}

/// Elicits every label and assembles the owner's lexicon, sorted by median.
/// Label `i` draws its randomness from stream `i` of `seed`.
pub fn elicit_lexicon<R: Responder + ?Sized, S: AsRef<str>>(
    responder: &mut R,
    owner: &str,
    names: &[S],
    config: &ElicitationConfig,
    seed: u64,
) -> Result<(Lexicon, ElicitationTranscript), ElicitationError> {
    check_names(names)?;
    let mut labels = Vec::with_capacity(names.len());
    let mut transcripts = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let state = LabelElicitation::new(name.as_ref(), *config)?;
        let (meaning, t) = drive(responder, state, &mut label_rng(seed, i as u64))?;
        labels.push(LinguisticLabel::new(name.as_ref(), meaning));
        transcripts.push(t);
    }
    let lexicon = Lexicon::from_unsorted(owner, labels)?;
    Ok((
        lexicon,
        ElicitationTranscript {
            owner: owner.to_string(),
            seed: Some(seed),
            config: *config,
            labels: transcripts,
        },
    ))
}

/// A pending question for a live respondent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    pub stimulus: f64,
}

/// Steppable elicitation of a whole lexicon, one label after the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconElicitation {
    owner: String,
    config: ElicitationConfig,
    labels: Vec<LabelElicitation>,
    current: usize,
}

impl LexiconElicitation {
    pub fn new<S: AsRef<str>>(
        owner: impl Into<String>,
        names: &[S],
        config: ElicitationConfig,
    ) -> Result<Self, ElicitationError> {
        check_names(names)?;
        let labels = names
            .iter()
            .map(|n| LabelElicitation::new(n.as_ref(), config))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            owner: owner.into(),
            config,
            labels,
            current: 0,
        })
    }

    pub fn next_probe(&self) -> Option<Probe> {
        let state = self.labels.get(self.current)?;
        state.next_stimulus().map(|stimulus| Probe {
            label: state.label.clone(),
            stimulus,
        })
    }

    pub fn record(&mut self, accepted: bool) -> Result<(), ElicitationError> {
        let state = self
            .labels
            .get_mut(self.current)
            .ok_or(ElicitationError::NothingPending)?;
        state.record(accepted)?;
        if state.is_done() {
            self.current += 1;
        }
        Ok(())
    }

    pub fn is_done(&self) -> bool {
        self.current >= self.labels.len()
    }

    /// Answers given so far, over all labels.
    pub fn answered(&self) -> usize {
        self.labels.iter().map(|l| l.transcript().trials()).sum()
    }

    pub fn transcript(&self) -> ElicitationTranscript {
        ElicitationTranscript {
            owner: self.owner.clone(),
            seed: None,
            config: self.config,
            labels: self.labels.iter().map(|l| l.transcript()).collect(),
        }
    }

    /// The calibrated lexicon, once every label is done.
    pub fn lexicon(&self) -> Option<Result<Lexicon, ElicitationError>> {
        if !self.is_done() {
            return None;
        }
        let labels = self
            .labels
            .iter()
            .map(|l| LinguisticLabel::new(l.label.clone(), l.meaning().expect("done")))
            .collect();
        Some(Lexicon::from_unsorted(self.owner.clone(), labels).map_err(Into::into))
    }
}
