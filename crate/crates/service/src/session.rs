//! Session state machine. Pure: persistence lives in the store.

use serde::{Deserialize, Serialize};
use verbum_core::argument::{
    compare_evaluations, evaluate, resolve_ambiguity, resolve_quantifiers, ArgumentGraph, Choice,
    Comparison, EngineConfig, Evaluation, Ground, Outcome, PendingAmbiguity, QuantifierLexicon,
    QuantifierSense, Resolutions, Warrant, DEFAULT_AGREEMENT_TOLERANCE,
};
use verbum_core::elicitation::{ElicitationConfig, LexiconElicitation};
use verbum_core::fuzzy::UnitFuzzyNumber;
use verbum_core::lexicon::Lexicon;

use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Building,
    PendingAmbiguity { warrants: Vec<String> },
    PendingElicitation,
    Evaluated,
    Agreed,
    Revising,
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentSession {
    /// `None` until a graph has been supplied.
    pub graph: Option<ArgumentGraph>,
    pub quantifiers: QuantifierLexicon,
    pub lexicon: Lexicon,
    #[serde(default)]
    pub engine: EngineConfig,
    pub tolerance: f64,
    pub resolutions: Resolutions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionKind {
    Argument(Box<ArgumentSession>),
    Elicitation {
        state: Box<LexiconElicitation>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lexicon: Option<Lexicon>,
    },
}

/// One entry per accepted mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub version: u64,
    pub question: Option<String>,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub version: u64,
    #[serde(flatten)]
    pub phase: Phase,
    pub data: SessionKind,
    pub log: Vec<LogEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuestionBody {
    /// Supply an argument graph.
    Graph,
    Ambiguity {
        warrant: String,
        term: String,
        senses: Vec<QuantifierSense>,
    },
    Stimulus {
        label: String,
        stimulus: f64,
        answered: usize,
    },
    /// Give a subjective label for the claim, to compare with `label`.
    Review {
        label: String,
        credibility: UnitFuzzyNumber,
    },
    /// Revise a ground's credibility, add a ground, or replace the graph.
    Revise { comparison: Comparison },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(flatten)]
    pub body: QuestionBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Answer {
    Graph { graph: ArgumentGraph },
    Sense { index: usize },
    Custom { meaning: UnitFuzzyNumber },
    Response { accepted: bool },
    Subjective { label: String },
    ReviseGround { ground: String, credibility: UnitFuzzyNumber },
    AddGround { ground: Ground, warrant: Warrant },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateArgument {
    #[serde(default)]
    pub graph: Option<ArgumentGraph>,
    #[serde(default)]
    pub quantifiers: Option<QuantifierLexicon>,
    #[serde(default)]
    pub lexicon: Option<Lexicon>,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateElicitation {
    pub owner: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub config: Option<ElicitationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CreateSession {
    Argument(CreateArgument),
    Elicitation(CreateElicitation),
}

/// Quantifiers available when a session brings none.
pub fn default_quantifiers() -> QuantifierLexicon {
    let t = |a, b, c, d| UnitFuzzyNumber::new(a, b, c, d).expect("ordered literal");
    let mut q = QuantifierLexicon::new();
    q.define("all", "without exception", t(0.95, 1.0, 1.0, 1.0));
    q.define("almost all", "nearly every case", t(0.8, 0.9, 0.95, 1.0));
    q.define("most", "the majority", t(0.5, 0.6, 0.8, 0.9));
    q.define("many", "a good share", t(0.3, 0.4, 0.6, 0.7));
    q.define("some", "a few", t(0.05, 0.1, 0.3, 0.4));
    q.define("few", "hardly any", t(0.0, 0.05, 0.15, 0.25));
    q.define("usually", "more often than not", t(0.6, 0.7, 0.7, 0.8));
    q.define("usually", "as a rule", t(0.75, 0.85, 0.9, 0.95));
    q
}

fn validation(msg: impl Into<String>) -> ServiceError {
    ServiceError::Validation(vec![msg.into()])
}

impl Session {
    pub fn create(id: String, req: CreateSession) -> Result<Self, ServiceError> {
        let (data, phase) = match req {
            CreateSession::Argument(a) => {
                if let Some(g) = &a.graph {
                    g.validate()?;
                }
                let lexicon = match a.lexicon {
                    Some(l) => l,
                    None => Lexicon::default_lexicon(5).expect("5 labels"),
                };
                let tolerance = a.tolerance.unwrap_or(DEFAULT_AGREEMENT_TOLERANCE);
                if !(tolerance >= 0.0 && tolerance.is_finite()) {
                    return Err(validation(format!("tolerance {tolerance} must be non-negative")));
                }
                let data = ArgumentSession {
                    graph: a.graph,
                    quantifiers: a.quantifiers.unwrap_or_else(default_quantifiers),
                    lexicon,
                    engine: a.engine,
                    tolerance,
                    resolutions: Resolutions::new(),
                    evaluation: None,
                    comparison: None,
                };
                let phase = building_phase(&data)?;
                (SessionKind::Argument(Box::new(data)), phase)
            }
            CreateSession::Elicitation(e) => {
                let state = LexiconElicitation::new(e.owner, &e.labels, e.config.unwrap_or_default())?;
                (
                    SessionKind::Elicitation {
                        state: Box::new(state),
                        lexicon: None,
                    },
                    Phase::PendingElicitation,
                )
            }
        };
        Ok(Self {
            id,
            version: 1,
            phase,
            data,
            log: vec![LogEntry {
                version: 1,
                question: None,
                action: "create".into(),
            }],
        })
    }

    pub fn question_id(&self) -> String {
        format!("q{}", self.version)
    }

    /// The single pending question, if any.
    pub fn next_question(&self) -> Option<Question> {
        let body = match &self.data {
            SessionKind::Elicitation { state, .. } => {
                let p = state.next_probe()?;
                QuestionBody::Stimulus {
                    label: p.label,
                    stimulus: p.stimulus,
                    answered: state.answered(),
                }
            }
            SessionKind::Argument(a) => match &self.phase {
                Phase::Building if a.graph.is_none() => QuestionBody::Graph,
                Phase::PendingAmbiguity { .. } => {
                    let p = first_pending(a)?;
                    QuestionBody::Ambiguity {
                        warrant: p.warrant,
                        term: p.term,
                        senses: p.senses,
                    }
                }
                Phase::Evaluated => {
                    let e = a.evaluation.as_ref()?;
                    QuestionBody::Review {
                        label: e.label.name.clone(),
                        credibility: e.claim,
                    }
                }
                Phase::Revising => QuestionBody::Revise {
                    comparison: a.comparison.clone()?,
                },
                _ => return None,
            },
        };
        Some(Question {
            id: self.question_id(),
            body,
        })
    }

    /// Applies an answer to the pending question. `version` and
    /// `question_id` must both be current.
    pub fn answer(&mut self, version: u64, question_id: &str, answer: Answer) -> Result<(), ServiceError> {
        if version != self.version {
            return Err(ServiceError::Conflict(format!(
                "version {version} is stale, session is at {}",
                self.version
            )));
        }
        let question = self
            .next_question()
            .ok_or_else(|| ServiceError::Conflict("no question is pending".into()))?;
        if question.id != question_id {
            return Err(ServiceError::Conflict(format!(
                "question {question_id:?} is not pending, {:?} is",
                question.id
            )));
        }
        let action = match (&mut self.data, question.body, answer) {
            (SessionKind::Elicitation { state, lexicon }, QuestionBody::Stimulus { label, stimulus, .. }, Answer::Response { accepted }) => {
                state.record(accepted)?;
                if let Some(l) = state.lexicon() {
                    *lexicon = Some(l?);
                    self.phase = Phase::Calibrated;
                }
                format!("response {label} {stimulus} {accepted}")
            }
            (SessionKind::Argument(a), QuestionBody::Graph, Answer::Graph { graph }) => {
                graph.validate()?;
                a.graph = Some(graph);
                self.phase = building_phase(a)?;
                "graph".into()
            }
            (SessionKind::Argument(a), QuestionBody::Ambiguity { warrant, term, senses }, answer) => {
                let choice = match answer {
                    Answer::Sense { index } => Choice::Sense(index),
                    Answer::Custom { meaning } => Choice::Custom(meaning),
                    other => return Err(mismatch("ambiguity", &other)),
                };
                let meaning = resolve_ambiguity(&term, &senses, &choice)?;
                a.resolutions.insert(warrant.clone(), meaning);
                self.phase = building_phase(a)?;
                format!("resolve {warrant} {term}")
            }
            (SessionKind::Argument(a), QuestionBody::Review { credibility, .. }, Answer::Subjective { label }) => {
                let cmp = compare_evaluations(&credibility, &label, &a.lexicon, a.tolerance)?;
                self.phase = if cmp.agrees() { Phase::Agreed } else { Phase::Revising };
                a.comparison = Some(cmp);
                format!("subjective {label}")
            }
            (SessionKind::Argument(a), QuestionBody::Revise { .. }, answer) => {
                let mut graph = a.graph.clone().expect("revising needs a graph");
                let action = match answer {
                    Answer::ReviseGround { ground, credibility } => {
                        let g = graph
                            .ground_mut(&ground)
                            .ok_or_else(|| validation(format!("unknown ground {ground:?}")))?;
                        g.credibility = credibility;
                        format!("revise {ground}")
                    }
                    Answer::AddGround { ground, warrant } => {
                        let action = format!("add {} via {}", ground.id, warrant.id);
                        graph.grounds.push(ground);
                        graph.warrants.push(warrant);
                        action
                    }
                    Answer::Graph { graph: g } => {
                        graph = g;
                        "graph".into()
                    }
                    other => return Err(mismatch("revision", &other)),
                };
                graph.validate()?;
                a.resolutions.retain(|w, _| graph.warrant(w).is_some());
                a.graph = Some(graph);
                a.evaluation = None;
                let phase = building_phase(a)?;
                if matches!(phase, Phase::PendingAmbiguity { .. }) {
                    self.phase = phase;
                }
                action
            }
            (_, q, other) => return Err(mismatch(question_kind(&q), &other)),
        };
        self.bump(Some(question.id), action);
        Ok(())
    }

    /// Evaluates the argument; stores the result when it is complete.
    pub fn evaluate(&mut self) -> Result<Outcome, ServiceError> {
        let SessionKind::Argument(a) = &mut self.data else {
            return Err(validation("elicitation sessions have nothing to evaluate"));
        };
        let graph = a
            .graph
            .as_ref()
            .ok_or_else(|| validation("session has no argument yet"))?;
        let outcome = evaluate(graph, &a.quantifiers, &a.resolutions, &a.lexicon, a.engine)?;
        match &outcome {
            Outcome::Evaluated(e) => {
                a.evaluation = Some(e.clone());
                a.comparison = None;
                self.phase = Phase::Evaluated;
                self.bump(None, "evaluate".into());
            }
            Outcome::Pending { ambiguities } => {
                self.phase = Phase::PendingAmbiguity {
                    warrants: ambiguities.iter().map(|p| p.warrant.clone()).collect(),
                };
            }
        }
        Ok(outcome)
    }

    fn bump(&mut self, question: Option<String>, action: String) {
        self.version += 1;
        self.log.push(LogEntry {
            version: self.version,
            question,
            action,
        });
    }

    pub fn lexicon(&self) -> Option<&Lexicon> {
        match &self.data {
            SessionKind::Elicitation { lexicon, .. } => lexicon.as_ref(),
            SessionKind::Argument(_) => None,
        }
    }
}

fn pending(a: &ArgumentSession) -> Result<Vec<PendingAmbiguity>, ServiceError> {
    let Some(g) = &a.graph else {
        return Ok(Vec::new());
    };
    Ok(resolve_quantifiers(g, &a.quantifiers, &a.resolutions)?.err().unwrap_or_default())
}

fn first_pending(a: &ArgumentSession) -> Option<PendingAmbiguity> {
    pending(a).ok()?.into_iter().next()
}

fn building_phase(a: &ArgumentSession) -> Result<Phase, ServiceError> {
    let p = pending(a)?;
    Ok(if p.is_empty() {
        Phase::Building
    } else {
        Phase::PendingAmbiguity {
            warrants: p.into_iter().map(|p| p.warrant).collect(),
        }
    })
}

fn question_kind(q: &QuestionBody) -> &'static str {
    match q {
        QuestionBody::Graph => "graph",
        QuestionBody::Ambiguity { .. } => "ambiguity",
        QuestionBody::Stimulus { .. } => "stimulus",
        QuestionBody::Review { .. } => "review",
        QuestionBody::Revise { .. } => "revise",
    }
}

fn mismatch(expected: &str, got: &Answer) -> ServiceError {
    let got = serde_json::to_value(got)
        .ok()
        .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(str::to_string))
        .unwrap_or_default();
    validation(format!("a {expected} question cannot take a {got:?} answer"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use verbum_core::argument::{Claim, QuantifierSpec, Rebuttal, CLAIM};

    fn crisp(x: f64) -> UnitFuzzyNumber {
        UnitFuzzyNumber::crisp(x).unwrap()
    }

    fn graph(quantifiers: &[QuantifierSpec]) -> ArgumentGraph {
        ArgumentGraph {
            claim: Claim {
                statement: "c".into(),
                qualifier: None,
            },
            grounds: vec![Ground {
                id: "g1".into(),
                statement: "g".into(),
                credibility: crisp(0.9),
                support: vec![],
            }],
            warrants: quantifiers
                .iter()
                .enumerate()
                .map(|(i, q)| Warrant {
                    id: format!("w{}", i + 1),
                    statement: String::new(),
                    premises: vec!["g1".into()],
                    quantifier: q.clone(),
                    supports_claim: true,
                })
                .collect(),
            backings: vec![],
            rebuttals: vec![Rebuttal {
                target: CLAIM.into(),
                statement: String::new(),
                strength: crisp(0.5),
            }],
        }
    }

    fn create(g: Option<ArgumentGraph>) -> Session {
        create_with(g, None)
    }

    fn create_with(g: Option<ArgumentGraph>, tolerance: Option<f64>) -> Session {
        Session::create(
            "s1".into(),
            CreateSession::Argument(CreateArgument {
                graph: g,
                quantifiers: None,
                lexicon: None,
                engine: EngineConfig::default(),
                tolerance,
            }),
        )
        .unwrap()
    }

    fn usually() -> QuantifierSpec {
        QuantifierSpec::Term("usually".into())
    }

    #[test]
    fn ambiguities_are_served_in_warrant_order() {
        let mut s = create(Some(graph(&[usually(), QuantifierSpec::Term("most".into()), usually()])));
        let q = s.next_question().unwrap();
        assert!(matches!(&q.body, QuestionBody::Ambiguity { warrant, .. } if warrant == "w1"));
        s.answer(1, &q.id, Answer::Sense { index: 0 }).unwrap();
        let q = s.next_question().unwrap();
        assert!(matches!(&q.body, QuestionBody::Ambiguity { warrant, .. } if warrant == "w3"));
        s.answer(2, &q.id, Answer::Custom { meaning: crisp(0.7) }).unwrap();
        assert_eq!(s.phase, Phase::Building);
        assert!(s.next_question().is_none());
    }

    #[test]
    fn stale_answers_conflict() {
        let mut s = create(Some(graph(&[usually()])));
        let q = s.next_question().unwrap();
        assert!(matches!(
            s.answer(0, &q.id, Answer::Sense { index: 0 }),
            Err(ServiceError::Conflict(_))
        ));
        assert!(matches!(
            s.answer(1, "q0", Answer::Sense { index: 0 }),
            Err(ServiceError::Conflict(_))
        ));
        assert!(matches!(
            s.answer(1, &q.id, Answer::Response { accepted: true }),
            Err(ServiceError::Validation(_))
        ));
        assert!(matches!(
            s.answer(1, &q.id, Answer::Sense { index: 5 }),
            Err(ServiceError::Argument(_))
        ));
        assert_eq!(s.version, 1);
        s.answer(1, &q.id, Answer::Sense { index: 0 }).unwrap();
        assert!(s.answer(1, &q.id, Answer::Sense { index: 0 }).is_err());
    }

    #[test]
    fn review_loop() {
        // a crisp claim is at least one label area (0.15) from any label
        let mut s = create_with(Some(graph(&[QuantifierSpec::Explicit(crisp(0.7))])), Some(0.25));
        let Outcome::Evaluated(e) = s.evaluate().unwrap() else {
            panic!("pending")
        };
        assert!((e.claim.median() - 0.315).abs() < 1e-12);
        let q = s.next_question().unwrap();
        s.answer(s.version, &q.id, Answer::Subjective { label: "L5".into() }).unwrap();
        assert_eq!(s.phase, Phase::Revising);
        let q = s.next_question().unwrap();
        assert!(matches!(q.body, QuestionBody::Revise { .. }));
        s.answer(
            s.version,
            &q.id,
            Answer::ReviseGround {
                ground: "g1".into(),
                credibility: crisp(1.0),
            },
        )
        .unwrap();
        let Outcome::Evaluated(e2) = s.evaluate().unwrap() else {
            panic!("pending")
        };
        assert!(e2.claim.median() > e.claim.median());
        let q = s.next_question().unwrap();
        s.answer(s.version, &q.id, Answer::Subjective { label: "L2".into() }).unwrap();
        assert_eq!(s.phase, Phase::Agreed);
        assert!(s.next_question().is_none());
    }

    #[test]
    fn empty_session_asks_for_a_graph() {
        let mut s = create(None);
        let q = s.next_question().unwrap();
        assert_eq!(q.body, QuestionBody::Graph);
        s.answer(1, &q.id, Answer::Graph { graph: graph(&[usually()]) }).unwrap();
        assert!(matches!(s.phase, Phase::PendingAmbiguity { .. }));
        assert!(matches!(s.evaluate().unwrap(), Outcome::Pending { .. }));
    }

    #[test]
    fn cyclic_graph_is_rejected() {
        let mut g = graph(&[QuantifierSpec::Explicit(crisp(0.7))]);
        g.warrants[0].premises.push("w1".into());
        let req = CreateSession::Argument(CreateArgument {
            graph: Some(g),
            quantifiers: None,
            lexicon: None,
            engine: EngineConfig::default(),
            tolerance: None,
        });
        assert!(Session::create("x".into(), req).is_err());
    }

    #[test]
    fn elicitation_session_runs_to_calibrated() {
        let req = CreateSession::Elicitation(CreateElicitation {
            owner: "ann".into(),
            labels: vec!["low".into(), "high".into()],
            config: Some(ElicitationConfig::default().with_trials(8)),
        });
        let mut s = Session::create("e".into(), req).unwrap();
        let mut n = 0;
        while let Some(q) = s.next_question() {
            let QuestionBody::Stimulus { label, stimulus, .. } = q.body else {
                panic!("{q:?}")
            };
            let accepted = if label == "low" {
                (0.1..=0.4).contains(&stimulus)
            } else {
                (0.6..=0.9).contains(&stimulus)
            };
            s.answer(s.version, &q.id, Answer::Response { accepted }).unwrap();
            n += 1;
        }
        assert_eq!(s.phase, Phase::Calibrated);
        assert_eq!(s.version, n + 1);
        let lex = s.lexicon().unwrap();
        assert_eq!(lex.owner(), "ann");
        assert!(lex.get("low").unwrap().meaning.median() < lex.get("high").unwrap().meaning.median());
    }
}
