//! Online judging pipelines.
//!
//! Both pipelines consume a time-ordered queue once. Each submission is
//! first replayed on the failing tests collected so far; only survivors can
//! reach the equivalence checker. ATAS additionally lets a calibrated
//! classifier accept survivors without a checker call.

mod atas;
mod evaluate;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::equiv::{check_equivalence, EquivVerdict, FailingTest};
use crate::features::FeatureVocab;
use crate::learn::{CalibratedModel, CalibrationStatus, Label};
use crate::minilang::{run_concrete, Program, DEFAULT_FUEL};
use crate::symex::{ExploreBudget, InputDomain};

pub use atas::{run_atas, AtasConfig};
pub use evaluate::{evaluate_against_oracle, ErrorReport, RouteBreakdown};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("classifier cannot be trained on the seed: {0}")]
    SeedTooSmall(String),
    #[error("no oracle label for submission {0:?}")]
    MissingOracleLabel(String),
}

/// A queued submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub id: String,
    pub program: Program,
}

impl Entry {
    pub fn new(id: impl Into<String>, program: Program) -> Self {
        Entry {
            id: id.into(),
            program,
        }
    }

    pub fn from_corpus(c: &Corpus) -> Vec<Entry> {
        c.submissions
            .iter()
            .zip(&c.programs)
            .map(|(s, p)| Entry::new(s.id.clone(), p.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    ReplayFail,
    ClassifierAccept,
    CheckerCorrect,
    CheckerIncorrect,
    CheckerUnknownAssumedCorrect,
}

impl Route {
    pub const ALL: [Route; 5] = [
        Route::ReplayFail,
        Route::ClassifierAccept,
        Route::CheckerCorrect,
        Route::CheckerIncorrect,
        Route::CheckerUnknownAssumedCorrect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Route::ReplayFail => "replay-fail",
            Route::ClassifierAccept => "classifier-accept",
            Route::CheckerCorrect => "checker-correct",
            Route::CheckerIncorrect => "checker-incorrect",
            Route::CheckerUnknownAssumedCorrect => "checker-unknown",
        }
    }

    pub fn verdict(self) -> Label {
        match self {
            Route::ReplayFail | Route::CheckerIncorrect => Label::Incorrect,
            _ => Label::Correct,
        }
    }

    pub fn called_checker(self) -> bool {
        matches!(
            self,
            Route::CheckerCorrect | Route::CheckerIncorrect | Route::CheckerUnknownAssumedCorrect
        )
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub id: String,
    pub route: Route,
    pub elapsed_ms: f64,
    pub post_seed: bool,
    /// Classifier probability, when a model scored the submission.
    pub probability: Option<f64>,
    pub holdout: bool,
}

impl LogRecord {
    /// `id  route  verdict  elapsed_ms  checker_called`, tab-separated.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.3}\t{}",
            self.id,
            self.route,
            self.route.verdict(),
            self.elapsed_ms,
            self.route.called_checker() as u8
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsCounters {
    pub checker_calls_total: usize,
    pub checker_calls_seed: usize,
    pub checker_calls_post_seed: usize,
    /// Concrete executions spent replaying stored failing tests.
    pub tests_replayed: usize,
    pub unknown_verdicts: usize,
    pub wall_clock_ms: f64,
    pub log: Vec<LogRecord>,
}

impl MetricsCounters {
    pub fn route_counts(&self) -> BTreeMap<Route, usize> {
        let mut m: BTreeMap<Route, usize> = Route::ALL.iter().map(|&r| (r, 0)).collect();
        for r in &self.log {
            *m.get_mut(&r.route).expect("all routes present") += 1;
        }
        m
    }

    pub fn run_log(&self) -> String {
        self.log.iter().map(|r| r.to_line() + "\n").collect()
    }

    /// Counters agree with the per-submission log.
    pub fn is_consistent(&self) -> bool {
        let calls = self.log.iter().filter(|r| r.route.called_checker()).count();
        let post = self
            .log
            .iter()
            .filter(|r| r.post_seed && r.route.called_checker())
            .count();
        let unknown = self
            .log
            .iter()
            .filter(|r| r.route == Route::CheckerUnknownAssumedCorrect)
            .count();
        calls == self.checker_calls_total
            && post == self.checker_calls_post_seed
            && self.checker_calls_seed + self.checker_calls_post_seed == self.checker_calls_total
            && unknown == self.unknown_verdicts
    }
}

/// Classifier statistics for one training phase, measured on held-out
/// submissions labelled by the checker. Positive means "accepted".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub phase: usize,
    pub thresh: Option<f64>,
    pub calibration_fpr: Option<f64>,
    pub status: Option<CalibrationStatus>,
    pub holdout_total: usize,
    pub true_accept: usize,
    pub false_accept: usize,
    pub false_reject: usize,
    pub true_reject: usize,
}

impl PhaseStats {
    pub(crate) fn new(phase: usize, model: Option<&CalibratedModel>) -> Self {
        PhaseStats {
            phase,
            thresh: model.map(|m| m.thresh),
            calibration_fpr: model.map(|m| m.calibration_fpr),
            status: model.map(|m| m.status),
            holdout_total: 0,
            true_accept: 0,
            false_accept: 0,
            false_reject: 0,
            true_reject: 0,
        }
    }

    pub fn precision(&self) -> Option<f64> {
        let d = self.true_accept + self.false_accept;
        (d > 0).then(|| self.true_accept as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.true_accept + self.false_reject;
        (d > 0).then(|| self.true_accept as f64 / d as f64)
    }
}

/// Mutable state of one pipeline run.
///
/// `accepted` and `rejected` partition the processed ids;
/// `accepted_by_checker` is the subset of `accepted` the checker labelled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JudgeState {
    pub accepted: Vec<String>,
    pub rejected: Vec<String>,
    pub accepted_by_checker: Vec<String>,
    pub failing_tests: Vec<FailingTest>,
    pub metrics: MetricsCounters,
    pub model: Option<CalibratedModel>,
    /// Frozen seed vocabulary the model was trained on.
    pub vocab: Option<FeatureVocab>,
    pub phases: Vec<PhaseStats>,
    /// Set when the queue held no submission past the seed.
    pub insufficient_post_seed: bool,
    /// Set when no classifier could be trained on the seed.
    pub degraded: bool,
}

impl JudgeState {
    pub fn processed(&self) -> usize {
        self.accepted.len() + self.rejected.len()
    }

    pub fn verdicts(&self) -> BTreeMap<String, Label> {
        self.accepted
            .iter()
            .map(|id| (id.clone(), Label::Correct))
            .chain(self.rejected.iter().map(|id| (id.clone(), Label::Incorrect)))
            .collect()
    }

    fn record(&mut self, id: &str, route: Route, started: Instant, post_seed: bool, probability: Option<f64>, holdout: bool) {
        match route.verdict() {
            Label::Correct => self.accepted.push(id.to_string()),
            Label::Incorrect => self.rejected.push(id.to_string()),
        }
        if route.called_checker() {
            self.metrics.checker_calls_total += 1;
            if post_seed {
                self.metrics.checker_calls_post_seed += 1;
            } else {
                self.metrics.checker_calls_seed += 1;
            }
            if route != Route::CheckerIncorrect {
                self.accepted_by_checker.push(id.to_string());
            }
        }
        if route == Route::CheckerUnknownAssumedCorrect {
            self.metrics.unknown_verdicts += 1;
        }
        self.metrics.log.push(LogRecord {
            id: id.to_string(),
            route,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            post_seed,
            probability,
            holdout,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Replay {
    Fails(FailingTest),
    PassesAll,
}

/// Runs `program` on each stored test in insertion order and stops at the
/// first whose outcome differs from the stored reference outcome. The
/// second component counts executions.
pub fn replay_failing_tests(program: &Program, tests: &[FailingTest]) -> (Replay, usize) {
    for (i, t) in tests.iter().enumerate() {
        if run_concrete(program, &t.test, DEFAULT_FUEL).outcome != t.expected {
            return (Replay::Fails(t.clone()), i + 1);
        }
    }
    (Replay::PassesAll, tests.len())
}

/// Calls the checker and returns the route it implies. A counterexample is
/// appended to the failing tests unless an equal input is already stored.
pub fn label_with_checker(
    program: &Program,
    reference: &Program,
    domain: &InputDomain,
    budget: ExploreBudget,
    tests: &mut Vec<FailingTest>,
) -> Route {
    route_for_verdict(check_equivalence(program, reference, domain, budget), tests)
}

fn route_for_verdict(verdict: EquivVerdict, tests: &mut Vec<FailingTest>) -> Route {
    match verdict {
        EquivVerdict::Equivalent => Route::CheckerCorrect,
        EquivVerdict::Counterexample(cx) => {
            if !tests.iter().any(|t| t.test == cx.test) {
                tests.push(FailingTest {
                    test: cx.test,
                    expected: cx.reference_out.outcome,
                });
            }
            Route::CheckerIncorrect
        }
        EquivVerdict::Unknown(why) => {
            log::debug!("checker gave up ({why}); assuming correct");
            Route::CheckerUnknownAssumedCorrect
        }
    }
}

/// Replay first, checker on survivors. Returns the route.
pub(crate) fn baseline_step(
    state: &mut JudgeState,
    entry: &Entry,
    reference: &Program,
    domain: &InputDomain,
    budget: ExploreBudget,
    post_seed: bool,
) -> Route {
    let started = Instant::now();
    let (replay, runs) = replay_failing_tests(&entry.program, &state.failing_tests);
    state.metrics.tests_replayed += runs;
    let route = match replay {
        Replay::Fails(_) => Route::ReplayFail,
        Replay::PassesAll => label_with_checker(
            &entry.program,
            reference,
            domain,
            budget,
            &mut state.failing_tests,
        ),
    };
    state.record(&entry.id, route, started, post_seed, None, false);
    route
}

/// Every submission is replayed, then checked if it survives.
pub fn run_baseline(
    queue: &[Entry],
    reference: &Program,
    domain: &InputDomain,
    budget: ExploreBudget,
) -> JudgeState {
    let started = Instant::now();
    let mut state = JudgeState::default();
    for e in queue {
        baseline_step(&mut state, e, reference, domain, budget, true);
    }
    state.metrics.wall_clock_ms = started.elapsed().as_secs_f64() * 1e3;
    state
}

/// Checks that `accepted` and `rejected` are disjoint and cover `queue`.
pub fn is_partition(state: &JudgeState, queue: &[Entry]) -> bool {
    let a: HashSet<&String> = state.accepted.iter().collect();
    let w: HashSet<&String> = state.rejected.iter().collect();
    let all: HashSet<&String> = queue.iter().map(|e| &e.id).collect();
    a.is_disjoint(&w)
        && a.len() + w.len() == state.processed()
        && a.union(&w).copied().collect::<HashSet<_>>() == all
}
