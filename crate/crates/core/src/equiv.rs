//! Equivalence checking of a candidate against the reference.
//!
//! Both programs are explored symbolically; every pair of paths whose joint
//! condition is satisfiable with differing outputs yields a distinguishing
//! input. Counterexamples are confirmed by concrete execution before they
//! are reported.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{
    escape_string, run_concrete, unescape_string, BinOp, ExecutionResult, Outcome, Program,
    RuntimeErrorKind, TestCase, DEFAULT_FUEL,
};
use crate::symex::{
    explore_with_deadline, solve_constraint, ExploreBudget, Incompleteness, InputDomain,
    PathOutcome, SolveResult, SymExpr, SymOutput,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub test: TestCase,
    pub candidate_out: ExecutionResult,
    pub reference_out: ExecutionResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivVerdict {
    Equivalent,
    Counterexample(Counterexample),
    Unknown(Incompleteness),
}

impl EquivVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivVerdict::Equivalent)
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            EquivVerdict::Counterexample(c) => Some(c),
            _ => None,
        }
    }
}

enum Difference {
    Never,
    Always,
    When(SymExpr),
}

fn difference(c: &SymOutput, r: &SymOutput) -> Difference {
    match (c, r) {
        (SymOutput::Int(a), SymOutput::Int(b)) => {
            let ne = SymExpr::binary(BinOp::Ne, a.clone(), b.clone());
            match ne.as_const() {
                Some(0) => Difference::Never,
                Some(_) => Difference::Always,
                None => Difference::When(ne),
            }
        }
        (SymOutput::Str(a), SymOutput::Str(b)) if a == b => Difference::Never,
        (SymOutput::Error(a), SymOutput::Error(b)) if a == b => Difference::Never,
        _ => Difference::Always,
    }
}

/// Decides whether `candidate` and `reference` print the same thing on
/// every input of `domain`.
///
/// The search order is deterministic: candidate paths in exploration order,
/// and for each, reference paths in exploration order. Paths cut off by the
/// budget are afterwards replayed concretely on their witness inputs, which
/// catches non-terminating candidates.
pub fn check_equivalence(
    candidate: &Program,
    reference: &Program,
    domain: &InputDomain,
    budget: ExploreBudget,
) -> EquivVerdict {
    let deadline = Instant::now() + Duration::from_millis(budget.wall_clock_ms);
    let cand = explore_with_deadline(candidate, domain, budget, deadline);
    let refr = explore_with_deadline(reference, domain, budget, deadline);
    let mut incomplete = cand.incomplete.or(refr.incomplete);

    let confirm = |test: &TestCase| -> Option<Counterexample> {
        let candidate_out = run_concrete(candidate, test, DEFAULT_FUEL);
        let reference_out = run_concrete(reference, test, DEFAULT_FUEL);
        if candidate_out.outcome != reference_out.outcome {
            Some(Counterexample {
                test: test.clone(),
                candidate_out,
                reference_out,
            })
        } else {
            None
        }
    };

    'pairs: for c in &cand.outcomes {
        for r in &refr.outcomes {
            if Instant::now() >= deadline {
                incomplete.get_or_insert(Incompleteness::Timeout);
                break 'pairs;
            }
            match pair_witness(c, r, domain, budget.solver_cap) {
                PairResult::Distinct => {}
                PairResult::Unknown => {
                    incomplete.get_or_insert(Incompleteness::SolverCap);
                }
                PairResult::Witness(t) => {
                    if let Some(cx) = confirm(&t) {
                        return EquivVerdict::Counterexample(cx);
                    }
                    log::warn!("symbolic witness {t} did not reproduce concretely");
                    incomplete.get_or_insert(Incompleteness::SolverCap);
                }
            }
        }
    }

    for t in cand.truncated.iter().chain(&refr.truncated) {
        if let Some(cx) = confirm(t) {
            return EquivVerdict::Counterexample(cx);
        }
    }

    match incomplete {
        Some(why) => EquivVerdict::Unknown(why),
        None => EquivVerdict::Equivalent,
    }
}

enum PairResult {
    /// Disjoint conditions or equal outputs on the overlap.
    Distinct,
    Witness(TestCase),
    Unknown,
}

fn pair_witness(c: &PathOutcome, r: &PathOutcome, domain: &InputDomain, cap: u64) -> PairResult {
    let diff = difference(&c.output, &r.output);
    if matches!(diff, Difference::Never) {
        return PairResult::Distinct;
    }
    // Cheap check: the candidate path's own witness may already do.
    if r.admits(&c.witness.values) && c.concrete_output(&c.witness.values) != r.concrete_output(&c.witness.values) {
        return PairResult::Witness(c.witness.clone());
    }
    let mut conjuncts: Vec<SymExpr> = c.condition.iter().chain(&r.condition).cloned().collect();
    if let Difference::When(ne) = diff {
        conjuncts.push(ne);
    }
    match solve_constraint(&conjuncts, domain, cap) {
        SolveResult::Sat(t) => PairResult::Witness(t),
        SolveResult::Unsat => PairResult::Distinct,
        SolveResult::Unknown => PairResult::Unknown,
    }
}

/// True iff the two programs behave differently on `test`, counting runtime
/// errors and fuel exhaustion as observable behaviour.
pub fn validate_counterexample(candidate: &Program, reference: &Program, test: &TestCase) -> bool {
    run_concrete(candidate, test, DEFAULT_FUEL).outcome
        != run_concrete(reference, test, DEFAULT_FUEL).outcome
}

/// A stored failing test: the input and what the reference prints on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailingTest {
    pub test: TestCase,
    pub expected: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FailingTestParseError {
    #[error("missing tab between inputs and expected output")]
    MissingTab,
    #[error("bad input value {0:?}")]
    BadValue(String),
    #[error("bad expected output {0:?}")]
    BadOutput(String),
}

/// `values<TAB>expected`, values comma-separated. Expected outputs are a
/// decimal integer, a double-quoted string with `\"`, `\\`, `\n`, `\t`
/// escapes, `error:<Kind>` or `fuel-exhausted`.
impl fmt::Display for FailingTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.test, self.expected)
    }
}

impl FromStr for FailingTest {
    type Err = FailingTestParseError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let (inputs, expected) = line.split_once('\t').ok_or(FailingTestParseError::MissingTab)?;
        let values = inputs
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<i64>()
                    .map_err(|_| FailingTestParseError::BadValue(v.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FailingTest {
            test: TestCase::new(values),
            expected: parse_outcome(expected)?,
        })
    }
}

fn parse_outcome(s: &str) -> Result<Outcome, FailingTestParseError> {
    let bad = || FailingTestParseError::BadOutput(s.to_string());
    if s == "fuel-exhausted" {
        return Ok(Outcome::FuelExhausted);
    }
    if let Some(kind) = s.strip_prefix("error:") {
        let k = match kind {
            "DivideByZero" => RuntimeErrorKind::DivideByZero,
            "ModByZero" => RuntimeErrorKind::ModByZero,
            "NoPrintReached" => RuntimeErrorKind::NoPrintReached,
            "MultiplePrints" => RuntimeErrorKind::MultiplePrints,
            _ => return Err(bad()),
        };
        return Ok(Outcome::RuntimeError(k));
    }
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        let toks = crate::minilang::tokenize(s).map_err(|_| bad())?;
        if toks.len() == 1 {
            let value = unescape_string(&toks[0].text);
            if escape_string(&value) == s {
                return Ok(Outcome::StrOutput(value));
            }
        }
        return Err(bad());
    }
    s.parse::<i64>().map(Outcome::IntOutput).map_err(|_| bad())
}
