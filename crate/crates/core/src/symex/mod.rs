//! Symbolic execution of MiniC over bounded integer inputs.
//!
//! [`explore_paths`] enumerates every feasible path of a program together
//! with its path condition and symbolic output. Feasibility is decided by
//! [`solve_constraint`], which narrows input ranges by interval propagation
//! and then enumerates what is left.

mod explore;
mod expr;
mod solver;

pub use explore::{
    explore_paths, ExploreBudget, Exploration, Incompleteness, PathOutcome, SymOutput,
};
pub(crate) use explore::explore_with_deadline;
pub use expr::{SymExpr, SymNode};
pub use solver::{solve_constraint, DomainError, InputDomain, SolveResult, DEFAULT_SOLVER_CAP};

impl PathOutcome {
    /// True when `inputs` satisfies every conjunct of the path condition.
    pub fn admits(&self, inputs: &[i64]) -> bool {
        self.condition.iter().all(|c| c.eval(inputs) != 0)
    }

    /// Concrete output of this path on an input it admits.
    pub fn concrete_output(&self, inputs: &[i64]) -> crate::minilang::Outcome {
        use crate::minilang::Outcome;
        match &self.output {
            SymOutput::Int(e) => Outcome::IntOutput(e.eval(inputs)),
            SymOutput::Str(s) => Outcome::StrOutput(s.clone()),
            SymOutput::Error(k) => Outcome::RuntimeError(*k),
        }
    }
}
