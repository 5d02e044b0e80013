//! Automated grading of small integer programs.
//!
//! Submissions written in MiniC are judged against a reference solution.
//! The expensive judge is a symbolic-execution equivalence check that
//! produces a concrete failing test whenever a submission disagrees with
//! the reference. Two online pipelines drive it:
//!
//! * [`pipeline::run_baseline`] replays known failing tests and runs the
//!   checker on everything that passes them.
//! * [`pipeline::run_atas`] additionally trains a classifier on anonymised
//!   token n-grams and skips the checker for submissions it confidently
//!   labels correct, retraining at a fixed interval.

pub mod cli;
pub mod corpus;
pub mod equiv;
pub mod features;
pub mod learn;
pub mod minilang;
pub mod pipeline;
pub mod symex;
