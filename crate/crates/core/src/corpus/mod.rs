//! Problems, submission streams and the brute-force ground truth.

mod generate;
mod io;
pub mod mutate;
mod oracle;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learn::Label;
use crate::minilang::{parse, ParseError, PrintArg, Program, Stmt, MAX_INPUTS};
use crate::symex::InputDomain;

pub use generate::{generate_corpus, GenerationProfile};
pub use io::{
    format_manifest, format_problem_spec, load_corpus, parse_manifest, parse_problem_spec,
    write_corpus, ManifestEntry, ProblemHeader, MANIFEST_FILE, REFERENCE_FILE, SPEC_FILE,
    SUBMISSION_DIR,
};
pub use mutate::{Bug, Rewrite};
pub use oracle::{oracle_label, Oracle, OracleVerdict, DEFAULT_EXHAUSTIVE_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("no manifest.txt in {0}")]
    MissingManifest(PathBuf),
    #[error("problem.spec line {line}: {message}")]
    SpecParse { line: usize, message: String },
    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },
    #[error("duplicate submission id {0:?}")]
    DuplicateId(String),
    #[error("reference does not parse: {0}")]
    Reference(ParseError),
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("domain has {size} points, exhaustive cap is {cap}")]
    DomainTooLarge { size: u128, cap: u128 },
    #[error("program reads {found} inputs, problem has {expected}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("infeasible generation profile: {0}")]
    ProfileInfeasible(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, e: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Int,
    Str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputBound {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub inputs: Vec<InputBound>,
    pub output: OutputKind,
    pub reference: Program,
}

fn print_kinds(p: &Program) -> (bool, bool) {
    let (mut ints, mut strs) = (false, false);
    p.visit_stmts(&mut |s| match s {
        Stmt::Print(PrintArg::Int(_)) => ints = true,
        Stmt::Print(PrintArg::Str(_)) => strs = true,
        _ => {}
    });
    (ints, strs)
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<InputBound>,
        output: OutputKind,
        reference: Program,
    ) -> Result<Self, CorpusError> {
        let spec = ProblemSpec {
            name: name.into(),
            inputs,
            output,
            reference,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_sources(spec_text: &str, reference_source: &str) -> Result<Self, CorpusError> {
        let h = parse_problem_spec(spec_text)?;
        let reference = parse(reference_source).map_err(CorpusError::Reference)?;
        ProblemSpec::new(h.name, h.inputs, h.output, reference)
    }

    pub fn header(&self) -> ProblemHeader {
        ProblemHeader {
            name: self.name.clone(),
            inputs: self.inputs.clone(),
            output: self.output,
        }
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidSpec(m));
        if self.inputs.is_empty() || self.inputs.len() > MAX_INPUTS {
            return bad(format!("{} inputs, expected 1 to {MAX_INPUTS}", self.inputs.len()));
        }
        if self.reference.arity() != self.inputs.len() {
            return bad(format!(
                "reference reads {} inputs, problem declares {}",
                self.reference.arity(),
                self.inputs.len()
            ));
        }
        if let Some(b) = self.inputs.iter().find(|b| b.lo > b.hi) {
            return bad(format!("input {} has empty range {}..{}", b.name, b.lo, b.hi));
        }
        let (ints, strs) = print_kinds(&self.reference);
        let ok = match self.output {
            OutputKind::Int => !strs,
            OutputKind::Str => !ints,
        };
        if !ok {
            return bad(format!("reference prints do not match output kind {:?}", self.output));
        }
        Ok(())
    }

    pub fn domain(&self) -> InputDomain {
        InputDomain::new(self.inputs.iter().map(|b| (b.lo, b.hi)).collect())
            .expect("validated bounds")
    }

    pub fn domain_size(&self) -> u128 {
        self.domain().size()
    }
}

/// One entry of a submission stream. `external_verdict` is advisory only;
/// the oracle decides ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub timestamp: i64,
    pub source: String,
    pub external_verdict: Option<Label>,
}

impl Submission {
    pub fn program(&self) -> Result<Program, ParseError> {
        parse(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pruned {
    pub id: String,
    pub reason: String,
}

/// A loaded corpus. Every submission parses and matches the problem arity;
/// the stream is ordered by timestamp, then id.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub spec: ProblemSpec,
    pub submissions: Vec<Submission>,
    pub programs: Vec<Program>,
    pub pruned: Vec<Pruned>,
}

pub(crate) fn sort_stream(subs: &mut [Submission]) {
    subs.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
}

macro_rules! builtin_table {
    ($($name:literal),*) => {
        &[$(($name,
            include_str!(concat!("../../problems/", $name, "/problem.spec")),
            include_str!(concat!("../../problems/", $name, "/reference.mc")))),*]
    };
}

const BUILTINS: &[(&str, &str, &str)] =
    builtin_table!("square", "max3", "watermelon", "sumloop", "ceildiv");

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|b| b.0).collect()
}

pub fn builtin(name: &str) -> Option<ProblemSpec> {
    BUILTINS.iter().find(|b| b.0 == name).map(|(_, spec, reference)| {
        ProblemSpec::from_sources(spec, reference).expect("built-in problems are valid")
    })
}

pub fn builtin_problems() -> Vec<ProblemSpec> {
    builtin_names().into_iter().filter_map(builtin).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        let all = builtin_problems();
        assert_eq!(all.len(), 5);
        for p in &all {
            assert!(p.domain_size() <= 10_000, "{}", p.name);
        }
        assert_eq!(builtin("square").unwrap().domain_size(), 1000);
        assert_eq!(builtin("watermelon").unwrap().output, OutputKind::Str);
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn spec_validation() {
        let r = parse("read(n); print(n);").unwrap();
        let b = |lo, hi| InputBound {
            name: "n".into(),
            lo,
            hi,
        };
        assert!(ProblemSpec::new("x", vec![b(1, 3)], OutputKind::Int, r.clone()).is_ok());
        assert!(ProblemSpec::new("x", vec![b(3, 1)], OutputKind::Int, r.clone()).is_err());
        assert!(ProblemSpec::new("x", vec![b(1, 3)], OutputKind::Str, r.clone()).is_err());
        assert!(ProblemSpec::new("x", vec![b(1, 3), b(1, 3)], OutputKind::Int, r).is_err());
    }
}
