use serde::{Deserialize, Serialize};

use super::{CorpusError, ProblemSpec};
use crate::minilang::{run_concrete, Outcome, Program, TestCase, DEFAULT_FUEL};

pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleVerdict {
    Correct,
    /// Carries the lexicographically least input on which the outputs differ.
    Incorrect(TestCase),
}

impl OracleVerdict {
    pub fn is_correct(&self) -> bool {
        matches!(self, OracleVerdict::Correct)
    }
}

/// Exhaustive ground truth. Reference outputs are computed once per domain
/// point; a candidate is run point by point in lexicographic order until
/// the first disagreement.
#[derive(Debug, Clone)]
pub struct Oracle {
    arity: usize,
    points: Vec<(TestCase, Outcome)>,
}

impl Oracle {
    pub fn new(spec: &ProblemSpec, cap: u128) -> Result<Self, CorpusError> {
        let domain = spec.domain();
        let size = domain.size();
        if size > cap {
            return Err(CorpusError::DomainTooLarge { size, cap });
        }
        let points = domain
            .points()
            .map(|t| {
                let out = run_concrete(&spec.reference, &t, DEFAULT_FUEL).outcome;
                (t, out)
            })
            .collect();
        Ok(Oracle {
            arity: domain.arity(),
            points,
        })
    }

    pub fn label(&self, program: &Program) -> Result<OracleVerdict, CorpusError> {
        if program.arity() != self.arity {
            return Err(CorpusError::ArityMismatch {
                expected: self.arity,
                found: program.arity(),
            });
        }
        for (t, expected) in &self.points {
            if run_concrete(program, t, DEFAULT_FUEL).outcome != *expected {
                return Ok(OracleVerdict::Incorrect(t.clone()));
            }
        }
        Ok(OracleVerdict::Correct)
    }

    pub fn expected(&self, test: &TestCase) -> Option<&Outcome> {
        self.points.iter().find(|(t, _)| t == test).map(|(_, o)| o)
    }
}

pub fn oracle_label(spec: &ProblemSpec, program: &Program) -> Result<OracleVerdict, CorpusError> {
    Oracle::new(spec, DEFAULT_EXHAUSTIVE_CAP)?.label(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{builtin, InputBound, OutputKind};
    use crate::minilang::parse;

    #[test]
    fn cube_is_wrong_at_two() {
        let spec = builtin("square").unwrap();
        let cube = parse("read(n); print(n*n*n);").unwrap();
        assert_eq!(
            oracle_label(&spec, &cube).unwrap(),
            OracleVerdict::Incorrect(TestCase::new(vec![2]))
        );
        assert_eq!(oracle_label(&spec, &spec.reference).unwrap(), OracleVerdict::Correct);
    }

    #[test]
    fn boundary_outside_domain_is_harmless() {
        // `w > 2` versus `w >= 2` differs only at w = 2.
        let strict = "read(w); if (w % 2 == 0 && w > 2) print(\"YES\"); else print(\"NO\");";
        let loose = "read(w); if (w % 2 == 0 && w >= 2) print(\"YES\"); else print(\"NO\");";
        let mk = |lo| {
            ProblemSpec::new(
                "wm",
                vec![InputBound {
                    name: "w".into(),
                    lo,
                    hi: 100,
                }],
                OutputKind::Str,
                parse(strict).unwrap(),
            )
            .unwrap()
        };
        let loose = parse(loose).unwrap();
        assert_eq!(
            oracle_label(&mk(1), &loose).unwrap(),
            OracleVerdict::Incorrect(TestCase::new(vec![2]))
        );
        assert_eq!(oracle_label(&mk(3), &loose).unwrap(), OracleVerdict::Correct);
    }

    #[test]
    fn least_witness_in_several_dimensions() {
        let spec = builtin("max3").unwrap();
        let bad = parse("read(a); read(b); read(c); if (a > b) print(a); else print(b);").unwrap();
        // (1,1,2) is the first triple whose maximum is c alone.
        assert_eq!(
            oracle_label(&spec, &bad).unwrap(),
            OracleVerdict::Incorrect(TestCase::new(vec![1, 1, 2]))
        );
    }

    #[test]
    fn too_large_and_wrong_arity() {
        let big = ProblemSpec::new(
            "big",
            ["a", "b", "c"]
                .iter()
                .map(|n| InputBound {
                    name: n.to_string(),
                    lo: 1,
                    hi: 1000,
                })
                .collect(),
            OutputKind::Int,
            parse("read(a); read(b); read(c); print(a);").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            oracle_label(&big, &big.reference),
            Err(CorpusError::DomainTooLarge { .. })
        ));
        let spec = builtin("square").unwrap();
        assert!(matches!(
            oracle_label(&spec, &parse("read(a); read(b); print(a);").unwrap()),
            Err(CorpusError::ArityMismatch { .. })
        ));
    }
}
