use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{JudgeState, PipelineError, Route};
use crate::learn::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteBreakdown {
    pub total: usize,
    pub oracle_incorrect: usize,
}

/// Accepted-but-incorrect submissions, measured against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Accepted submissions the oracle labels incorrect.
    pub errors: usize,
    pub oracle_incorrect: usize,
    /// `errors / oracle_incorrect`; zero when the denominator is zero.
    pub error_rate: f64,
    pub empty_denominator: bool,
    /// Rejected submissions the oracle labels correct.
    pub wrongly_rejected: usize,
    pub per_route: BTreeMap<Route, RouteBreakdown>,
}

pub fn evaluate_against_oracle(
    state: &JudgeState,
    oracle: &BTreeMap<String, Label>,
) -> Result<ErrorReport, PipelineError> {
    let label = |id: &String| {
        oracle
            .get(id)
            .copied()
            .ok_or_else(|| PipelineError::MissingOracleLabel(id.clone()))
    };
    let mut per_route: BTreeMap<Route, RouteBreakdown> =
        Route::ALL.iter().map(|&r| (r, RouteBreakdown::default())).collect();
    let mut errors = 0;
    let mut oracle_incorrect = 0;
    let mut wrongly_rejected = 0;
    for rec in &state.metrics.log {
        let truth = label(&rec.id)?;
        let b = per_route.get_mut(&rec.route).expect("all routes present");
        b.total += 1;
        if truth == Label::Incorrect {
            b.oracle_incorrect += 1;
            oracle_incorrect += 1;
            if rec.route.verdict() == Label::Correct {
                errors += 1;
            }
        } else if rec.route.verdict() == Label::Incorrect {
            wrongly_rejected += 1;
        }
    }
    let empty_denominator = oracle_incorrect == 0;
    Ok(ErrorReport {
        errors,
        oracle_incorrect,
        error_rate: if empty_denominator {
            0.0
        } else {
            errors as f64 / oracle_incorrect as f64
        },
        empty_denominator,
        wrongly_rejected,
        per_route,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use crate::pipeline::{run_baseline, Entry};
    use crate::symex::{ExploreBudget, InputDomain};

    #[test]
    fn unknown_verdict_counts_as_error() {
        let reference = parse("read(n); print(n*n);").unwrap();
        let dom = InputDomain::new(vec![(1, 100)]).unwrap();
        // Wrong only after 20 iterations, beyond the unroll bound.
        let late = parse(
            "read(n); int s = 0; int i = 0; while (i < n) { s = s + n; i = i + 1; } \
             if (n > 20) s = s + 1; print(s);",
        )
        .unwrap();
        let q = vec![
            Entry::new("a", reference.clone()),
            Entry::new("b", late),
            Entry::new("c", parse("read(n); print(n+n);").unwrap()),
        ];
        let budget = ExploreBudget {
            max_unroll: 8,
            ..ExploreBudget::default()
        };
        let st = run_baseline(&q, &reference, &dom, budget);
        let truth: BTreeMap<String, Label> = [
            ("a", Label::Correct),
            ("b", Label::Incorrect),
            ("c", Label::Incorrect),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
        let r = evaluate_against_oracle(&st, &truth).unwrap();
        assert_eq!(r.errors, 1);
        assert_eq!(r.oracle_incorrect, 2);
        assert_eq!(r.error_rate, 0.5);
        assert_eq!(r.per_route[&Route::CheckerUnknownAssumedCorrect].oracle_incorrect, 1);
        assert_eq!(r.wrongly_rejected, 0);

        let mut partial = truth.clone();
        partial.remove("c");
        assert_eq!(
            evaluate_against_oracle(&st, &partial),
            Err(PipelineError::MissingOracleLabel("c".into()))
        );
    }

    #[test]
    fn empty_denominator() {
        let reference = parse("read(n); print(n);").unwrap();
        let dom = InputDomain::new(vec![(1, 10)]).unwrap();
        let st = run_baseline(&[Entry::new("a", reference.clone())], &reference, &dom, ExploreBudget::default());
        let truth = [("a".to_string(), Label::Correct)].into_iter().collect();
        let r = evaluate_against_oracle(&st, &truth).unwrap();
        assert!(r.empty_denominator);
        assert_eq!(r.error_rate, 0.0);
    }
}
