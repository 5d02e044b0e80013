use std::collections::BTreeMap;

use atas::corpus::mutate::rename_randomly;
use atas::corpus::{builtin, generate_corpus, GenerationProfile, Oracle};
use atas::equiv::{check_equivalence, validate_counterexample, EquivVerdict};
use atas::features::token_texts;
use atas::learn::{pick_threshold, Label, ModelConfig};
use atas::minilang::{parse, render, run_concrete, BinOp, Outcome, Program, TestCase, DEFAULT_FUEL};
use atas::pipeline::{is_partition, run_atas, run_baseline, AtasConfig, Entry};
use atas::symex::{explore_paths, solve_constraint, ExploreBudget, InputDomain, SolveResult, SymExpr};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn expr_over(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(vars).prop_map(String::from),
        (-3i64..6).prop_map(|v| v.to_string()),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        let op = prop_oneof![
            Just("+"),
            Just("-"),
            Just("*"),
            Just("/"),
            Just("%"),
            Just("<"),
            Just("<="),
            Just("=="),
            Just("!="),
            Just("&&"),
            Just("||"),
        ];
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(l, o, r)| format!("({l} {o} {r})")),
            inner.prop_map(|e| format!("!({e})")),
        ]
    })
}

fn stmt() -> impl Strategy<Value = String> {
    prop_oneof![
        expr().prop_map(|e| format!("x = {e};")),
        (expr(), expr(), expr()).prop_map(|(c, t, e)| format!("if ({c}) {{ x = {t}; }} else {{ x = {e}; }}")),
        (1i64..5, expr()).prop_map(|(k, e)| format!("for (int i = 0; i < {k}; i = i + 1) {{ x = x + {e}; }}")),
        (0i64..3).prop_map(|d| format!("while (x > 0 && x < 20) {{ x = x + {d}; }}")),
        (expr(), expr()).prop_map(|(c, e)| format!(
            "switch (x % 3) {{ case 0: x = {c}; case 1: x = {e}; default: x = x + 1; }}"
        )),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    expr_over(&["a", "b", "x"])
}

/// Two-input programs with one print at the end.
fn program() -> impl Strategy<Value = Program> {
    (expr_over(&["a", "b"]), prop::collection::vec(stmt(), 0..4), expr()).prop_map(|(init, body, out)| {
        let src = format!("read(a); read(b); int x = {init}; {} print({out});", body.join(" "));
        parse(&src).unwrap_or_else(|e| panic!("{e}: {src}"))
    })
}

fn small_domain() -> InputDomain {
    InputDomain::new(vec![(-4, 4), (-4, 4)]).unwrap()
}

fn sym() -> impl Strategy<Value = SymExpr> {
    let leaf = prop_oneof![
        (0usize..2).prop_map(SymExpr::input),
        (-5i64..6).prop_map(SymExpr::constant),
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Rem),
            Just(BinOp::Lt),
            Just(BinOp::Ge),
            Just(BinOp::Eq),
            Just(BinOp::Ne),
            Just(BinOp::And),
            Just(BinOp::Or),
        ];
        (op, inner.clone(), inner).prop_map(|(o, l, r)| SymExpr::binary(o, l, r))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn render_round_trips(p in program()) {
        prop_assert_eq!(parse(&render(&p)).unwrap(), p);
    }

    #[test]
    fn fuel_is_monotone(p in program(), a in -4i64..5, b in -4i64..5, fuel in 1u64..400) {
        let t = TestCase::new(vec![a, b]);
        let r = run_concrete(&p, &t, fuel);
        prop_assert_eq!(&run_concrete(&p, &t, fuel), &r);
        if r.outcome == Outcome::FuelExhausted {
            prop_assert_eq!(run_concrete(&p, &t, fuel / 2).outcome, Outcome::FuelExhausted);
        } else {
            prop_assert!(r.steps_used <= fuel);
            let more = run_concrete(&p, &t, fuel * 3 + 7);
            prop_assert_eq!(more, r.clone());
            prop_assert_eq!(run_concrete(&p, &t, r.steps_used), r);
        }
    }

    #[test]
    fn renaming_preserves_behaviour_and_tokens(p in program(), seed in any::<u64>()) {
        let q = rename_randomly(&p, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(token_texts(&p), token_texts(&q));
        for t in small_domain().points().step_by(7) {
            prop_assert_eq!(run_concrete(&p, &t, 5000), run_concrete(&q, &t, 5000));
        }
    }

    #[test]
    fn complete_exploration_partitions_the_domain(p in program()) {
        let dom = small_domain();
        let ex = explore_paths(&p, &dom, ExploreBudget::default());
        if ex.complete {
            for t in dom.points() {
                let hits: Vec<_> = ex.outcomes.iter().filter(|o| o.admits(&t.values)).collect();
                prop_assert_eq!(hits.len(), 1, "point {}", t);
                prop_assert_eq!(hits[0].concrete_output(&t.values), run_concrete(&p, &t, DEFAULT_FUEL).outcome);
            }
            for o in &ex.outcomes {
                prop_assert!(o.admits(&o.witness.values));
            }
        }
    }

    #[test]
    fn solver_finds_least_witness(c in prop::collection::vec(sym(), 1..4)) {
        let dom = small_domain();
        let brute = dom.points().find(|t| c.iter().all(|e| e.eval(&t.values) != 0));
        match solve_constraint(&c, &dom, 1_000_000) {
            SolveResult::Sat(w) => prop_assert_eq!(Some(w), brute),
            SolveResult::Unsat => prop_assert_eq!(brute, None),
            SolveResult::Unknown => prop_assert!(false, "cap is above the domain size"),
        }
    }

    #[test]
    fn checker_agrees_with_brute_force(p in program(), q in program()) {
        let dom = small_domain();
        let differs = dom.points().find(|t| {
            run_concrete(&p, t, DEFAULT_FUEL).outcome != run_concrete(&q, t, DEFAULT_FUEL).outcome
        });
        match check_equivalence(&p, &q, &dom, ExploreBudget::default()) {
            EquivVerdict::Equivalent => prop_assert_eq!(differs, None),
            EquivVerdict::Counterexample(c) => {
                prop_assert!(differs.is_some());
                prop_assert!(validate_counterexample(&p, &q, &c.test));
                prop_assert!(dom.contains(&c.test));
            }
            EquivVerdict::Unknown(_) => {}
        }
    }

    #[test]
    fn threshold_is_least_feasible_and_monotone(
        v in prop::collection::vec((0u8..=20, any::<bool>()), 1..40),
    ) {
        let val: Vec<(f64, Label)> = v
            .iter()
            .map(|&(p, c)| (p as f64 / 20.0, if c { Label::Correct } else { Label::Incorrect }))
            .collect();
        let negatives: Vec<f64> = val.iter().filter(|(_, l)| *l == Label::Incorrect).map(|(p, _)| *p).collect();
        let fpr = |t: f64| negatives.iter().filter(|&&p| p >= t).count() as f64 / negatives.len() as f64;
        let mut last = f64::INFINITY;
        for f in [0.05, 0.1, 0.25, 0.5, 0.75, 0.95] {
            let (t, got, _) = pick_threshold(&val, f);
            prop_assert!(t <= last);
            last = t;
            if negatives.is_empty() || t > 1.0 {
                continue;
            }
            prop_assert_eq!(got, fpr(t));
            prop_assert!(got < f);
            let smaller = std::iter::once(0.0).chain(val.iter().map(|(p, _)| *p)).filter(|&c| c < t);
            for c in smaller {
                prop_assert!(fpr(c) >= f);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pipelines_partition_and_only_reject_wrong_programs(seed in any::<u64>(), knn in any::<bool>()) {
        let spec = builtin("ceildiv").unwrap();
        let profile = GenerationProfile { count: 40, ..GenerationProfile::default() };
        let subs = generate_corpus(&spec, &profile, seed).unwrap();
        let q: Vec<Entry> = subs.iter().map(|s| Entry::new(s.id.clone(), s.program().unwrap())).collect();
        let oracle = Oracle::new(&spec, 1_000_000).unwrap();
        let truth: BTreeMap<&str, bool> = q
            .iter()
            .map(|e| (e.id.as_str(), oracle.label(&e.program).unwrap().is_correct()))
            .collect();
        let dom = spec.domain();
        let base = run_baseline(&q, &spec.reference, &dom, ExploreBudget::default());
        let config = AtasConfig {
            seed_count: 15,
            retrain_interval: 5,
            classifier: if knn { ModelConfig::knn() } else { ModelConfig::gbt() },
            rng_seed: seed,
            holdout: true,
            strict_seed: false,
            ..AtasConfig::default()
        };
        let atas = run_atas(&q, &spec.reference, &dom, &config).unwrap();
        for st in [&base, &atas] {
            prop_assert!(is_partition(st, &q));
            prop_assert!(st.metrics.is_consistent());
            prop_assert_eq!(st.metrics.log.len(), q.len());
            for id in &st.rejected {
                prop_assert!(!truth[id.as_str()], "{} rejected but correct", id);
            }
            for t in &st.failing_tests {
                prop_assert_eq!(&Some(&t.expected), &oracle.expected(&t.test));
            }
        }
        prop_assert!(atas.metrics.checker_calls_total <= base.metrics.checker_calls_total + atas.metrics.checker_calls_seed);
    }
}
