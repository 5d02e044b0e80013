use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{baseline_step, route_for_verdict, Entry, JudgeState, PhaseStats, PipelineError, Route};
use crate::equiv::check_equivalence;
use crate::features::{build_vocab, encode, FeatureVocab, DEFAULT_NGRAM};
use crate::learn::{
    predict_probability, train_and_get_thresh, CalibratedModel, Label, LabeledSample, ModelConfig,
};
use crate::minilang::Program;
use crate::symex::{ExploreBudget, InputDomain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtasConfig {
    /// Submissions labelled by replay and checker before any training.
    pub seed_count: usize,
    /// Retrain after every `retrain_interval` post-seed submissions; zero
    /// keeps the seed model for the whole run.
    pub retrain_interval: usize,
    pub max_fpr: f64,
    pub ngram: usize,
    pub classifier: ModelConfig,
    pub check_budget: ExploreBudget,
    pub rng_seed: u64,
    /// Hold out every tenth post-seed submission for precision and recall.
    pub holdout: bool,
    /// Fail with `SeedTooSmall` instead of falling back to the baseline.
    pub strict_seed: bool,
    /// Run the seed checker calls concurrently, without replay between them.
    pub parallel_seed: bool,
}

impl Default for AtasConfig {
    fn default() -> Self {
        AtasConfig {
            seed_count: 50,
            retrain_interval: 50,
            max_fpr: 0.3,
            ngram: DEFAULT_NGRAM,
            classifier: ModelConfig::gbt(),
            check_budget: ExploreBudget::default(),
            rng_seed: 0,
            holdout: false,
            strict_seed: false,
            parallel_seed: false,
        }
    }
}

impl AtasConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.to_string()));
        if self.seed_count == 0 {
            return bad("seed count must be at least 1");
        }
        if !(self.max_fpr > 0.0 && self.max_fpr < 1.0) {
            return bad("max FPR must lie in (0, 1)");
        }
        if self.ngram == 0 {
            return bad("n-gram length must be at least 1");
        }
        self.classifier
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }
}

const HOLDOUT_PERIOD: usize = 10;

struct Trainer<'a> {
    config: &'a AtasConfig,
    vocab: FeatureVocab,
    correct: Vec<LabeledSample>,
    incorrect: Vec<LabeledSample>,
    retrains: usize,
}

impl Trainer<'_> {
    fn add(&mut self, program: &Program, label: Label) {
        let s = LabeledSample::new(encode(program, &self.vocab), label);
        match label {
            Label::Correct => self.correct.push(s),
            Label::Incorrect => self.incorrect.push(s),
        }
    }

    fn train(&mut self) -> Result<CalibratedModel, String> {
        let seed = self.config.rng_seed.wrapping_add(self.retrains as u64);
        self.retrains += 1;
        train_and_get_thresh(
            &self.config.classifier,
            self.config.max_fpr,
            &self.correct,
            &self.incorrect,
            seed,
        )
        .map_err(|e| e.to_string())
    }
}

fn seed_phase(
    state: &mut JudgeState,
    seed: &[Entry],
    reference: &Program,
    domain: &InputDomain,
    config: &AtasConfig,
) -> Vec<Route> {
    if !config.parallel_seed {
        return seed
            .iter()
            .map(|e| baseline_step(state, e, reference, domain, config.check_budget, false))
            .collect();
    }
    let verdicts: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = seed
            .iter()
            .map(|e| {
                s.spawn(move || {
                    let t = Instant::now();
                    (check_equivalence(&e.program, reference, domain, config.check_budget), t)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("checker thread")).collect()
    });
    seed.iter()
        .zip(verdicts)
        .map(|(e, (v, started))| {
            let route = route_for_verdict(v, &mut state.failing_tests);
            state.record(&e.id, route, started, false, None, false);
            route
        })
        .collect()
}

/// Seed phase, then classifier-gated checking with periodic retraining.
///
/// The vocabulary is frozen on the seed programs. Training data is every
/// checker-accepted submission as Correct and every rejected one as
/// Incorrect, excluding held-out submissions.
pub fn run_atas(
    queue: &[Entry],
    reference: &Program,
    domain: &InputDomain,
    config: &AtasConfig,
) -> Result<JudgeState, PipelineError> {
    config.validate()?;
    let started = Instant::now();
    let mut state = JudgeState::default();
    let i = config.seed_count.min(queue.len());
    if queue.len() <= config.seed_count {
        log::warn!(
            "queue has {} submissions, seed needs {}; nothing left to classify",
            queue.len(),
            config.seed_count
        );
        state.insufficient_post_seed = true;
    }
    let (seed, rest) = queue.split_at(i);
    let routes = seed_phase(&mut state, seed, reference, domain, config);

    let seed_programs: Vec<Program> = seed.iter().map(|e| e.program.clone()).collect();
    let mut trainer = match build_vocab(&seed_programs, config.ngram) {
        Ok(vocab) => Some(Trainer {
            config,
            vocab,
            correct: Vec::new(),
            incorrect: Vec::new(),
            retrains: 0,
        }),
        Err(e) if seed.is_empty() => {
            log::debug!("empty seed: {e}");
            None
        }
        Err(e) => {
            if config.strict_seed {
                return Err(PipelineError::SeedTooSmall(e.to_string()));
            }
            log::warn!("no vocabulary from the seed ({e}); falling back to the baseline");
            state.degraded = true;
            None
        }
    };
    state.vocab = trainer.as_ref().map(|t| t.vocab.clone());
    if let Some(t) = trainer.as_mut() {
        for (e, r) in seed.iter().zip(&routes) {
            if *r != Route::ClassifierAccept {
                let label = r.verdict();
                if label == Label::Incorrect || r.called_checker() {
                    t.add(&e.program, label);
                }
            }
        }
        match t.train() {
            Ok(m) => state.model = Some(m),
            Err(e) if config.strict_seed => return Err(PipelineError::SeedTooSmall(e)),
            Err(e) => {
                log::warn!("seed training failed ({e}); checker handles everything until a retrain succeeds");
                state.degraded = true;
            }
        }
    }
    state.phases.push(PhaseStats::new(0, state.model.as_ref()));

    for (k, e) in rest.iter().enumerate() {
        let holdout = config.holdout && k % HOLDOUT_PERIOD == HOLDOUT_PERIOD - 1;
        let step_started = Instant::now();
        let (replay, runs) = super::replay_failing_tests(&e.program, &state.failing_tests);
        state.metrics.tests_replayed += runs;
        let (route, probability) = if matches!(replay, super::Replay::Fails(_)) {
            (Route::ReplayFail, None)
        } else {
            let probability = match (&trainer, &state.model) {
                (Some(t), Some(m)) => Some(
                    predict_probability(&m.model, &encode(&e.program, &t.vocab))
                        .expect("vocabulary is frozen"),
                ),
                _ => None,
            };
            let thresh = state.model.as_ref().map(|m| m.thresh);
            let accept = matches!((probability, thresh), (Some(p), Some(t)) if p >= t);
            if accept && !holdout {
                (Route::ClassifierAccept, probability)
            } else {
                let route = super::label_with_checker(
                    &e.program,
                    reference,
                    domain,
                    config.check_budget,
                    &mut state.failing_tests,
                );
                if holdout {
                    let phase = state.phases.last_mut().expect("phase 0 exists");
                    phase.holdout_total += 1;
                    match (accept, route.verdict()) {
                        (true, Label::Correct) => phase.true_accept += 1,
                        (true, Label::Incorrect) => phase.false_accept += 1,
                        (false, Label::Correct) => phase.false_reject += 1,
                        (false, Label::Incorrect) => phase.true_reject += 1,
                    }
                }
                (route, probability)
            }
        };
        state.record(&e.id, route, step_started, true, probability, holdout);
        if let Some(t) = trainer.as_mut() {
            if !holdout && (route == Route::ReplayFail || route.called_checker()) {
                t.add(&e.program, route.verdict());
            }
            let r = config.retrain_interval;
            if r > 0 && (state.processed() - i) % r == 0 {
                match t.train() {
                    Ok(m) => {
                        state.model = Some(m);
                        state.degraded = false;
                    }
                    Err(err) => log::warn!("retraining failed ({err}); keeping the previous model"),
                }
                let n = state.phases.len();
                state.phases.push(PhaseStats::new(n, state.model.as_ref()));
            }
        }
    }
    state.metrics.wall_clock_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::ALL_TO_CHECKER;
    use crate::minilang::parse;
    use crate::pipeline::{is_partition, run_baseline};

    fn square() -> (Program, InputDomain) {
        (
            parse("read(n); int ans = n * n; print(ans);").unwrap(),
            InputDomain::new(vec![(1, 1000)]).unwrap(),
        )
    }

    /// Correct programs share one shape; incorrect ones are cubes or
    /// off-by-one squares.
    fn stream(n: usize) -> Vec<Entry> {
        (0..n)
            .map(|i| {
                let src = match i % 5 {
                    0 => format!("read(v{i}); int w = v{i} * v{i} * v{i}; print(w);"),
                    1 => format!("read(v{i}); int w = v{i} * v{i} + 1; print(w);"),
                    _ => format!("read(v{i}); int w = v{i} * v{i}; print(w);"),
                };
                Entry::new(format!("e{i:03}"), parse(&src).unwrap())
            })
            .collect()
    }

    fn config(seed: usize, r: usize, f: f64) -> AtasConfig {
        AtasConfig {
            seed_count: seed,
            retrain_interval: r,
            max_fpr: f,
            classifier: ModelConfig::knn(),
            ..AtasConfig::default()
        }
    }

    #[test]
    fn fewer_checker_calls_than_baseline() {
        let (reference, dom) = square();
        let q = stream(40);
        let base = run_baseline(&q, &reference, &dom, ExploreBudget::default());
        let st = run_atas(&q, &reference, &dom, &config(20, 10, 0.3)).unwrap();
        assert!(is_partition(&st, &q));
        assert!(st.metrics.is_consistent());
        assert_eq!(st.metrics.log.len(), 40);
        let base_post = base.metrics.log[20..]
            .iter()
            .filter(|r| r.route.called_checker())
            .count();
        assert_eq!(base_post, 12);
        assert!(st.metrics.checker_calls_post_seed < base_post / 2);
        assert_eq!(st.verdicts(), base.verdicts());
    }

    #[test]
    fn single_class_seed() {
        let (reference, dom) = square();
        let q: Vec<Entry> = (0..12)
            .map(|i| Entry::new(format!("r{i}"), reference.clone()))
            .collect();
        let strict = AtasConfig {
            strict_seed: true,
            ..config(5, 5, 0.3)
        };
        assert!(matches!(
            run_atas(&q, &reference, &dom, &strict),
            Err(PipelineError::SeedTooSmall(_))
        ));
        let st = run_atas(&q, &reference, &dom, &config(5, 5, 0.3)).unwrap();
        assert!(st.degraded);
        assert_eq!(st.metrics.checker_calls_total, 12);
    }

    #[test]
    fn short_queue_is_flagged() {
        let (reference, dom) = square();
        let q = stream(6);
        let st = run_atas(&q, &reference, &dom, &config(10, 5, 0.3)).unwrap();
        assert!(st.insufficient_post_seed);
        assert_eq!(st.processed(), 6);
        assert_eq!(st.metrics.checker_calls_post_seed, 0);
    }

    #[test]
    fn infeasible_threshold_routes_like_baseline() {
        let (reference, dom) = square();
        // Both classes share one anonymised token stream, so no threshold
        // separates them.
        let q: Vec<Entry> = (0..40)
            .map(|i| {
                let out = if i % 3 == 0 { "x" } else { "z" };
                let src = format!("read(v); int x = v; int z = v * x; print({out});");
                Entry::new(format!("e{i:03}"), parse(&src).unwrap())
            })
            .collect();
        let st = run_atas(&q, &reference, &dom, &config(20, 1, 1e-9)).unwrap();
        assert!(st.phases.iter().all(|p| p.thresh.is_none_or(|t| t == ALL_TO_CHECKER)));
        let base = run_baseline(&q, &reference, &dom, ExploreBudget::default());
        let routes = |s: &JudgeState| s.metrics.log.iter().map(|r| r.route).collect::<Vec<_>>();
        assert_eq!(routes(&st), routes(&base));
    }

    #[test]
    fn parallel_seed_matches_checker_verdicts() {
        let (reference, dom) = square();
        let q = stream(30);
        let par = AtasConfig {
            parallel_seed: true,
            ..config(10, 10, 0.3)
        };
        let st = run_atas(&q, &reference, &dom, &par).unwrap();
        assert_eq!(st.metrics.checker_calls_seed, 10);
        let seq = run_atas(&q, &reference, &dom, &config(10, 10, 0.3)).unwrap();
        assert_eq!(st.verdicts(), seq.verdicts());
    }

    #[test]
    fn holdout_phases() {
        let (reference, dom) = square();
        let q = stream(60);
        let cfg = AtasConfig {
            holdout: true,
            ..config(20, 10, 0.3)
        };
        let st = run_atas(&q, &reference, &dom, &cfg).unwrap();
        let held: usize = st.phases.iter().map(|p| p.holdout_total).sum();
        assert_eq!(held, 4);
        assert_eq!(st.phases.len(), 5);
        assert!(st.metrics.log.iter().filter(|r| r.holdout).all(|r| r.route.called_checker()
            || r.route == Route::ReplayFail));
        assert!(st.metrics.is_consistent());
    }
}
