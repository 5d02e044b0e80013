use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mutate::{apply, count_sites, rename_randomly, Bug, Mutation, Rewrite};
use super::{sort_stream, CorpusError, ProblemSpec, Submission};
use crate::features::token_texts;
use crate::learn::Label;
use crate::minilang::{parse, render, Program};

/// Shape of a synthetic submission stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationProfile {
    pub count: usize,
    /// Fraction of intended-correct submissions. Ignored when
    /// `decile_curve` is set.
    pub correct_fraction: f64,
    /// Number of strategy clusters; each is a fixed rewrite recipe.
    pub clusters: usize,
    /// Relative weight of each bug kind; kinds absent from the map are
    /// never injected.
    pub bug_weights: BTreeMap<Bug, f64>,
    /// Correct fraction per tenth of the stream, in time order.
    pub decile_curve: Option<[f64; 10]>,
    /// Upper bound on rewrites per cluster recipe.
    pub max_rewrites: usize,
    pub start_time: i64,
}

impl Default for GenerationProfile {
    fn default() -> Self {
        GenerationProfile {
            count: 100,
            correct_fraction: 0.6,
            clusters: 5,
            bug_weights: Bug::ALL.iter().map(|&b| (b, 1.0)).collect(),
            decile_curve: None,
            max_rewrites: 3,
            start_time: 1_600_000_000,
        }
    }
}

const RETRIES: usize = 32;

impl GenerationProfile {
    fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::ProfileInfeasible(m.to_string()));
        if !(0.0..=1.0).contains(&self.correct_fraction) {
            return bad("correct fraction must lie in [0, 1]");
        }
        if let Some(c) = &self.decile_curve {
            if c.iter().any(|f| !(0.0..=1.0).contains(f)) {
                return bad("decile curve values must lie in [0, 1]");
            }
        }
        if self.count > 0 && self.clusters == 0 {
            return bad("at least one strategy cluster is needed");
        }
        if self.bug_weights.values().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return bad("bug weights must be finite and non-negative");
        }
        Ok(())
    }

    /// Intended label of each stream position.
    fn labels(&self, rng: &mut impl Rng) -> Vec<bool> {
        let n = self.count;
        match &self.decile_curve {
            None => {
                let correct = (self.correct_fraction * n as f64).round() as usize;
                let mut v: Vec<bool> = (0..n).map(|i| i < correct).collect();
                v.shuffle(rng);
                v
            }
            Some(curve) => {
                let bound = |d: usize| ((d * n) as f64 / 10.0).round() as usize;
                let mut v = Vec::with_capacity(n);
                for (d, frac) in curve.iter().enumerate() {
                    let size = bound(d + 1) - bound(d);
                    let correct = (frac * size as f64).round() as usize;
                    let mut part: Vec<bool> = (0..size).map(|i| i < correct).collect();
                    part.shuffle(rng);
                    v.extend(part);
                }
                v
            }
        }
    }
}

fn parses_back(p: &Program) -> bool {
    parse(&render(p)).is_ok_and(|q| &q == p)
}

fn random_rewrite(p: &Program, rng: &mut impl Rng) -> Option<Program> {
    let options: Vec<(Rewrite, usize)> = Rewrite::ALL
        .iter()
        .map(|&k| (k, count_sites(p, Mutation::Rewrite { kind: k, site: 0 })))
        .filter(|&(_, n)| n > 0)
        .collect();
    let &(kind, n) = options.choose(rng)?;
    let m = Mutation::Rewrite {
        kind,
        site: rng.gen_range(0..n),
    };
    apply(p, m).filter(parses_back)
}

/// Recipes are drawn until their anonymised token streams differ, within a
/// retry budget; a problem with few rewrite sites may repeat a recipe.
fn cluster_programs(reference: &Program, profile: &GenerationProfile, rng: &mut impl Rng) -> Vec<Program> {
    let mut out: Vec<Program> = Vec::new();
    let mut seen = HashSet::new();
    for _ in 0..profile.clusters {
        let mut chosen = None;
        for _ in 0..RETRIES {
            let steps = rng.gen_range(0..=profile.max_rewrites);
            let mut p = reference.clone();
            for _ in 0..steps {
                if let Some(q) = random_rewrite(&p, rng) {
                    p = q;
                }
            }
            let fresh = !seen.contains(&token_texts(&p));
            chosen = Some(p);
            if fresh {
                break;
            }
        }
        let p = chosen.expect("retries >= 1");
        seen.insert(token_texts(&p));
        out.push(p);
    }
    out
}

fn inject_bug(p: &Program, weights: &BTreeMap<Bug, f64>, rng: &mut impl Rng) -> Option<Program> {
    let options: Vec<(Bug, usize, f64)> = weights
        .iter()
        .filter(|(_, &w)| w > 0.0)
        .map(|(&b, &w)| (b, count_sites(p, Mutation::Bug { kind: b, site: 0, delta: 1 }), w))
        .filter(|&(_, n, _)| n > 0)
        .collect();
    for _ in 0..RETRIES {
        let &(kind, n, _) = options.choose_weighted(rng, |o| o.2).ok()?;
        let m = Mutation::Bug {
            kind,
            site: rng.gen_range(0..n),
            delta: if rng.gen_bool(0.5) { 1 } else { -1 },
        };
        match apply(p, m).filter(parses_back) {
            Some(q) if &q != p => return Some(q),
            _ => {}
        }
    }
    None
}

/// Produces a time-ordered stream of `profile.count` submissions.
///
/// Intended-correct submissions are a cluster's program under a fresh random
/// renaming; intended-incorrect ones additionally carry one injected bug.
/// The recorded verdict is the intent, which the oracle may contradict.
pub fn generate_corpus(
    spec: &ProblemSpec,
    profile: &GenerationProfile,
    rng_seed: u64,
) -> Result<Vec<Submission>, CorpusError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let labels = profile.labels(&mut rng);
    let clusters = cluster_programs(&spec.reference, profile, &mut rng);
    let needs_bug = labels.iter().any(|&c| !c);
    if needs_bug {
        let bugged = clusters.iter().filter(|p| {
            profile.bug_weights.iter().any(|(&b, &w)| {
                w > 0.0 && count_sites(p, Mutation::Bug { kind: b, site: 0, delta: 1 }) > 0
            })
        });
        if bugged.count() == 0 {
            return Err(CorpusError::ProfileInfeasible(
                "no weighted bug kind applies to the problem".into(),
            ));
        }
    }
    let width = profile.count.to_string().len().max(4);
    let mut time = profile.start_time;
    let mut out = Vec::with_capacity(profile.count);
    for (i, &correct) in labels.iter().enumerate() {
        time += rng.gen_range(1..=90);
        let program = if correct {
            clusters[rng.gen_range(0..clusters.len())].clone()
        } else {
            let mut found = None;
            for _ in 0..RETRIES {
                let base = &clusters[rng.gen_range(0..clusters.len())];
                if let Some(q) = inject_bug(base, &profile.bug_weights, &mut rng) {
                    found = Some(q);
                    break;
                }
            }
            found.ok_or_else(|| {
                CorpusError::ProfileInfeasible("could not inject a bug into any cluster".into())
            })?
        };
        let renamed = rename_randomly(&program, &mut rng);
        out.push(Submission {
            id: format!("s{:0width$}", i + 1),
            timestamp: time,
            source: render(&renamed),
            external_verdict: Some(if correct { Label::Correct } else { Label::Incorrect }),
        });
    }
    sort_stream(&mut out);
    Ok(out)
}
