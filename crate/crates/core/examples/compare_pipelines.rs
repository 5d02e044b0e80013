//! Baseline and ATAS on one generated stream: checker calls, routes and
//! errors against the brute-force oracle.
//!
//! `cargo run --release --example compare_pipelines -- [problem] [count] [seed]`

use std::collections::BTreeMap;

use atas::corpus::{builtin, generate_corpus, GenerationProfile, Oracle, DEFAULT_EXHAUSTIVE_CAP};
use atas::learn::Label;
use atas::pipeline::{evaluate_against_oracle, run_atas, run_baseline, AtasConfig, Entry, JudgeState};
use atas::symex::ExploreBudget;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "max3".into());
    let count = args.next().map_or(500, |s| s.parse().expect("count"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));

    let spec = builtin(&name).expect("built-in problem");
    let profile = GenerationProfile { count, ..GenerationProfile::default() };
    let subs = generate_corpus(&spec, &profile, seed).unwrap();
    let queue: Vec<Entry> = subs.iter().map(|s| Entry::new(s.id.clone(), s.program().unwrap())).collect();
    let oracle = Oracle::new(&spec, DEFAULT_EXHAUSTIVE_CAP).unwrap();
    let truth: BTreeMap<String, Label> = queue
        .iter()
        .map(|e| {
            let l = if oracle.label(&e.program).unwrap().is_correct() { Label::Correct } else { Label::Incorrect };
            (e.id.clone(), l)
        })
        .collect();

    let domain = spec.domain();
    let config = AtasConfig { rng_seed: seed, ..AtasConfig::default() };
    let base = run_baseline(&queue, &spec.reference, &domain, ExploreBudget::default());
    let atas = run_atas(&queue, &spec.reference, &domain, &config).unwrap();

    let post = |s: &JudgeState| s.metrics.log[config.seed_count..].iter().filter(|r| r.route.called_checker()).count();
    println!("{name}: {count} submissions, seed {}, retrain every {}, F = {}", config.seed_count, config.retrain_interval, config.max_fpr);
    println!("{:<10}{:>8}{:>11}{:>10}{:>10}", "", "calls", "post-seed", "errors", "ms");
    for (label, s) in [("baseline", &base), ("atas", &atas)] {
        let e = evaluate_against_oracle(s, &truth).unwrap();
        println!(
            "{label:<10}{:>8}{:>11}{:>10}{:>10.0}",
            s.metrics.checker_calls_total,
            post(s),
            format!("{}/{}", e.errors, e.oracle_incorrect),
            s.metrics.wall_clock_ms
        );
    }
    println!("\nATAS routes:");
    for (route, n) in atas.metrics.route_counts() {
        println!("  {route:<18}{n}");
    }
}
