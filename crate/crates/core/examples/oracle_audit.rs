//! Cross-check the symbolic checker against exhaustive execution on every
//! built-in problem.

use atas::corpus::{builtin_problems, generate_corpus, GenerationProfile, Oracle, OracleVerdict, DEFAULT_EXHAUSTIVE_CAP};
use atas::equiv::{check_equivalence, validate_counterexample, EquivVerdict};
use atas::symex::ExploreBudget;

fn main() {
    println!("{:<12}{:>6}{:>8}{:>8}{:>9}{:>10}", "problem", "subs", "equiv", "cex", "unknown", "disagree");
    for spec in builtin_problems() {
        let subs = generate_corpus(&spec, &GenerationProfile { count: 60, ..GenerationProfile::default() }, 5).unwrap();
        let oracle = Oracle::new(&spec, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        let domain = spec.domain();
        let (mut eq, mut cex, mut unknown, mut disagree) = (0, 0, 0, 0);
        for s in &subs {
            let p = s.program().unwrap();
            let truth = oracle.label(&p).unwrap();
            match check_equivalence(&p, &spec.reference, &domain, ExploreBudget::default()) {
                EquivVerdict::Equivalent => {
                    eq += 1;
                    disagree += usize::from(truth != OracleVerdict::Correct);
                }
                EquivVerdict::Counterexample(c) => {
                    cex += 1;
                    let ok = validate_counterexample(&p, &spec.reference, &c.test);
                    disagree += usize::from(truth.is_correct() || !ok);
                }
                EquivVerdict::Unknown(_) => unknown += 1,
            }
        }
        println!("{:<12}{:>6}{:>8}{:>8}{:>9}{:>10}", spec.name, subs.len(), eq, cex, unknown, disagree);
    }
}
