//! Generate a stream for a built-in problem, write it as a corpus
//! directory, load it back and compare intended labels with ground truth.

use atas::corpus::{builtin, generate_corpus, load_corpus, write_corpus, GenerationProfile, Oracle, DEFAULT_EXHAUSTIVE_CAP};
use atas::learn::Label;

fn main() {
    let spec = builtin("ceildiv").unwrap();
    let mut curve = [0.6; 10];
    curve[0] = 0.2;
    curve[1] = 0.3;
    let profile = GenerationProfile { count: 40, clusters: 3, decile_curve: Some(curve), ..GenerationProfile::default() };
    let subs = generate_corpus(&spec, &profile, 11).unwrap();

    let dir = std::env::temp_dir().join("atas-example-corpus");
    write_corpus(&dir, &spec, &subs).unwrap();
    let corpus = load_corpus(&dir).unwrap();
    println!("wrote and reloaded {} submissions under {}", corpus.submissions.len(), dir.display());

    let oracle = Oracle::new(&spec, DEFAULT_EXHAUSTIVE_CAP).unwrap();
    let mut disagreements = 0;
    for (s, p) in corpus.submissions.iter().zip(&corpus.programs) {
        let truth = oracle.label(p).unwrap();
        if truth.is_correct() != (s.external_verdict == Some(Label::Correct)) {
            disagreements += 1;
        }
    }
    println!("intended label differs from the oracle on {disagreements} submissions");
    let bad = corpus.programs.iter().zip(&corpus.submissions).find_map(|(p, s)| match oracle.label(p).unwrap() {
        atas::corpus::OracleVerdict::Incorrect(t) => Some((s, t)),
        _ => None,
    });
    if let Some((s, t)) = bad {
        println!("first incorrect one ({}) fails at ({t}):\n{}", s.id, s.source);
    }
}
