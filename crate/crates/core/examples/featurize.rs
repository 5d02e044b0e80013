//! Token n-gram features: the three-letter vocabulary example, then real
//! programs, where identifiers are anonymised so renaming changes nothing.

use atas::features::{build_vocab, encode, token_texts, FeatureVocab};
use atas::minilang::parse;

fn chars(s: &str) -> Vec<String> {
    s.chars().map(String::from).collect()
}

fn main() {
    let vocab = FeatureVocab::from_sequences(&[chars("abcde")], 3).unwrap();
    println!("vocabulary {:?}", vocab.grams());
    println!("abcd -> {:?}", vocab.encode_sequence(&chars("abcd")).active());

    let seed = [
        parse("read(n); int ans = n * n; print(ans);").unwrap(),
        parse("read(n); int ans = n * n * n; print(ans);").unwrap(),
    ];
    let vocab = build_vocab(&seed, 3).unwrap();
    println!("\n{} trigrams from the seed, e.g. {:?}", vocab.len(), &vocab.grams()[..3]);
    println!("tokens: {}", token_texts(&seed[0]).join(" "));

    let renamed = parse("read(side); int area = side * side; print(area);").unwrap();
    let unseen = parse("read(n); int ans = 0; if (n > 0) ans = n * n; print(ans);").unwrap();
    for (name, p) in [("seed[0]", &seed[0]), ("renamed", &renamed), ("unseen", &unseen)] {
        println!("{name:<8} active features {:?}", encode(p, &vocab).active());
    }
}
