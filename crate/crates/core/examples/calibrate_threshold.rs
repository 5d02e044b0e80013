//! Train each classifier family on a generated corpus and show how the
//! acceptance threshold moves with the false-positive budget F.

use atas::corpus::{builtin, generate_corpus, oracle_label, GenerationProfile};
use atas::features::{build_vocab, encode};
use atas::learn::{train_and_get_thresh, Label, LabeledSample, ModelConfig};
use atas::minilang::Program;

fn main() {
    let spec = builtin("max3").unwrap();
    let profile = GenerationProfile { count: 300, ..GenerationProfile::default() };
    let subs = generate_corpus(&spec, &profile, 7).unwrap();
    let programs: Vec<Program> = subs.iter().map(|s| s.program().unwrap()).collect();
    let vocab = build_vocab(&programs[..50], 3).unwrap();

    let (mut correct, mut incorrect) = (Vec::new(), Vec::new());
    for p in &programs {
        let label = if oracle_label(&spec, p).unwrap().is_correct() { Label::Correct } else { Label::Incorrect };
        let s = LabeledSample::new(encode(p, &vocab), label);
        match label {
            Label::Correct => correct.push(s),
            Label::Incorrect => incorrect.push(s),
        }
    }
    println!("{} correct, {} incorrect, {} features", correct.len(), incorrect.len(), vocab.len());
    println!("{:<6}{:>6}{:>10}{:>10}  status", "model", "F", "thresh", "val-fpr");
    for config in [ModelConfig::knn(), ModelConfig::tree(), ModelConfig::gbt()] {
        for f in [0.05, 0.1, 0.3, 0.5] {
            let m = train_and_get_thresh(&config, f, &correct, &incorrect, 1).unwrap();
            let thresh = if m.thresh > 1.0 { "none".to_string() } else { format!("{:.4}", m.thresh) };
            println!(
                "{:<6}{f:>6}{thresh:>10}{:>10.3}  {:?}",
                config.family_name(),
                m.calibration_fpr,
                m.status
            );
        }
    }
}
