//! Cube versus square on n in [1, 1000]: the checker finds n = 2, the
//! failing test is stored, and the next cube-shaped submission is rejected
//! by replay alone.

use atas::equiv::check_equivalence;
use atas::minilang::parse;
use atas::pipeline::{run_baseline, Entry};
use atas::symex::{ExploreBudget, InputDomain};

fn main() {
    let reference = parse("read(n); int ans = n * n; print(ans);").unwrap();
    let cube = parse("read(n); int ans = n * n * n; print(ans);").unwrap();
    let domain = InputDomain::new(vec![(1, 1000)]).unwrap();

    let verdict = check_equivalence(&cube, &reference, &domain, ExploreBudget::default());
    let cx = verdict.counterexample().expect("cube differs from square");
    println!(
        "counterexample n = {}: candidate prints {}, reference prints {}",
        cx.test, cx.candidate_out.outcome, cx.reference_out.outcome
    );

    let queue = vec![
        Entry::new("alice", parse("read(x); print(x * x);").unwrap()),
        Entry::new("bob", cube),
        Entry::new("carol", parse("read(k); int c = k * k * k; print(c);").unwrap()),
    ];
    let state = run_baseline(&queue, &reference, &domain, ExploreBudget::default());
    println!("\nfailing tests (input<TAB>expected):");
    for t in &state.failing_tests {
        println!("  {t}");
    }
    print!("\nrun log:\n{}", state.metrics.run_log());
    println!("checker calls: {}", state.metrics.checker_calls_total);
}
