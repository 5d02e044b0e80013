//! Enumerate the feasible paths of a program: each comes with its path
//! condition, symbolic output and the least concrete input that takes it.

use atas::minilang::parse;
use atas::symex::{explore_paths, ExploreBudget, InputDomain};

fn main() {
    let program = parse(
        "read(a); read(b); int q = a / b; int r = a % b; if (r > 0) q = q + 1; \
         if (q > 5) print(\"big\"); else print(q);",
    )
    .unwrap();
    let domain = InputDomain::new(vec![(1, 100), (1, 100)]).unwrap();
    let ex = explore_paths(&program, &domain, ExploreBudget::default());
    println!("{} paths, complete = {}", ex.outcomes.len(), ex.complete);
    for (i, p) in ex.outcomes.iter().enumerate() {
        let cond: Vec<String> = p.condition.iter().map(|c| c.to_string()).collect();
        println!("path {i}: witness ({}) prints {}", p.witness, p.output);
        println!("    when {}", if cond.is_empty() { "true".into() } else { cond.join(" && ") });
    }

    // A loop bounded by the input cannot be unrolled past the budget.
    let looped = parse("read(n); int s = 0; while (n > 0) { s = s + n; n = n - 1; } print(s);").unwrap();
    let budget = ExploreBudget { max_unroll: 5, ..ExploreBudget::default() };
    let ex = explore_paths(&looped, &InputDomain::new(vec![(1, 50)]).unwrap(), budget);
    println!(
        "\nloop with unroll bound 5: {} paths, stopped by {:?}, truncated witnesses {:?}",
        ex.outcomes.len(),
        ex.incomplete,
        ex.truncated.iter().map(|t| t.to_string()).collect::<Vec<_>>()
    );
}
