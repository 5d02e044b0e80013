//! Parse a MiniC program, print it back in canonical form and run it on a
//! few inputs, including one that exhausts fuel.

use atas::minilang::{parse, render, run_concrete, TestCase, DEFAULT_FUEL};

const SOURCE: &str = r#"
read(n);
int s = 0;
for (int i = 1; i <= n; i = i + 1) { s = s + i; }
switch (s % 3) {
    case 0: print("fizz");
    default: print(s);
}
"#;

fn main() {
    let program = parse(SOURCE).expect("valid MiniC");
    println!("{}", render(&program));
    for n in [1, 2, 5, 100] {
        let r = run_concrete(&program, &TestCase::new(vec![n]), DEFAULT_FUEL);
        println!("n = {n:<4} -> {:<8} ({} steps)", r.outcome.to_string(), r.steps_used);
    }

    let spin = parse("read(n); while (n > 0) { n = n + 0; } print(n);").unwrap();
    let r = run_concrete(&spin, &TestCase::new(vec![1]), 1000);
    println!("spinning loop with 1000 fuel -> {}", r.outcome);

    let crash = parse("read(n); print(10 / (n - 3));").unwrap();
    println!("10 / (n - 3) at n = 3 -> {}", run_concrete(&crash, &TestCase::new(vec![3]), DEFAULT_FUEL).outcome);
}
