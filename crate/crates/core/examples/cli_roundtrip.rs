//! Drive the command-line layer in-process: generate a corpus, compare the
//! pipelines and print the report table.

use atas::cli::{cmd_compare, cmd_generate, Cli, Command};
use clap::Parser;

fn main() {
    let dir = std::env::temp_dir().join("atas-example-cli");
    let out = dir.to_str().unwrap();
    let Command::Generate(g) = Cli::parse_from(["atas", "generate", "sumloop", "--out", out, "--count", "150", "--seed", "2"]).command else {
        unreachable!()
    };
    println!("{:?}", cmd_generate(&g).unwrap());
    let Command::Compare(c) = Cli::parse_from(["atas", "compare", out, "--seed-count", "30", "--retrain", "30", "--holdout"]).command else {
        unreachable!()
    };
    let report = cmd_compare(&c).unwrap();
    print!("{}", report.to_table());
}
