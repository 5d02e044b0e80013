use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use atas::cli::{Mode, RunReport};
use atas::corpus::{builtin, write_corpus, Submission};

fn atas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = atas(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn report(args: &[&str]) -> RunReport {
    serde_json::from_str(&ok(&[args, &["--json"]].concat())).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(tree(&p));
        } else {
            out.push((p.strip_prefix(dir.parent().unwrap()).unwrap().display().to_string(), fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("x/c"), dir.path().join("y/c"));
    for d in [&a, &b] {
        ok(&["generate", "watermelon", "--out", path(d), "--count", "25", "--seed", "3"]);
    }
    let ta = tree(&a);
    assert_eq!(ta.len(), 25 + 3);
    assert_eq!(ta, tree(&b));
}

#[test]
fn problem_directory_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p");
    fs::create_dir(&problem).unwrap();
    fs::write(problem.join("problem.spec"), "name twice\noutput int\ninputs\nn 1 50\n").unwrap();
    fs::write(problem.join("reference.mc"), "read(n); print(n + n);").unwrap();
    let corpus = dir.path().join("c");
    ok(&["generate", path(&problem), "--out", path(&corpus), "--count", "10"]);

    let code = |args: &[&str]| atas(args).status.code();
    let infeasible = ["generate", "square", "--out", path(&corpus), "--bug", "swap-branches=1"];
    assert_eq!(code(&infeasible), Some(2));
    assert_eq!(code(&["judge", path(&dir.path().join("missing"))]), Some(4));
    assert_eq!(code(&["judge", path(&dir.path().join("p"))]), Some(4));

    let all_correct = dir.path().join("ok");
    ok(&["generate", "square", "--out", path(&all_correct), "--count", "20", "--correct-fraction", "1"]);
    let seed = ["judge", path(&all_correct), "--seed-count", "10"];
    assert_eq!(code(&seed), Some(3));
    let r = report(&[&seed[..], &["--degrade"]].concat());
    assert!(r.runs[0].degraded);
    assert_eq!(r.runs[0].counters.checker_calls_total, 20);
}

#[test]
fn baseline_on_three_programs() {
    let dir = tempfile::tempdir().unwrap();
    let subs: Vec<Submission> = [
        ("square", "read(n); print(n*n);"),
        ("cube", "read(n); print(n*n*n);"),
        ("cube2", "read(x); int y = x * x * x; print(y);"),
    ]
    .iter()
    .enumerate()
    .map(|(i, (id, src))| Submission {
        id: id.to_string(),
        timestamp: i as i64,
        source: src.to_string(),
        external_verdict: None,
    })
    .collect();
    write_corpus(dir.path(), &builtin("square").unwrap(), &subs).unwrap();
    let logs = dir.path().join("logs");
    let r = report(&["judge", path(dir.path()), "--mode", "baseline", "--log-dir", path(&logs)]);
    let run = r.run(Mode::Baseline).unwrap();
    assert_eq!(run.counters.checker_calls_total, 2);
    assert_eq!((run.accepted, run.rejected), (1, 2));
    assert_eq!(run.error.as_ref().unwrap().errors, 0);
    assert!(r.insufficient_post_seed);
    let log = fs::read_to_string(logs.join("baseline.tsv")).unwrap();
    let called: usize = log.lines().map(|l| l.rsplit('\t').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(called, run.counters.checker_calls_total);
    assert!(log.lines().nth(2).unwrap().starts_with("cube2\treplay-fail\tincorrect\t"));
    let tests = fs::read_to_string(logs.join("baseline.tests.tsv")).unwrap();
    assert_eq!(tests, "2\t4\n");
    let parsed: atas::equiv::FailingTest = tests.trim_end().parse().unwrap();
    assert_eq!(parsed.expected, atas::minilang::Outcome::IntOutput(4));
}

#[test]
fn compare_report_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c");
    ok(&["generate", "max3", "--out", path(&corpus), "--count", "200", "--seed", "4"]);
    let out = dir.path().join("r/report.json");
    let logs = dir.path().join("logs");
    let models = dir.path().join("model");
    let table = ok(&[
        "compare",
        path(&corpus),
        "--holdout",
        "--out",
        path(&out),
        "--log-dir",
        path(&logs),
        "--model-dir",
        path(&models),
    ]);
    assert!(table.contains("speedup"));
    let r: RunReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.schema_version, 1);
    assert!(r.speedup.is_some());
    for run in &r.runs {
        let name = if run.mode == Mode::Baseline { "baseline" } else { "atas" };
        let log = fs::read_to_string(logs.join(format!("{name}.tsv"))).unwrap();
        let lines: Vec<Vec<&str>> = log.lines().map(|l| l.split('\t').collect()).collect();
        assert_eq!(lines.len(), r.submissions);
        let calls = lines.iter().filter(|f| f[4] == "1").count();
        let post = lines[r.config.atas.seed_count..].iter().filter(|f| f[4] == "1").count();
        assert_eq!(calls, run.counters.checker_calls_total);
        assert_eq!(post, run.counters.checker_calls_post_seed);
        for (route, n) in &run.routes {
            assert_eq!(lines.iter().filter(|f| f[1] == route.name()).count(), *n);
        }
    }
    let atas = r.run(Mode::Atas).unwrap();
    assert!(atas.phases.iter().map(|p| p.holdout_total).sum::<usize>() > 0);
    let vocab = atas::features::FeatureVocab::from_text(&fs::read_to_string(models.join("vocab.txt")).unwrap()).unwrap();
    let model: atas::learn::CalibratedModel =
        atas::learn::from_artifact(&fs::read_to_string(models.join("model.json")).unwrap()).unwrap();
    assert_eq!(model.model.dims(), vocab.len());
    assert_eq!(Some(model.thresh), atas.final_thresh);

    // A budget near 1 accepts at least as much as the default.
    let loose = report(&["judge", path(&corpus), "--max-fpr", "0.999999"]);
    let post = |r: &RunReport| r.run(Mode::Atas).unwrap().counters.checker_calls_post_seed;
    assert!(post(&loose) <= atas.counters.checker_calls_post_seed);
}

#[test]
fn short_stream_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "ceildiv", "--out", path(dir.path()), "--count", "30"]);
    let r = report(&["compare", path(dir.path()), "--seed-count", "30"]);
    assert!(r.insufficient_post_seed);
    assert!(r.to_table().contains("no submissions past the seed"));
    assert!(r.runs.iter().all(|run| run.counters.checker_calls_post_seed == 0));
}
