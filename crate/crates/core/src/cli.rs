//! Batch entry points: `generate`, `judge` and `compare`.
//!
//! Each command returns a value so that tests and examples can drive it
//! without a process boundary; the `atas` binary only parses flags, prints
//! and maps errors to exit codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    builtin, generate_corpus, load_corpus, write_corpus, Bug, Corpus, CorpusError,
    GenerationProfile, Oracle, ProblemSpec, Pruned, DEFAULT_EXHAUSTIVE_CAP, REFERENCE_FILE,
    SPEC_FILE,
};
use crate::learn::{to_artifact, GbtParams, Label, ModelConfig, TreeSearch, DEFAULT_K};
use crate::pipeline::{
    evaluate_against_oracle, run_atas, run_baseline, AtasConfig, Entry, ErrorReport, JudgeState,
    PhaseStats, PipelineError, Route,
};
use crate::symex::ExploreBudget;

pub const REPORT_SCHEMA: &str = "atas-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "atas", version, about = "Grade MiniC submissions against a reference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus for a problem.
    Generate(GenerateArgs),
    /// Run one pipeline over a corpus.
    Judge(JudgeArgs),
    /// Run the baseline, then ATAS, over the same corpus.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Problem directory with problem.spec and reference.mc, or a built-in
    /// problem name.
    pub problem: String,
    /// Output corpus directory.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0.6)]
    pub correct_fraction: f64,
    #[arg(long, default_value_t = 5)]
    pub clusters: usize,
    #[arg(long, default_value_t = 3)]
    pub max_rewrites: usize,
    /// Bug kind and weight as `kind=weight`; repeatable. Without it every
    /// kind has weight 1.
    #[arg(long = "bug", value_parser = parse_bug_weight)]
    pub bugs: Vec<(Bug, f64)>,
    /// Ten comma-separated correct fractions, one per tenth of the stream.
    #[arg(long, value_parser = parse_curve)]
    pub decile_curve: Option<[f64; 10]>,
    #[arg(long, default_value_t = 1_600_000_000)]
    pub start_time: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Atas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Knn,
    Tree,
    Gbt,
}

#[derive(Debug, Clone, Args)]
pub struct AtasFlags {
    /// Seed size i.
    #[arg(long, default_value_t = 50)]
    pub seed_count: usize,
    /// Retrain interval r; 0 keeps the seed model.
    #[arg(long, default_value_t = 50)]
    pub retrain: usize,
    /// FPR budget F.
    #[arg(long, default_value_t = 0.3)]
    pub max_fpr: f64,
    #[arg(long, value_enum, default_value_t = Family::Gbt)]
    pub classifier: Family,
    #[arg(long, default_value_t = crate::features::DEFAULT_NGRAM)]
    pub ngram: usize,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = GbtParams::default().max_depth)]
    pub gbt_depth: usize,
    #[arg(long, default_value_t = GbtParams::default().n_estimators)]
    pub gbt_estimators: usize,
    #[arg(long, default_value_t = TreeSearch::default().trials)]
    pub tree_trials: usize,
    #[arg(long, default_value_t = ExploreBudget::default().wall_clock_ms)]
    pub check_timeout_ms: u64,
    #[arg(long, default_value_t = ExploreBudget::default().max_unroll)]
    pub max_unroll: u32,
    #[arg(long, default_value_t = ExploreBudget::default().max_paths)]
    pub max_paths: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Hold out every tenth post-seed submission for per-phase precision
    /// and recall.
    #[arg(long)]
    pub holdout: bool,
    /// Fall back to the baseline when no classifier can be trained on the
    /// seed, instead of exiting with code 3.
    #[arg(long)]
    pub degrade: bool,
    /// Run seed checker calls concurrently.
    #[arg(long)]
    pub parallel_seed: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputFlags {
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for `<mode>.tsv` run logs and `<mode>.tests.tsv` failing
    /// tests.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
    /// Directory for the final `vocab.txt` and `model.json`.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// Skip ground-truth evaluation.
    #[arg(long)]
    pub no_oracle: bool,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct JudgeArgs {
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Atas)]
    pub mode: Mode,
    #[command(flatten)]
    pub atas: AtasFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub corpus: PathBuf,
    #[command(flatten)]
    pub atas: AtasFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

fn parse_bug_weight(s: &str) -> Result<(Bug, f64), String> {
    let (name, w) = s.split_once('=').ok_or("expected kind=weight")?;
    let bug = Bug::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Bug::ALL.iter().map(|b| b.name()).collect();
        format!("unknown bug {name:?}; known: {}", known.join(", "))
    })?;
    let w = w.parse().map_err(|_| format!("bad weight {w:?}"))?;
    Ok((bug, w))
}

fn parse_curve(s: &str) -> Result<[f64; 10], String> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad fraction {x:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected 10 fractions, got {}", v.len()))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Profile(CorpusError),
    #[error(transparent)]
    SeedTooSmall(PipelineError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Pipeline(PipelineError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Profile(_) => 2,
            CliError::SeedTooSmall(_) => 3,
            CliError::Corpus(_) => 4,
            CliError::Pipeline(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::SeedTooSmall(_) => CliError::SeedTooSmall(e),
            e => CliError::Pipeline(e),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// A problem directory, or a built-in name when no such directory exists.
pub fn resolve_problem(problem: &str) -> Result<ProblemSpec, CorpusError> {
    let dir = Path::new(problem);
    if dir.is_dir() {
        let read = |f: &str| {
            let p = dir.join(f);
            fs::read_to_string(&p).map_err(|e| CorpusError::Io {
                path: p,
                message: e.to_string(),
            })
        };
        return ProblemSpec::from_sources(&read(SPEC_FILE)?, &read(REFERENCE_FILE)?);
    }
    builtin(problem).ok_or_else(|| CorpusError::Io {
        path: dir.to_path_buf(),
        message: "neither a problem directory nor a built-in problem".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub problem: String,
    pub out: PathBuf,
    pub submissions: usize,
    pub intended_correct: usize,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<GenerateSummary, CliError> {
    let spec = resolve_problem(&args.problem)?;
    let mut profile = GenerationProfile {
        count: args.count,
        correct_fraction: args.correct_fraction,
        clusters: args.clusters,
        decile_curve: args.decile_curve,
        max_rewrites: args.max_rewrites,
        start_time: args.start_time,
        ..GenerationProfile::default()
    };
    if !args.bugs.is_empty() {
        profile.bug_weights = args.bugs.iter().copied().collect();
    }
    let subs = generate_corpus(&spec, &profile, args.seed).map_err(CliError::Profile)?;
    write_corpus(&args.out, &spec, &subs)?;
    Ok(GenerateSummary {
        problem: spec.name,
        out: args.out.clone(),
        submissions: subs.len(),
        intended_correct: subs
            .iter()
            .filter(|s| s.external_verdict == Some(Label::Correct))
            .count(),
    })
}

impl AtasFlags {
    pub fn budget(&self) -> ExploreBudget {
        ExploreBudget {
            max_paths: self.max_paths,
            max_unroll: self.max_unroll,
            wall_clock_ms: self.check_timeout_ms,
            ..ExploreBudget::default()
        }
    }

    pub fn config(&self) -> AtasConfig {
        let classifier = match self.classifier {
            Family::Knn => ModelConfig::Knn { k: self.k },
            Family::Tree => ModelConfig::Tree(TreeSearch {
                trials: self.tree_trials,
                ..TreeSearch::default()
            }),
            Family::Gbt => ModelConfig::Gbt(GbtParams {
                max_depth: self.gbt_depth,
                n_estimators: self.gbt_estimators,
                ..GbtParams::default()
            }),
        };
        AtasConfig {
            seed_count: self.seed_count,
            retrain_interval: self.retrain,
            max_fpr: self.max_fpr,
            ngram: self.ngram,
            classifier,
            check_budget: self.budget(),
            rng_seed: self.rng_seed,
            holdout: self.holdout,
            strict_seed: !self.degrade,
            parallel_seed: self.parallel_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub checker_calls_total: usize,
    /// Checker calls on submissions past the first `seed_count`, in either
    /// mode, so baseline and ATAS rows compare directly.
    pub checker_calls_post_seed: usize,
    pub tests_replayed: usize,
    pub unknown_verdicts: usize,
    pub wall_clock_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub mode: Mode,
    pub counters: Counters,
    pub routes: BTreeMap<Route, usize>,
    pub accepted: usize,
    pub rejected: usize,
    pub failing_tests: usize,
    pub error: Option<ErrorReport>,
    pub phases: Vec<PhaseStats>,
    pub final_thresh: Option<f64>,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub corpus: PathBuf,
    pub atas: AtasConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    pub problem: String,
    pub submissions: usize,
    pub pruned: Vec<Pruned>,
    /// Why ground-truth evaluation was skipped, when it was.
    pub oracle_note: Option<String>,
    /// Set when the corpus holds no submission past the seed.
    pub insufficient_post_seed: bool,
    pub runs: Vec<PipelineRun>,
    /// Baseline wall clock over ATAS wall clock; `compare` only.
    pub speedup: Option<f64>,
}

impl RunReport {
    /// Zeroes every field that depends on wall-clock time.
    pub fn without_timings(&self) -> RunReport {
        let mut r = self.clone();
        r.speedup = r.speedup.map(|_| 0.0);
        for run in &mut r.runs {
            run.counters.wall_clock_ms = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible") + "\n"
    }

    pub fn run(&self, mode: Mode) -> Option<&PipelineRun> {
        self.runs.iter().find(|r| r.mode == mode)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "problem {}: {} submissions, {} pruned, seed {}",
            self.problem,
            self.submissions,
            self.pruned.len(),
            self.config.atas.seed_count
        );
        if let Some(note) = &self.oracle_note {
            let _ = writeln!(out, "oracle skipped: {note}");
        }
        if self.insufficient_post_seed {
            let _ = writeln!(out, "warning: no submissions past the seed");
        }
        let _ = write!(out, "\n{:<10}{:>8}{:>11}", "mode", "calls", "post-seed");
        for r in Route::ALL {
            let _ = write!(out, "{:>19}", r.name());
        }
        let _ = writeln!(out, "{:>12}{:>12}", "error", "wall-ms");
        for run in &self.runs {
            let mode = match run.mode {
                Mode::Baseline => "baseline",
                Mode::Atas => "atas",
            };
            let c = &run.counters;
            let _ = write!(out, "{mode:<10}{:>8}{:>11}", c.checker_calls_total, c.checker_calls_post_seed);
            for r in Route::ALL {
                let _ = write!(out, "{:>19}", run.routes[&r]);
            }
            let err = run
                .error
                .as_ref()
                .map_or("-".to_string(), |e| format!("{}/{}", e.errors, e.oracle_incorrect));
            let _ = writeln!(out, "{err:>12}{:>12.1}", c.wall_clock_ms);
        }
        if let Some(s) = self.speedup {
            let _ = writeln!(out, "\nspeedup {s:.2}x");
        }
        for run in self.runs.iter().filter(|r| r.phases.iter().any(|p| p.holdout_total > 0)) {
            let _ = writeln!(
                out,
                "\n{:<7}{:>10}{:>10}{:>10}{:>11}{:>8}",
                "phase", "thresh", "val-fpr", "held-out", "precision", "recall"
            );
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            for p in &run.phases {
                let _ = writeln!(
                    out,
                    "{:<7}{:>10}{:>10}{:>10}{:>11}{:>8}",
                    p.phase,
                    opt(p.thresh),
                    opt(p.calibration_fpr),
                    p.holdout_total,
                    opt(p.precision()),
                    opt(p.recall())
                );
            }
        }
        out
    }
}

/// Ground truth for every kept submission, or the reason it is unavailable.
fn oracle_labels(corpus: &Corpus) -> Result<BTreeMap<String, Label>, String> {
    let oracle = Oracle::new(&corpus.spec, DEFAULT_EXHAUSTIVE_CAP).map_err(|e| e.to_string())?;
    corpus
        .submissions
        .iter()
        .zip(&corpus.programs)
        .map(|(s, p)| {
            let v = oracle.label(p).map_err(|e| e.to_string())?;
            let l = if v.is_correct() {
                Label::Correct
            } else {
                Label::Incorrect
            };
            Ok((s.id.clone(), l))
        })
        .collect()
}

fn summarize(
    mode: Mode,
    state: &JudgeState,
    seed_count: usize,
    truth: Option<&BTreeMap<String, Label>>,
) -> Result<PipelineRun, CliError> {
    let m = &state.metrics;
    let post = m
        .log
        .iter()
        .skip(seed_count)
        .filter(|r| r.route.called_checker())
        .count();
    Ok(PipelineRun {
        mode,
        counters: Counters {
            checker_calls_total: m.checker_calls_total,
            checker_calls_post_seed: post,
            tests_replayed: m.tests_replayed,
            unknown_verdicts: m.unknown_verdicts,
            wall_clock_ms: m.wall_clock_ms,
        },
        routes: m.route_counts(),
        accepted: state.accepted.len(),
        rejected: state.rejected.len(),
        failing_tests: state.failing_tests.len(),
        error: truth.map(|t| evaluate_against_oracle(state, t)).transpose()?,
        phases: state.phases.clone(),
        final_thresh: state.model.as_ref().map(|m| m.thresh),
        degraded: state.degraded,
    })
}

fn write_outputs(mode: Mode, state: &JudgeState, out: &OutputFlags) -> Result<(), CliError> {
    let name = match mode {
        Mode::Baseline => "baseline",
        Mode::Atas => "atas",
    };
    if let Some(dir) = &out.log_dir {
        write_file(&dir.join(format!("{name}.tsv")), &state.metrics.run_log())?;
        let tests: String = state.failing_tests.iter().map(|t| format!("{t}\n")).collect();
        write_file(&dir.join(format!("{name}.tests.tsv")), &tests)?;
    }
    if let (Some(dir), Some(vocab), Some(model)) = (&out.model_dir, &state.vocab, &state.model) {
        write_file(&dir.join("vocab.txt"), &vocab.to_text())?;
        write_file(&dir.join("model.json"), &to_artifact(model))?;
    }
    Ok(())
}

fn judge(
    command: &str,
    corpus_path: &Path,
    modes: &[Mode],
    flags: &AtasFlags,
    out: &OutputFlags,
) -> Result<RunReport, CliError> {
    let corpus = load_corpus(corpus_path)?;
    let config = flags.config();
    config.validate()?;
    let queue = Entry::from_corpus(&corpus);
    let (truth, oracle_note) = if out.no_oracle {
        (None, Some("disabled".to_string()))
    } else {
        match oracle_labels(&corpus) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e)),
        }
    };
    let reference = &corpus.spec.reference;
    let domain = corpus.spec.domain();
    let mut runs = Vec::new();
    for &mode in modes {
        let state = match mode {
            Mode::Baseline => run_baseline(&queue, reference, &domain, config.check_budget),
            Mode::Atas => run_atas(&queue, reference, &domain, &config)?,
        };
        write_outputs(mode, &state, out)?;
        runs.push(summarize(mode, &state, config.seed_count, truth.as_ref())?);
    }
    let speedup = match (runs.iter().find(|r| r.mode == Mode::Baseline), runs.iter().find(|r| r.mode == Mode::Atas)) {
        (Some(b), Some(a)) if a.counters.wall_clock_ms > 0.0 => {
            Some(b.counters.wall_clock_ms / a.counters.wall_clock_ms)
        }
        _ => None,
    };
    let report = RunReport {
        schema: REPORT_SCHEMA.to_string(),
        schema_version: REPORT_VERSION,
        command: command.to_string(),
        config: ConfigEcho {
            corpus: corpus_path.to_path_buf(),
            atas: config.clone(),
        },
        problem: corpus.spec.name.clone(),
        submissions: queue.len(),
        pruned: corpus.pruned.clone(),
        oracle_note,
        insufficient_post_seed: queue.len() <= config.seed_count,
        runs,
        speedup,
    };
    if let Some(path) = &out.out {
        write_file(path, &report.to_json())?;
    }
    Ok(report)
}

pub fn cmd_judge(args: &JudgeArgs) -> Result<RunReport, CliError> {
    judge("judge", &args.corpus, &[args.mode], &args.atas, &args.output)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<RunReport, CliError> {
    judge(
        "compare",
        &args.corpus,
        &[Mode::Baseline, Mode::Atas],
        &args.atas,
        &args.output,
    )
}

/// Runs a parsed command line, prints its result and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|s| {
            println!(
                "wrote {} submissions ({} intended correct) for {} to {}",
                s.submissions,
                s.intended_correct,
                s.problem,
                s.out.display()
            );
        }),
        Command::Judge(JudgeArgs { output, .. }) | Command::Compare(CompareArgs { output, .. }) => {
            let report = match &cli.command {
                Command::Judge(a) => cmd_judge(a),
                Command::Compare(a) => cmd_compare(a),
                Command::Generate(_) => unreachable!(),
            };
            report.map(|r| {
                if output.json {
                    print!("{}", r.to_json());
                } else {
                    print!("{}", r.to_table());
                }
            })
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("atas").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let Command::Judge(j) = parse(&["judge", "c"]).command else {
            panic!("judge expected");
        };
        assert_eq!(j.mode, Mode::Atas);
        let cfg = j.atas.config();
        assert_eq!((cfg.seed_count, cfg.retrain_interval, cfg.max_fpr, cfg.ngram), (50, 50, 0.3, 3));
        assert_eq!(cfg.classifier, ModelConfig::gbt());
        assert_eq!(cfg.check_budget, ExploreBudget::default());
        assert!(cfg.strict_seed);
        assert_eq!(j.atas.k, 6);
    }

    #[test]
    fn generate_flags() {
        let Command::Generate(g) = parse(&[
            "generate",
            "square",
            "--out",
            "x",
            "--bug",
            "wrong-power=2",
            "--decile-curve",
            "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
        ])
        .command
        else {
            panic!("generate expected");
        };
        assert_eq!(g.bugs, [(Bug::WrongPower, 2.0)]);
        assert_eq!(g.decile_curve.unwrap()[9], 0.9);
        assert!(parse_curve("1,2").is_err());
        assert!(parse_bug_weight("nope=1").is_err());
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let missing = JudgeArgs {
            corpus: dir.path().join("none"),
            ..match parse(&["judge", "c"]).command {
                Command::Judge(j) => j,
                _ => unreachable!(),
            }
        };
        assert_eq!(cmd_judge(&missing).unwrap_err().exit_code(), 4);
        let Command::Generate(g) = parse(&[
            "generate",
            "square",
            "--out",
            dir.path().to_str().unwrap(),
            "--bug",
            "drop-else=1",
        ])
        .command
        else {
            unreachable!()
        };
        assert_eq!(cmd_generate(&g).unwrap_err().exit_code(), 2);
    }
}
