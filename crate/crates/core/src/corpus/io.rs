use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{sort_stream, Corpus, CorpusError, InputBound, OutputKind, ProblemSpec, Pruned, Submission};
use crate::learn::Label;

pub const SPEC_FILE: &str = "problem.spec";
pub const REFERENCE_FILE: &str = "reference.mc";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SUBMISSION_DIR: &str = "submissions";

/// The contents of `problem.spec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemHeader {
    pub name: String,
    pub inputs: Vec<InputBound>,
    pub output: OutputKind,
}

/// Parses `problem.spec`: `name <id>`, `output int|str`, then `inputs`
/// followed by one `<name> <lo> <hi>` line per input. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_problem_spec(text: &str) -> Result<ProblemHeader, CorpusError> {
    let err = |line: usize, message: &str| CorpusError::SpecParse {
        line,
        message: message.to_string(),
    };
    let mut name = None;
    let mut output = None;
    let mut inputs: Option<Vec<InputBound>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() || fields[0].starts_with('#') {
            continue;
        }
        match fields.as_slice() {
            ["name", n] if name.is_none() => name = Some(n.to_string()),
            ["output", kind] if output.is_none() => {
                output = Some(match *kind {
                    "int" => OutputKind::Int,
                    "str" => OutputKind::Str,
                    _ => return Err(err(line, "output must be int or str")),
                })
            }
            ["inputs"] if inputs.is_none() => inputs = Some(Vec::new()),
            [n, lo, hi] if inputs.is_some() => {
                let parse = |s: &str| {
                    s.parse::<i64>()
                        .map_err(|_| err(line, &format!("bad bound {s:?}")))
                };
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                inputs.as_mut().unwrap().push(InputBound {
                    name: n.to_string(),
                    lo,
                    hi,
                });
            }
            _ => return Err(err(line, &format!("unexpected line {raw:?}"))),
        }
    }
    Ok(ProblemHeader {
        name: name.ok_or_else(|| err(0, "missing name"))?,
        output: output.ok_or_else(|| err(0, "missing output"))?,
        inputs: inputs.ok_or_else(|| err(0, "missing inputs"))?,
    })
}

pub fn format_problem_spec(h: &ProblemHeader) -> String {
    let mut out = format!("name {}\n", h.name);
    let kind = match h.output {
        OutputKind::Int => "int",
        OutputKind::Str => "str",
    };
    let _ = writeln!(out, "output {kind}");
    out.push_str("inputs\n");
    for b in &h.inputs {
        let _ = writeln!(out, "{} {} {}", b.name, b.lo, b.hi);
    }
    out
}

/// One manifest line: `id<TAB>timestamp<TAB>filename[<TAB>verdict]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub timestamp: i64,
    pub filename: String,
    pub verdict: Option<Label>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let err = |message: String| CorpusError::ManifestParse {
            line: i + 1,
            message,
        };
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        if !(3..=4).contains(&f.len()) {
            return Err(err(format!("expected 3 or 4 tab-separated fields, got {}", f.len())));
        }
        let timestamp = f[1]
            .parse()
            .map_err(|_| err(format!("bad timestamp {:?}", f[1])))?;
        let verdict = match f.get(3).copied() {
            None | Some("") => None,
            Some("correct") => Some(Label::Correct),
            Some("incorrect") => Some(Label::Incorrect),
            Some(v) => return Err(err(format!("bad verdict {v:?}"))),
        };
        if f[0].is_empty() {
            return Err(err("empty id".into()));
        }
        if !seen.insert(f[0].to_string()) {
            return Err(CorpusError::DuplicateId(f[0].to_string()));
        }
        out.push(ManifestEntry {
            id: f[0].to_string(),
            timestamp,
            filename: f[2].to_string(),
            verdict,
        });
    }
    Ok(out)
}

pub fn format_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = write!(out, "{}\t{}\t{}", e.id, e.timestamp, e.filename);
        if let Some(v) = e.verdict {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))
}

/// Loads a corpus directory. Submissions that fail to parse or read the
/// wrong number of inputs are dropped and listed in `pruned`.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    if !dir.is_dir() {
        return Err(CorpusError::Io {
            path: dir.to_path_buf(),
            message: "not a directory".into(),
        });
    }
    let spec = ProblemSpec::from_sources(
        &read(&dir.join(SPEC_FILE))?,
        &read(&dir.join(REFERENCE_FILE))?,
    )?;
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(CorpusError::MissingManifest(dir.to_path_buf()));
    }
    let entries = parse_manifest(&read(&manifest_path)?)?;
    let mut kept = Vec::new();
    let mut pruned = Vec::new();
    for e in entries {
        let source = read(&dir.join(&e.filename))?;
        let sub = Submission {
            id: e.id,
            timestamp: e.timestamp,
            source,
            external_verdict: e.verdict,
        };
        match sub.program() {
            Ok(p) if p.arity() == spec.inputs.len() => kept.push((sub, p)),
            Ok(p) => pruned.push(Pruned {
                id: sub.id,
                reason: format!("reads {} inputs, problem has {}", p.arity(), spec.inputs.len()),
            }),
            Err(e) => pruned.push(Pruned {
                id: sub.id,
                reason: e.to_string(),
            }),
        }
    }
    for p in &pruned {
        log::info!("pruned {}: {}", p.id, p.reason);
    }
    kept.sort_by(|(a, _), (b, _)| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    let (submissions, programs) = kept.into_iter().unzip();
    Ok(Corpus {
        spec,
        submissions,
        programs,
        pruned,
    })
}

/// Writes `problem.spec`, `reference.mc`, `manifest.txt` and one
/// `submissions/<id>.mc` per submission, in stream order.
pub fn write_corpus(dir: &Path, spec: &ProblemSpec, submissions: &[Submission]) -> Result<(), CorpusError> {
    let sub_dir = dir.join(SUBMISSION_DIR);
    fs::create_dir_all(&sub_dir).map_err(|e| CorpusError::io(&sub_dir, e))?;
    let write = |path: &Path, text: &str| fs::write(path, text).map_err(|e| CorpusError::io(path, e));
    write(&dir.join(SPEC_FILE), &format_problem_spec(&spec.header()))?;
    write(&dir.join(REFERENCE_FILE), &crate::minilang::render(&spec.reference))?;
    let mut ordered = submissions.to_vec();
    sort_stream(&mut ordered);
    let mut entries = Vec::with_capacity(ordered.len());
    for s in &ordered {
        let filename = format!("{SUBMISSION_DIR}/{}.mc", s.id);
        write(&dir.join(&filename), &s.source)?;
        entries.push(ManifestEntry {
            id: s.id.clone(),
            timestamp: s.timestamp,
            filename,
            verdict: s.external_verdict,
        });
    }
    write(&dir.join(MANIFEST_FILE), &format_manifest(&entries))
}
