use std::path::{Path, PathBuf};
use std::thread;

use serde::Serialize;

use crate::report::{relative_to, to_value, Failure, Report};
use crate::{cmd_verify_equiv, cmd_verify_msan};

#[derive(Debug, Clone)]
struct Case {
    line: usize,
    task: String,
    expected: String,
    paths: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Row {
    line: usize,
    task: String,
    paths: Vec<String>,
    expected: String,
    actual: String,
    ok: bool,
}

/// One case per line: `<msan|equiv> <expected verdict> <path>...`, paths
/// relative to the manifest. `#` starts a comment.
fn parse_manifest(text: &str, base: &Path) -> Result<Vec<Case>, Failure> {
    let mut cases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let bad = |message: String| Failure {
            kind: "ManifestError",
            line: Some(i + 1),
            message,
        };
        let [task, expected, paths @ ..] = words.as_slice() else {
            return Err(bad("expected `<task> <verdict> <path>...`".into()));
        };
        let arity_ok = match *task {
            "msan" => paths.len() == 1,
            "equiv" => paths.len() == 1 || paths.len() == 3,
            _ => return Err(bad(format!("unknown task `{task}`"))),
        };
        if !arity_ok {
            return Err(bad(format!("wrong number of paths for `{task}`")));
        }
        cases.push(Case {
            line: i + 1,
            task: task.to_string(),
            expected: expected.to_string(),
            paths: paths.iter().map(|p| relative_to(base, p)).collect(),
        });
    }
    Ok(cases)
}

fn check(case: &Case) -> Report {
    match case.task.as_str() {
        "msan" => cmd_verify_msan(&case.paths[0]),
        _ => cmd_verify_equiv(&case.paths),
    }
}

pub fn run(manifest: &Path) -> Report {
    let mut r = Report::new("corpus");
    let text = match r.read(manifest) {
        Ok(t) => t,
        Err(f) => return r.fail(f),
    };
    let base = manifest.parent().unwrap_or(Path::new("."));
    let cases = match parse_manifest(&text, base) {
        Ok(c) => c,
        Err(f) => return r.fail(f),
    };
    let reports: Vec<Report> = thread::scope(|s| {
        let handles: Vec<_> = cases.iter().map(|c| s.spawn(move || check(c))).collect();
        handles.into_iter().map(|h| h.join().expect("corpus worker panicked")).collect()
    });
    let rows: Vec<Row> = cases
        .iter()
        .zip(&reports)
        .map(|(c, rep)| {
            let actual = match (&rep.verdict, &rep.error) {
                (Some(v), _) => v.clone(),
                (None, Some(e)) => e.kind.to_string(),
                (None, None) => "None".into(),
            };
            Row {
                line: c.line,
                task: c.task.clone(),
                paths: c.paths.iter().map(|p| p.display().to_string()).collect(),
                ok: actual == c.expected,
                expected: c.expected.clone(),
                actual,
            }
        })
        .collect();
    for rep in reports {
        r.inputs.extend(rep.inputs);
    }
    let diff: Vec<&Row> = rows.iter().filter(|row| !row.ok).collect();
    r.verdict = Some(if diff.is_empty() { "AllMatch" } else { "Mismatch" }.into());
    r.witness = to_value(&diff);
    r.details = serde_json::json!({ "cases": rows.len(), "rows": rows });
    r
}
