use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::thread;

use claimcheck_core::msan::load_msan_facts;
use claimcheck_datalog::{evaluate, import_external};
use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimcheck")).args(args).output().unwrap()
}

/// Exit code and parsed JSON report.
fn report(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), v)
}

fn assert_schema(v: &Value) {
    for key in ["task", "verdict", "witness", "lint", "iterations", "version", "inputs"] {
        assert!(v.get(key).is_some(), "missing {key}: {v}");
    }
    assert!(v["lint"]["errors"].is_array() && v["lint"]["warnings"].is_array());
    for i in v["inputs"].as_array().unwrap() {
        assert_eq!(i["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn verify_msan_fig11() {
    let (code, v) = report(&["verify-msan", &fixture("fig11.facts")]);
    assert_schema(&v);
    assert_eq!(code, 0);
    assert_eq!(v["task"], "msan");
    assert_eq!(v["verdict"], "Verified");
    let chain = v["witness"]["chain"].as_array().unwrap();
    assert_eq!(chain.last().unwrap()["line"], 2538);
    assert_eq!(v["witness"]["memory_error"]["line"], 2538);
}

#[test]
fn verify_msan_empty_and_corrupt() {
    let (code, v) = report(&["verify-msan", &fixture("empty.facts")]);
    assert_eq!((code, v["verdict"].as_str()), (1, Some("DontKnow")));
    let (code, v) = report(&["verify-msan", &fixture("fig11-corrupt.facts")]);
    assert_schema(&v);
    assert_eq!(code, 2);
    assert!(v["verdict"].is_null());
    assert_eq!(v["error"]["kind"], "SyntaxError");
    assert_eq!(v["error"]["line"], 3);
}

#[test]
fn missing_file_and_bad_usage_exit_2() {
    let (code, v) = report(&["verify-msan", "/nonexistent/x.facts"]);
    assert_eq!((code, v["error"]["kind"].as_str()), (2, Some("IoError")));
    assert_eq!(run(&["verify-msan"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_equiv_fixtures() {
    let (code, v) = report(&["verify-equiv", &fixture("fig15.bundle")]);
    assert_schema(&v);
    assert_eq!((code, v["verdict"].as_str()), (1, Some("NotEquivalent")));
    let w = v["witness"].to_string();
    assert!(w.contains("foo") && w.contains("bar"), "{w}");
    let (code, v) = report(&["verify-equiv", &fixture("fig6-self.bundle")]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("Equivalent")));
    let (code, v) = report(&["verify-equiv", &fixture("fig15-missing-watchvars.bundle")]);
    assert_eq!((code, v["verdict"].as_str()), (1, Some("Inconclusive")));
}

#[test]
fn verify_equiv_from_three_files() {
    let text = fs::read_to_string(fixture("fig15.bundle")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut parts = [String::new(), String::new(), String::new()];
    let mut at = None;
    for line in text.lines() {
        match line.trim() {
            "=== code1 ===" => at = Some(0),
            "=== code2 ===" => at = Some(1),
            "=== correspondence ===" => at = Some(2),
            _ => {
                if let Some(i) = at {
                    parts[i].push_str(line);
                    parts[i].push('\n');
                }
            }
        }
    }
    let paths: Vec<String> = ["c1.facts", "c2.facts", "corr.facts"]
        .iter()
        .zip(&parts)
        .map(|(n, body)| {
            let p = dir.path().join(n);
            fs::write(&p, body).unwrap();
            p.display().to_string()
        })
        .collect();
    let (_, whole) = report(&["verify-equiv", &fixture("fig15.bundle")]);
    let (code, v) = report(&["verify-equiv", &paths[0], &paths[1], &paths[2]]);
    assert_eq!(code, 1);
    assert_eq!(v["inputs"].as_array().unwrap().len(), 3);
    assert_eq!(v["witness"], whole["witness"]);
}

#[test]
fn pretty_and_compact_agree() {
    let compact = run(&["verify-msan", &fixture("fig11.facts")]);
    let pretty = run(&["--pretty", "verify-msan", &fixture("fig11.facts")]);
    let strip = |o: &Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timing_ms");
        v
    };
    assert_eq!(strip(&compact), strip(&pretty));
    assert_eq!(String::from_utf8_lossy(&compact.stdout).lines().count(), 1);
    assert!(String::from_utf8_lossy(&pretty.stdout).lines().count() > 10);
}

#[test]
fn extract_msan_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig6.facts");
    let o = run(&["extract", "--task", "msan", "--uninit", "a", &fixture("fig6.toy"), "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (code, v) = report(&["verify-msan", out.to_str().unwrap()]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("Verified")));
    let o = run(&["extract", "--task", "msan", "--uninit", "nope", &fixture("fig6.toy")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extract_empty_program_bundle() {
    let o = run(&["extract", "--task", "equiv", &fixture("empty.toy")]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let facts: Vec<&str> = text.lines().filter(|l| !l.starts_with("===") && !l.is_empty()).collect();
    assert_eq!(
        facts,
        [
            "entry(\"main\", \"main.cpp\", 0).",
            "exit(\"main.cpp\", 1).",
            "entry(\"main\", \"main.cpp\", 0).",
            "exit(\"main.cpp\", 1).",
            "entryMap(\"main\", 0, \"main\", 0).",
            "exitMap(\"main.cpp\", 1, \"main.cpp\", 1).",
        ]
    );
}

#[test]
fn extract_fig14_pair_matches_shipped_bundle() {
    let o = run(&["extract", "--task", "equiv", &fixture("fig14-1.toy"), &fixture("fig14-2.toy")]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), fs::read_to_string(fixture("fig14.bundle")).unwrap());
}

#[test]
fn extract_toy_syntax_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toy");
    fs::write(&p, "input a;\nint b = a;\nint c = (b;\n").unwrap();
    let (code, v) = report(&["extract", "--task", "equiv", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "SyntaxError");
    assert_eq!(v["error"]["line"], 3);
}

#[test]
fn corpus_shipped_manifest_all_match() {
    let (code, v) = report(&["corpus", &fixture("corpus.manifest")]);
    assert_schema(&v);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["verdict"], "AllMatch");
    assert_eq!(v["details"]["cases"], 11);
}

#[test]
fn corpus_empty_and_wrong_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.manifest");
    fs::write(&empty, "# nothing\n").unwrap();
    let (code, v) = report(&["corpus", empty.to_str().unwrap()]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("AllMatch")));
    assert_eq!(v["details"]["rows"].as_array().unwrap().len(), 0);

    let wrong = dir.path().join("wrong.manifest");
    let body = format!(
        "msan Verified {}\nequiv Equivalent {}\nequiv NotEquivalent {}\n",
        fixture("fig11.facts"),
        fixture("fig15.bundle"),
        fixture("fig16.bundle")
    );
    fs::write(&wrong, body).unwrap();
    let (code, v) = report(&["corpus", wrong.to_str().unwrap()]);
    assert_eq!(code, 1);
    let diff = v["witness"].as_array().unwrap();
    assert_eq!(diff.len(), 1);
    assert_eq!(diff[0]["line"], 2);
    assert_eq!(diff[0]["actual"], "NotEquivalent");
    let lines: Vec<i64> = v["details"]["rows"].as_array().unwrap().iter().map(|r| r["line"].as_i64().unwrap()).collect();
    assert_eq!(lines, [1, 2, 3]);
}

#[test]
fn corpus_bad_manifest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m");
    fs::write(&m, "msan Verified\n").unwrap();
    let (code, v) = report(&["corpus", m.to_str().unwrap()]);
    assert_eq!((code, v["error"]["line"].as_i64()), (2, Some(1)));
}

#[test]
fn lint_reports_initializer_warning() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.facts");
    let mut text = fs::read_to_string(fixture("fig11.facts")).unwrap();
    text.push_str("hasInitializer(\"data_\", \"AudioBuffer::AudioBuffer\").\n");
    fs::write(&p, text).unwrap();
    let (code, v) = report(&["lint", "--task", "msan", p.to_str().unwrap()]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("Clean")));
    assert_eq!(v["lint"]["warnings"].as_array().unwrap().len(), 1);
    let (code, v) = report(&["lint", "--task", "equiv", &fixture("fig15.verbatim.bundle")]);
    assert_eq!((code, v["verdict"].as_str()), (1, Some("HasErrors")));
}

#[test]
fn export_writes_rules_and_facts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("msan");
    let o = run(&["export", "--task", "msan", "--dir", d.to_str().unwrap(), &fixture("fig11.facts")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let program = import_external(&d).unwrap();
    let db = evaluate(&program);
    assert_eq!(db.len("satisfied"), 1);
    let e = dir.path().join("equiv");
    let o = run(&["export", "--task", "equiv", "--dir", e.to_str().unwrap(), &fixture("fig15.bundle")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(evaluate(&import_external(&e).unwrap()).len("equivalent"), 0);
}

fn formalize(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["formalize", "--no-timing"];
    all.extend_from_slice(args);
    report(&all)
}

#[test]
fn formalize_mock_log_decreases_to_zero() {
    let (code, v) = formalize(&[
        "--task", "equiv", "--truth", &fixture("fig14.bundle"), "--withhold", "0.4", "--seed", "7", "--iters", "15",
        &fixture("fig14-1.toy"),
    ]);
    assert_schema(&v);
    assert_eq!((code, v["verdict"].as_str()), (1, Some("NotEquivalent")));
    let new: Vec<i64> = v["iterations"].as_array().unwrap().iter().map(|i| i["new"].as_i64().unwrap()).collect();
    assert_eq!(*new.last().unwrap(), 0, "{new:?}");
    assert!(new.windows(2).all(|w| w[0] >= w[1]), "{new:?}");
}

#[test]
fn formalize_writes_facts_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let (out, log) = (dir.path().join("facts"), dir.path().join("log.json"));
    let (code, v) = formalize(&[
        "--task", "msan", "--truth", &fixture("fig11.facts"), &fixture("fig6.toy"),
        "-o", out.to_str().unwrap(), "--log", log.to_str().unwrap(),
    ]);
    assert_eq!((code, v["verdict"].as_str()), (0, Some("Verified")));
    let (code, again) = report(&["verify-msan", out.to_str().unwrap()]);
    assert_eq!((code, again["verdict"].as_str()), (0, Some("Verified")));
    let logged: Value = serde_json::from_str(&fs::read_to_string(log).unwrap()).unwrap();
    assert_eq!(logged["iterations"], v["iterations"]);
    assert_eq!(v["iterations"].as_array().unwrap().len(), 2);
}

#[test]
fn formalize_is_reproducible() {
    let args = [
        "--task", "msan", "--truth", &fixture("fig11.facts"), "--withhold", "0.5", "--seed", "3", &fixture("fig6.toy"),
    ];
    assert_eq!(formalize(&args).1, formalize(&args).1);
}

#[test]
fn formalize_usage_errors() {
    let (code, _) = formalize(&["--task", "msan", &fixture("fig6.toy")]);
    assert_eq!(code, 2);
    let (code, _) = formalize(&["--task", "msan", "--truth", &fixture("fig11.facts"), "--withhold", "1", &fixture("fig6.toy")]);
    assert_eq!(code, 2);
}

#[test]
fn formalize_http_against_loopback_stub() {
    let facts = fs::read_to_string(fixture("fig11.facts")).unwrap();
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/complete", server.server_addr().to_ip().unwrap());
    let reply = serde_json::json!({ "text": facts }).to_string();
    // two iterations of two calls each
    let handle = thread::spawn(move || {
        for mut req in server.incoming_requests().take(4) {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            req.respond(tiny_http::Response::from_string(reply.clone())).unwrap();
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("facts");
    let (code, v) = formalize(&[
        "--task", "msan", "--source", "http", "--url", &url, &fixture("fig6.toy"), "-o", out.to_str().unwrap(),
    ]);
    handle.join().unwrap();
    assert_eq!((code, v["verdict"].as_str()), (0, Some("Verified")), "{v}");
    let got = load_msan_facts(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(got, load_msan_facts(&facts).unwrap());
}
