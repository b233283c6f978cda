use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;

use claimcheck_core::equiv::{load_equiv_text, verify_equiv, EquivOutcome};
use claimcheck_core::formalize::prompts::{msan_formalize_prompt, msan_trace_prompt, render, split_explanation};
use claimcheck_core::formalize::*;
use claimcheck_core::msan::{load_msan_facts, verify_msan, MsanOutcome};

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn quiet() -> LoopConfig {
    LoopConfig {
        max_iters: 5,
        record_timing: false,
    }
}

struct Fixed(Result<String, SourceError>);

impl FactSource for Fixed {
    fn propose(&self, _req: &Request) -> Result<String, SourceError> {
        self.0.clone()
    }
}

/// Wraps a source and keeps every request it saw.
struct Recording<S> {
    inner: S,
    seen: Mutex<Vec<Request>>,
}

impl<S: FactSource> FactSource for Recording<S> {
    fn propose(&self, req: &Request) -> Result<String, SourceError> {
        self.seen.lock().unwrap().push(req.clone());
        self.inner.propose(req)
    }
}

#[test]
fn full_ground_truth_stops_after_second_iteration() {
    let truth = fixture("fig15.bundle");
    let out = run_loop(&mock_source(&truth, 0.0, 1), Task::Equiv, "", &quiet());
    let counts: Vec<(usize, usize)> = out.log.iterations.iter().map(|i| (i.parsed, i.new)).collect();
    assert_eq!(counts.len(), 2);
    assert_eq!(counts[1].1, 0);
    assert_eq!(counts[0].0, counts[0].1);
    assert_eq!(out.facts.to_equiv().unwrap(), load_equiv_text(&truth).unwrap());
    assert!(out.log.iterations.iter().all(|i| i.failures.is_empty()));
}

#[test]
fn empty_source_stops_after_second_iteration() {
    let out = run_loop(&Fixed(Ok(String::new())), Task::Msan, "", &quiet());
    assert_eq!(out.log.iterations.len(), 2);
    assert!(out.facts.is_empty());
}

#[test]
fn single_iteration_cap() {
    let cfg = LoopConfig {
        max_iters: 1,
        record_timing: false,
    };
    let out = run_loop(&mock_source(&fixture("fig11.facts"), 0.0, 1), Task::Msan, "", &cfg);
    assert_eq!(out.log.iterations.len(), 1);
}

#[test]
fn failing_source_is_logged_not_fatal() {
    let out = run_loop(&Fixed(Err(SourceError::Status(503))), Task::Msan, "", &quiet());
    assert_eq!(out.log.iterations.len(), 2);
    assert_eq!(out.log.iterations[0].source_error.as_deref(), Some("endpoint returned status 503"));
    assert!(out.facts.is_empty());
}

#[test]
fn lenient_line_parsing() {
    let response = "Here are the facts:\n```datalog\nuses(\"x\", \"a.c\", 3)\nuninitialized(\"x\", \"a.c\", 1);\n* flow(\"x\", \"a.c\", 1, \"x\", \"a.c\", 3).\nbogus(1).\nThe value flows.\n```\n";
    let out = run_loop(&Fixed(Ok(response.into())), Task::Msan, "", &quiet());
    let first = &out.log.iterations[0];
    assert_eq!((first.parsed, first.new), (3, 3));
    let lines: Vec<usize> = first.failures.iter().map(|f| f.line).collect();
    assert_eq!(lines, vec![1, 6, 7]);
    let fs = out.facts.to_msan().unwrap();
    assert_eq!(verify_msan(&fs).outcome, MsanOutcome::Verified);
}

#[test]
fn equiv_response_sections_and_explanations() {
    let response = "<Code1 Predicates>\nexit(3, \"Code1\")\n</Code1 Predicates>\n<Code2 Predicates>\nexit(4)\n</Code2 Predicates>\n<Common Predicates>\nexitMap(3, 4)\n</Common Predicates>\n<Explanation>\nuse(\"nope\", 1) is just prose here\n</Explanation>\n";
    let out = run_loop(&Fixed(Ok(response.into())), Task::Equiv, "", &quiet());
    assert!(out.log.iterations[0].failures.is_empty());
    let b = out.facts.to_equiv().unwrap();
    assert_eq!((b.code1.exit.len(), b.code2.exit.len()), (1, 1));
    assert_eq!(b.correspondence.exit_map.len(), 1);
    assert!(b.code1.uses.is_empty());
}

#[test]
fn seeded_withholding_is_reproducible() {
    let truth = fixture("fig15.bundle");
    let run = || run_loop(&mock_source(&truth, 0.4, 7), Task::Equiv, "", &quiet());
    let (a, b) = (run(), run());
    let counts = |o: &LoopOutcome| o.log.iterations.iter().map(|i| (i.parsed, i.new)).collect::<Vec<_>>();
    assert_eq!(counts(&a), counts(&b));
    assert_eq!(
        serde_json::to_string(&a.log).unwrap(),
        serde_json::to_string(&b.log).unwrap()
    );
    assert!(a.log.iterations[0].parsed < load_equiv_text(&truth).unwrap().code1.len() * 2);
    let other = run_loop(&mock_source(&truth, 0.4, 8), Task::Equiv, "", &quiet());
    assert_ne!(counts(&a), counts(&other));
}

#[test]
fn heavy_withholding_is_mostly_inconclusive() {
    let truth = fixture("fig15.bundle");
    let inconclusive = (0..20)
        .filter(|seed| {
            let out = run_loop(&mock_source(&truth, 0.99, *seed), Task::Equiv, "", &quiet());
            match out.facts.to_equiv() {
                Ok(b) => verify_equiv(&b).outcome == EquivOutcome::Inconclusive,
                Err(_) => true,
            }
        })
        .count();
    assert!(inconclusive >= 18, "{inconclusive}");
}

#[test]
fn union_grows_and_msan_verdict_is_stable() {
    let truth = fixture("fig11.facts");
    for seed in 0..30 {
        let src = Recording {
            inner: mock_source(&truth, 0.5, seed),
            seen: Mutex::new(Vec::new()),
        };
        let cfg = LoopConfig {
            max_iters: 8,
            record_timing: false,
        };
        let out = run_loop(&src, Task::Msan, "", &cfg);
        let mut snapshots: Vec<String> = src.seen.lock().unwrap().iter().map(|r| r.prior_facts.clone()).collect();
        snapshots.push(out.facts.to_text());
        let sets: Vec<BTreeSet<&str>> = snapshots.iter().map(|s| s.lines().collect()).collect();
        let mut verified = false;
        for (k, set) in sets.iter().enumerate() {
            if k > 0 {
                assert!(set.is_superset(&sets[k - 1]));
            }
            let now = verify_msan(&load_msan_facts(&snapshots[k]).unwrap()).outcome == MsanOutcome::Verified;
            assert!(!verified || now, "seed {seed}: verdict regressed at snapshot {k}");
            verified |= now;
        }
    }
}

#[test]
fn requests_carry_vocabulary_and_prior_facts() {
    let src = Recording {
        inner: mock_source(&fixture("fig11.facts"), 0.0, 0),
        seen: Mutex::new(Vec::new()),
    };
    run_loop(&src, Task::Msan, "snippet", &quiet());
    let seen = src.seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert!(seen[0].prior_facts.is_empty());
    assert_eq!(seen[1].prior_facts.lines().count(), 11);
    assert!(seen[0].vocabulary.iter().any(|v| v.starts_with("flow(")));
    assert_eq!((seen[0].iteration, seen[1].iteration), (1, 2));
}

#[test]
fn templates_render() {
    let p = msan_formalize_prompt("TRACE BODY");
    assert!(p.contains(r#"flow("x", "src_file_x", line_x"#));
    assert!(p.contains("TRACE BODY"));
    assert!(!p.contains("{trace}"));
    let t = msan_trace_prompt("ctx", "why");
    assert!(t.contains("foo(int a) {\n"));
    assert!(!t.contains("{{"));
    assert_eq!(render("{a}{{b}}{c}", &[("a", "1")]), "1{b}{c}");
    assert_eq!(split_explanation("code\nEXPLANATION:\nbecause\n"), ("code\n", "because\n"));
    assert_eq!(split_explanation(""), ("", ""));
}

/// Serves `reply` to every POST and keeps the request bodies.
fn stub(reply: String, status: u16) -> (String, Arc<Mutex<Vec<serde_json::Value>>>, thread::JoinHandle<()>) {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/complete", server.server_addr().to_ip().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let seen = bodies.clone();
    let handle = thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let done = body == "\"stop\"";
            if !done {
                seen.lock().unwrap().push(serde_json::from_str(&body).expect("json request"));
            }
            let resp = tiny_http::Response::from_string(reply.clone()).with_status_code(status);
            req.respond(resp).unwrap();
            if done {
                break;
            }
        }
    });
    (url, bodies, handle)
}

fn stop(url: &str, handle: thread::JoinHandle<()>) {
    reqwest::blocking::Client::new().post(url).body("\"stop\"").send().unwrap();
    handle.join().unwrap();
}

#[test]
fn loopback_server_yields_fig11() {
    let facts = fixture("fig11.facts");
    let reply = serde_json::json!({ "text": facts }).to_string();
    let (url, bodies, handle) = stub(reply, 200);
    let src = http_source(HttpConfig::new(url.clone())).unwrap();
    let out = run_loop(&src, Task::Msan, "", &quiet());
    stop(&url, handle);
    assert_eq!(out.facts.to_msan().unwrap(), load_msan_facts(&facts).unwrap());
    let bodies = bodies.lock().unwrap();
    // two iterations, two calls each
    assert_eq!(bodies.len(), 4);
    for b in bodies.iter() {
        assert!(b["system"].is_string() && b["user"].is_string());
    }
    assert!(bodies[1]["system"].as_str().unwrap().contains(r#"flow("x", "src_file_x", line_x"#));
    assert!(bodies[3]["user"].as_str().unwrap().contains("memoryError"));
}

#[test]
fn loopback_equiv_call_and_error_status() {
    let (url, bodies, handle) = stub(serde_json::json!({ "text": "" }).to_string(), 200);
    let src = http_source(HttpConfig::new(url.clone())).unwrap();
    let out = run_loop(&src, Task::Equiv, "", &quiet());
    stop(&url, handle);
    assert!(out.facts.is_empty());
    assert_eq!(bodies.lock().unwrap().len(), 2);
    assert_eq!(bodies.lock().unwrap()[0]["user"], "");

    let (url, _, handle) = stub("oops".into(), 500);
    let src = http_source(HttpConfig::new(url.clone())).unwrap();
    let out = run_loop(&src, Task::Equiv, "int a = 0;", &quiet());
    stop(&url, handle);
    assert_eq!(out.log.iterations[0].source_error.as_deref(), Some("endpoint returned status 500"));

    let (url, _, handle) = stub("not json".into(), 200);
    let src = http_source(HttpConfig::new(url.clone())).unwrap();
    let out = run_loop(&src, Task::Equiv, "", &quiet());
    stop(&url, handle);
    assert!(out.log.iterations[0].source_error.as_deref().unwrap().starts_with("malformed response"));
}
