use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use claimcheck_datalog::Fact;
use serde::Serialize;

use super::source::{FactSource, Request, Task};
use crate::equiv::{load_equiv_text, section_marker, EquivBundle, Loader, Section};
use crate::error::LoadError;
use crate::facts::{read_facts, RawFact, Side};
use crate::msan::{load_msan_facts, MsanFactSet};

/// One collected fact with the section it was written under.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CollectedFact {
    pub section: Option<Section>,
    /// Canonical rendering, terminated by `.`.
    pub text: String,
}

/// The running union of facts over all iterations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactUnion {
    pub task: Task,
    pub facts: BTreeSet<CollectedFact>,
}

impl FactUnion {
    pub fn new(task: Task) -> FactUnion {
        FactUnion {
            task,
            facts: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Facts one per line; equivalence facts are grouped under section
    /// markers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = None;
        for f in &self.facts {
            if f.section != current {
                current = f.section;
                let marker = match f.section {
                    Some(Section::Code(Side::Code1)) => "=== code1 ===",
                    Some(Section::Code(Side::Code2)) => "=== code2 ===",
                    Some(Section::Correspondence) => "=== correspondence ===",
                    None => unreachable!("loose facts sort first"),
                };
                let _ = writeln!(out, "{marker}");
            }
            let _ = writeln!(out, "{}", f.text);
        }
        out
    }

    pub fn to_msan(&self) -> Result<MsanFactSet, LoadError> {
        load_msan_facts(&self.to_text())
    }

    pub fn to_equiv(&self) -> Result<EquivBundle, LoadError> {
        load_equiv_text(&self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseFailure {
    /// 1-based line within the raw response.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iteration {
    pub index: usize,
    pub raw: String,
    pub parsed: usize,
    pub new: usize,
    pub failures: Vec<ParseFailure>,
    pub source_error: Option<String>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationLog {
    pub iterations: Vec<Iteration>,
}

#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub max_iters: usize,
    /// Off for byte-identical logs.
    pub record_timing: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_iters: 5,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub facts: FactUnion,
    pub log: IterationLog,
}

fn canonical(f: &RawFact) -> String {
    format!("{}.", Fact::new(f.predicate.clone(), f.args.clone()))
}

/// Checks a single fact against the task's schema.
fn validate(task: Task, text: &str, section: Option<Section>) -> Result<(), String> {
    match task {
        Task::Msan => load_msan_facts(text).map(|_| ()).map_err(|e| e.to_string()),
        Task::Equiv => {
            let mut l = Loader::default();
            l.read(text, section).map_err(|e| e.to_string())?;
            match l.issues.first() {
                Some(issue) => Err(issue.to_string()),
                None => Ok(()),
            }
        }
    }
}

/// Parses one response line leniently: a missing final `.` or a
/// trailing `;` or `,` is tolerated.
fn parse_line(line: &str) -> Result<Vec<RawFact>, String> {
    let first = match read_facts(line) {
        Ok(fs) => return Ok(fs),
        Err(e) => e.to_string(),
    };
    let trimmed = line.trim_end_matches([';', ',', '.']).trim_end();
    read_facts(&format!("{trimmed}.")).map_err(|_| first)
}

fn is_fence(line: &str) -> bool {
    line.starts_with("``")
}

/// Extracts facts from a free-form response. Section markers switch the
/// current section; prose, fences and explanation blocks are skipped.
fn harvest(task: Task, raw: &str) -> (Vec<CollectedFact>, Vec<ParseFailure>) {
    let mut facts = Vec::new();
    let mut failures = Vec::new();
    let mut section = None;
    let mut in_explanation = false;
    for (i, line) in raw.lines().enumerate() {
        let t = line.trim();
        let t = t.strip_prefix("* ").or_else(|| t.strip_prefix("- ")).unwrap_or(t);
        let compact: String = t.to_ascii_lowercase().split_whitespace().collect();
        if compact == "<explanation>" {
            in_explanation = true;
            continue;
        }
        if compact == "</explanation>" {
            in_explanation = false;
            continue;
        }
        if in_explanation || t.is_empty() || is_fence(t) {
            continue;
        }
        if let Some(next) = section_marker(t) {
            section = next;
            continue;
        }
        let fail = |reason: String| ParseFailure { line: i + 1, reason };
        match parse_line(t) {
            Ok(raw_facts) => {
                for f in raw_facts {
                    let text = canonical(&f);
                    match validate(task, &text, section) {
                        Ok(()) => facts.push(CollectedFact { section, text }),
                        Err(reason) => failures.push(fail(reason)),
                    }
                }
            }
            Err(reason) => failures.push(fail(reason)),
        }
    }
    (facts, failures)
}

/// Repeatedly asks `source` for facts and keeps the union. Stops once an
/// iteration after the first adds nothing new, or after `max_iters`
/// iterations. Source errors and unparseable lines are logged and
/// otherwise ignored.
pub fn run_loop(source: &dyn FactSource, task: Task, snippets: &str, cfg: &LoopConfig) -> LoopOutcome {
    let mut union = FactUnion::new(task);
    let mut log = IterationLog::default();
    for index in 1..=cfg.max_iters.max(1) {
        let started = Instant::now();
        let req = Request {
            task,
            snippets: snippets.to_string(),
            vocabulary: task.vocabulary(),
            prior_facts: union.to_text(),
            iteration: index,
        };
        let (raw, source_error) = match source.propose(&req) {
            Ok(text) => (text, None),
            Err(e) => {
                log::warn!("iteration {index}: {e}");
                (String::new(), Some(e.to_string()))
            }
        };
        let (facts, failures) = harvest(task, &raw);
        for f in &failures {
            log::debug!("iteration {index}, line {}: {}", f.line, f.reason);
        }
        let parsed: BTreeSet<CollectedFact> = facts.into_iter().collect();
        let before = union.len();
        union.facts.extend(parsed.iter().cloned());
        let new = union.len() - before;
        log.iterations.push(Iteration {
            index,
            raw,
            parsed: parsed.len(),
            new,
            failures,
            source_error,
            wall_ms: cfg
                .record_timing
                .then(|| started.elapsed().as_secs_f64() * 1000.0),
        });
        if index > 1 && new == 0 {
            break;
        }
    }
    LoopOutcome { facts: union, log }
}
