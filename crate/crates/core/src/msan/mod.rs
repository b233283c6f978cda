//! The use-of-uninitialized-value vocabulary and its verifier.

mod lint;
mod rules;
mod verify;

use std::collections::BTreeSet;
use std::fmt;

use claimcheck_datalog::Fact;
use serde::Serialize;

use crate::error::{LoadError, SchemaIssue};
use crate::facts::{fact, num, read_facts, sym, ArgReader};
pub use crate::facts::VarSite;

pub use lint::lint_msan;
pub use rules::{msan_program, msan_rules};
pub use verify::{verify_msan, MsanOutcome, MsanVerdict, MsanWitness};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MemoryError {
    pub var: String,
    pub kind: String,
    pub file: String,
    pub line: u32,
}

/// Typed instances of the MSAN predicates for one trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MsanFactSet {
    pub uses: BTreeSet<VarSite>,
    pub uninitialized: BTreeSet<VarSite>,
    pub has_initializer: BTreeSet<(String, String)>,
    pub has_member_initializer: BTreeSet<(String, String)>,
    pub allocated: BTreeSet<VarSite>,
    pub declared: BTreeSet<VarSite>,
    pub flow: BTreeSet<(VarSite, VarSite)>,
    pub memory_error: BTreeSet<MemoryError>,
}

/// Predicate names and arities of the MSAN vocabulary.
pub const MSAN_PREDICATES: [(&str, usize); 8] = [
    ("uses", 3),
    ("uninitialized", 3),
    ("hasInitializer", 2),
    ("hasMemberInitializer", 2),
    ("allocated", 3),
    ("declared", 3),
    ("flow", 6),
    ("memoryError", 4),
];

impl MsanFactSet {
    pub fn len(&self) -> usize {
        self.uses.len()
            + self.uninitialized.len()
            + self.has_initializer.len()
            + self.has_member_initializer.len()
            + self.allocated.len()
            + self.declared.len()
            + self.flow.len()
            + self.memory_error.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The set as generic Datalog facts, in canonical order.
    pub fn facts(&self) -> Vec<Fact> {
        let mut out = Vec::with_capacity(self.len());
        let site = |p: &str, s: &VarSite| fact(p, s.values().to_vec());
        out.extend(self.allocated.iter().map(|s| site("allocated", s)));
        out.extend(self.declared.iter().map(|s| site("declared", s)));
        for (p, set) in [
            ("hasInitializer", &self.has_initializer),
            ("hasMemberInitializer", &self.has_member_initializer),
        ] {
            out.extend(set.iter().map(|(x, m)| fact(p, vec![sym(x), sym(m)])));
        }
        out.extend(self.uninitialized.iter().map(|s| site("uninitialized", s)));
        out.extend(self.flow.iter().map(|(a, b)| {
            let mut v = a.values().to_vec();
            v.extend(b.values());
            fact("flow", v)
        }));
        out.extend(self.uses.iter().map(|s| site("uses", s)));
        out.extend(self.memory_error.iter().map(|e| {
            fact(
                "memoryError",
                vec![sym(&e.var), sym(&e.kind), sym(&e.file), num(e.line)],
            )
        }));
        out
    }

    /// Adds every fact of `other`.
    pub fn extend(&mut self, other: &MsanFactSet) {
        self.uses.extend(other.uses.iter().cloned());
        self.uninitialized.extend(other.uninitialized.iter().cloned());
        self.has_initializer.extend(other.has_initializer.iter().cloned());
        self.has_member_initializer
            .extend(other.has_member_initializer.iter().cloned());
        self.allocated.extend(other.allocated.iter().cloned());
        self.declared.extend(other.declared.iter().cloned());
        self.flow.extend(other.flow.iter().cloned());
        self.memory_error.extend(other.memory_error.iter().cloned());
    }
}

impl fmt::Display for MsanFactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in self.facts() {
            writeln!(f, "{fact}.")?;
        }
        Ok(())
    }
}

/// Reads MSAN facts. File paths are normalized; unknown predicates and
/// wrong arities are collected into one schema error.
pub fn load_msan_facts(source: &str) -> Result<MsanFactSet, LoadError> {
    let raw = read_facts(source)?;
    let mut fs = MsanFactSet::default();
    let mut issues = Vec::new();
    for f in &raw {
        let Some(&(_, arity)) = MSAN_PREDICATES.iter().find(|(p, _)| *p == f.predicate) else {
            issues.push(SchemaIssue::UnknownPredicate {
                name: f.predicate.clone(),
                line: f.line,
            });
            continue;
        };
        if f.args.len() != arity {
            issues.push(SchemaIssue::ArityMismatch {
                predicate: f.predicate.clone(),
                expected: arity.to_string(),
                found: f.args.len(),
                line: f.line,
            });
            continue;
        }
        let mut r = ArgReader {
            fact: f,
            issues: &mut issues,
        };
        let site = |r: &mut ArgReader, at: usize| {
            let var = r.sym(at);
            let file = r.path(at + 1);
            VarSite::new(var, file, r.line(at + 2))
        };
        match f.predicate.as_str() {
            "uses" => {
                fs.uses.insert(site(&mut r, 0));
            }
            "uninitialized" => {
                fs.uninitialized.insert(site(&mut r, 0));
            }
            "allocated" => {
                fs.allocated.insert(site(&mut r, 0));
            }
            "declared" => {
                fs.declared.insert(site(&mut r, 0));
            }
            "hasInitializer" => {
                fs.has_initializer.insert((r.sym(0), r.text(1)));
            }
            "hasMemberInitializer" => {
                fs.has_member_initializer.insert((r.sym(0), r.text(1)));
            }
            "flow" => {
                let a = site(&mut r, 0);
                let b = site(&mut r, 3);
                fs.flow.insert((a, b));
            }
            "memoryError" => {
                let var = r.sym(0);
                let kind = r.text(1);
                let file = r.path(2);
                let line = r.line(3);
                fs.memory_error.insert(MemoryError {
                    var,
                    kind,
                    file,
                    line,
                });
            }
            _ => unreachable!("predicate table and match disagree"),
        }
    }
    if issues.is_empty() {
        Ok(fs)
    } else {
        Err(LoadError::Schema(issues))
    }
}
