//! Soufflé-compatible export and import: `program.dl` plus one
//! tab-separated `<relation>.facts` file per relation with facts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::ast::{Fact, Program, Sort, Value};
use crate::error::{DatalogError, Result};
use crate::parser::{parse_clauses, ClauseKind};

pub const RULES_FILE: &str = "program.dl";

/// Writes `program` into `dir` (created if missing). Relations that carry
/// facts get an `.input` directive and a facts file; every relation gets an
/// `.output` directive.
pub fn export_external(program: &Program, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut by_rel: BTreeMap<&str, Vec<&Fact>> = BTreeMap::new();
    for f in &program.facts {
        by_rel.entry(&f.predicate).or_default().push(f);
    }
    let mut text = String::new();
    for (name, decl) in &program.declarations {
        let params: Vec<String> = decl.params.iter().map(|(p, s)| format!("{p}: {s}")).collect();
        writeln!(text, ".decl {name}({})", params.join(", ")).unwrap();
    }
    for name in by_rel.keys() {
        writeln!(text, ".input {name}").unwrap();
    }
    for name in program.declarations.keys() {
        writeln!(text, ".output {name}").unwrap();
    }
    for r in &program.rules {
        writeln!(text, "{r}").unwrap();
    }
    fs::write(dir.join(RULES_FILE), text)?;
    for (name, facts) in by_rel {
        let mut rows = String::new();
        for f in facts {
            let cols: Vec<String> = f
                .values
                .iter()
                .map(|v| match v {
                    Value::Int(i) => i.to_string(),
                    Value::Sym(s) => s.to_string(),
                })
                .collect();
            rows.push_str(&cols.join("\t"));
            rows.push('\n');
        }
        fs::write(dir.join(format!("{name}.facts")), rows)?;
    }
    Ok(())
}

/// Reads a directory written by [`export_external`] back into a program.
/// Facts files are read for every `.input` relation.
pub fn import_external(dir: &Path) -> Result<Program> {
    let source = fs::read_to_string(dir.join(RULES_FILE))?;
    let mut decls = Vec::new();
    let mut rules = Vec::new();
    let mut inline = Vec::new();
    let mut inputs = Vec::new();
    for c in parse_clauses(&source)? {
        match c.kind {
            ClauseKind::Decl(n, d) => decls.push((n, d)),
            ClauseKind::Rule(r) => rules.push(r),
            ClauseKind::Fact(a) => inline.extend(a.to_fact()),
            ClauseKind::Input(n) => inputs.push(n),
            ClauseKind::Output(_) => {}
        }
    }
    let sorts: BTreeMap<&str, Vec<Sort>> = decls
        .iter()
        .map(|(n, d)| (n.as_str(), d.sorts().collect()))
        .collect();
    let mut facts = inline;
    for name in &inputs {
        let sorts = sorts
            .get(name.as_str())
            .ok_or_else(|| DatalogError::UnknownRelation(name.clone()))?;
        let path = dir.join(format!("{name}.facts"));
        let rows = fs::read_to_string(&path)?;
        for (i, line) in rows.lines().enumerate() {
            let cols: Vec<&str> = if sorts.is_empty() {
                Vec::new()
            } else {
                line.split('\t').collect()
            };
            if cols.len() != sorts.len() {
                return Err(DatalogError::ArityMismatch {
                    predicate: name.clone(),
                    expected: sorts.len(),
                    found: cols.len(),
                });
            }
            let values = cols
                .iter()
                .zip(sorts)
                .enumerate()
                .map(|(col, (text, sort))| match sort {
                    Sort::Symbol => Ok(Value::sym(text)),
                    Sort::Number => text.parse().map(Value::Int).map_err(|_| DatalogError::Syntax {
                        line: i + 1,
                        column: col + 1,
                        message: format!("`{text}` in {} is not a number", path.display()),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            facts.push(Fact::new(name.clone(), values));
        }
    }
    Program::build(decls, rules, facts)
}
