//! Shared plumbing for the two fact vocabularies: reading ground facts out
//! of the Datalog surface grammar and checking argument shapes.

use std::fmt;

use claimcheck_datalog::{parse_clauses, ClauseKind, DatalogError, Fact, Term, Value};
use serde::Serialize;

use crate::error::{LoadError, SchemaIssue};

/// Which of the two compared programs a fact describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Side {
    Code1,
    Code2,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Code1, Side::Code2];

    pub fn other(self) -> Side {
        match self {
            Side::Code1 => Side::Code2,
            Side::Code2 => Side::Code1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Side::Code1 => "Code1",
            Side::Code2 => "Code2",
        }
    }

    pub fn number(self) -> i64 {
        match self {
            Side::Code1 => 1,
            Side::Code2 => 2,
        }
    }

    pub(crate) fn from_tag(text: &str) -> Option<Side> {
        match text {
            "Code1" => Some(Side::Code1),
            "Code2" => Some(Side::Code2),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A source location.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Loc {
    pub file: String,
    pub line: u32,
}

impl Loc {
    pub fn new(file: impl Into<String>, line: u32) -> Self {
        Loc {
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// A variable at a source location. Ordered by file, then line, then name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VarSite {
    pub file: String,
    pub line: u32,
    pub var: String,
}

impl VarSite {
    pub fn new(var: impl Into<String>, file: impl Into<String>, line: u32) -> Self {
        VarSite {
            file: file.into(),
            line,
            var: var.into(),
        }
    }

    pub(crate) fn values(&self) -> [Value; 3] {
        [sym(&self.var), sym(&self.file), num(self.line)]
    }

    pub fn loc(&self) -> Loc {
        Loc::new(self.file.clone(), self.line)
    }
}

impl fmt::Display for VarSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}:{}", self.var, self.file, self.line)
    }
}

/// A ground fact together with the source line it started on.
#[derive(Debug, Clone)]
pub(crate) struct RawFact {
    pub predicate: String,
    pub args: Vec<Value>,
    pub line: usize,
}

pub(crate) fn syntax_error(e: DatalogError) -> LoadError {
    match e {
        DatalogError::Syntax {
            line,
            column,
            message,
        } => LoadError::Syntax {
            line,
            column,
            message,
        },
        other => LoadError::Syntax {
            line: 0,
            column: 0,
            message: other.to_string(),
        },
    }
}

/// Parses `source` as a list of ground facts. Rules, declarations and
/// facts with variables are rejected.
pub(crate) fn read_facts(source: &str) -> Result<Vec<RawFact>, LoadError> {
    let clauses = parse_clauses(source).map_err(syntax_error)?;
    let mut out = Vec::with_capacity(clauses.len());
    for c in clauses {
        let reject = |message: &str| LoadError::Syntax {
            line: c.line,
            column: c.column,
            message: message.to_string(),
        };
        match c.kind {
            ClauseKind::Fact(atom) => {
                if atom.args.iter().any(|t| !matches!(t, Term::Const(_))) {
                    return Err(reject("fact arguments must be quoted symbols or integers"));
                }
                let fact = atom.to_fact().expect("checked ground");
                out.push(RawFact {
                    predicate: fact.predicate,
                    args: fact.values,
                    line: c.line,
                });
            }
            ClauseKind::Rule(_) => return Err(reject("rules are not allowed in a fact file")),
            ClauseKind::Decl(..) | ClauseKind::Input(_) | ClauseKind::Output(_) => {
                return Err(reject("directives are not allowed in a fact file"))
            }
        }
    }
    Ok(out)
}

/// Collapses repeated slashes and strips `./` segments so that
/// `a//b.c` and `./a/b.c` name the same file as `a/b.c`.
pub fn normalize_path(path: &str) -> String {
    let absolute = path.starts_with('/');
    let parts: Vec<&str> = path.split('/').filter(|p| !p.is_empty() && *p != ".").collect();
    let joined = parts.join("/");
    if absolute {
        format!("/{joined}")
    } else {
        joined
    }
}

/// Typed argument extraction that records problems instead of failing fast.
pub(crate) struct ArgReader<'a> {
    pub fact: &'a RawFact,
    pub issues: &'a mut Vec<SchemaIssue>,
}

impl ArgReader<'_> {
    fn bad(&mut self, position: usize, message: String) {
        self.issues.push(SchemaIssue::BadArgument {
            predicate: self.fact.predicate.clone(),
            position: position + 1,
            message,
            line: self.fact.line,
        });
    }

    pub fn sym(&mut self, i: usize) -> String {
        match &self.fact.args[i] {
            Value::Sym(s) if !s.is_empty() => s.to_string(),
            Value::Sym(_) => {
                self.bad(i, "expected a nonempty string".into());
                String::new()
            }
            Value::Int(n) => {
                self.bad(i, format!("expected a quoted string, found {n}"));
                String::new()
            }
        }
    }

    /// A symbol that may be empty (error kinds, context names).
    pub fn text(&mut self, i: usize) -> String {
        match &self.fact.args[i] {
            Value::Sym(s) => s.to_string(),
            Value::Int(n) => {
                self.bad(i, format!("expected a quoted string, found {n}"));
                String::new()
            }
        }
    }

    pub fn path(&mut self, i: usize) -> String {
        normalize_path(&self.sym(i))
    }

    pub fn line(&mut self, i: usize) -> u32 {
        match &self.fact.args[i] {
            Value::Int(n) => match u32::try_from(*n) {
                Ok(v) => v,
                Err(_) => {
                    self.bad(i, format!("line number {n} is out of range"));
                    0
                }
            },
            Value::Sym(s) => {
                self.bad(i, format!("expected a line number, found \"{s}\""));
                0
            }
        }
    }

    pub fn branch(&mut self, i: usize) -> bool {
        match &self.fact.args[i] {
            Value::Sym(s) if &**s == "true" => true,
            Value::Sym(s) if &**s == "false" => false,
            Value::Int(1) => true,
            Value::Int(0) => false,
            other => {
                self.bad(i, format!("expected \"true\" or \"false\", found {other}"));
                false
            }
        }
    }
}

pub(crate) fn sym(s: &str) -> Value {
    Value::sym(s)
}

pub(crate) fn num(n: u32) -> Value {
    Value::Int(i64::from(n))
}

pub(crate) fn fact(predicate: &str, values: Vec<Value>) -> Fact {
    Fact::new(predicate, values)
}
