use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::msan::MSAN_PREDICATES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Msan,
    Equiv,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Msan => "msan",
            Task::Equiv => "equiv",
        }
    }

    pub fn from_name(s: &str) -> Option<Task> {
        match s {
            "msan" => Some(Task::Msan),
            "equiv" => Some(Task::Equiv),
            _ => None,
        }
    }

    /// Predicate signatures offered to a fact source.
    pub fn vocabulary(self) -> Vec<String> {
        match self {
            Task::Msan => MSAN_PREDICATES
                .iter()
                .map(|(name, arity)| {
                    let args = match (*name, arity) {
                        ("flow", _) => "x, src_file_x, line_x, y, src_file_y, line_y",
                        ("memoryError", _) => "x, kind, source, line",
                        (_, 2) => "f, m",
                        _ => "x, source, line",
                    };
                    format!("{name}({args})")
                })
                .collect(),
            Task::Equiv => [
                "def(x, src_file, line, code_num)",
                "use(x, src_file, line, code_num)",
                "flow(x, src_file, line_x, x, src_file, line_y, code_num)",
                "controldep(x, src_file, line, cond, branch, src_file, cond_line, code_num)",
                "defWithExpr(x, src_file, line, code_num)",
                "condWithExpr(src_file, line, code_num)",
                "unaryFun(op, x, src_file, line, code_num)",
                "binaryFun(op, x, y, src_file, line, code_num)",
                "entry(fun, src_file, line, code_num)",
                "exit(src_file, line, code_num)",
                "isConstantValue(x)",
                "watchVar(x, src_file, line, code_num)",
                "varMap(x, src_file, line, y, src_file, line)",
                "entryMap(fun1, line1, fun2, line2)",
                "exitMap(src_file1, line1, src_file2, line2)",
            ]
            .iter()
            .map(ToString::to_string)
            .collect(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a fact source is asked for on one iteration.
#[derive(Debug, Clone, Serialize)]
pub struct Request {
    pub task: Task,
    pub snippets: String,
    pub vocabulary: Vec<String>,
    /// Facts collected so far, one per line.
    pub prior_facts: String,
    /// 1-based.
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned status {0}")]
    Status(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("not configured: {0}")]
    Config(String),
}

/// Anything that can propose candidate facts as text.
pub trait FactSource: Send + Sync {
    fn propose(&self, req: &Request) -> Result<String, SourceError>;
}

impl<T: FactSource + ?Sized> FactSource for &T {
    fn propose(&self, req: &Request) -> Result<String, SourceError> {
        (**self).propose(req)
    }
}

impl<T: FactSource + ?Sized> FactSource for Box<T> {
    fn propose(&self, req: &Request) -> Result<String, SourceError> {
        (**self).propose(req)
    }
}
