use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::facts::Side;

/// Failure to turn fact text into a typed fact set.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}", join_issues(.0))]
    Schema(Vec<SchemaIssue>),

    #[error("{predicate} on line {line} of the correspondence names a {side} site that has no matching fact")]
    DanglingMapReference {
        predicate: String,
        side: Side,
        line: usize,
    },
}

fn join_issues(issues: &[SchemaIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemaIssue {
    UnknownPredicate { name: String, line: usize },
    ArityMismatch {
        predicate: String,
        expected: String,
        found: usize,
        line: usize,
    },
    BadArgument {
        predicate: String,
        position: usize,
        message: String,
        line: usize,
    },
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaIssue::UnknownPredicate { name, line } => {
                write!(f, "line {line}: unknown predicate `{name}`")
            }
            SchemaIssue::ArityMismatch {
                predicate,
                expected,
                found,
                line,
            } => write!(
                f,
                "line {line}: `{predicate}` takes {expected} arguments, found {found}"
            ),
            SchemaIssue::BadArgument {
                predicate,
                position,
                message,
                line,
            } => write!(f, "line {line}: argument {position} of `{predicate}`: {message}"),
        }
    }
}
