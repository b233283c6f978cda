use thiserror::Error;

use crate::ast::Sort;

#[derive(Debug, Error)]
pub enum DatalogError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("arity mismatch for `{predicate}`: expected {expected}, found {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },

    #[error("sort error in `{predicate}` argument {position}: expected {expected}, found {found}")]
    SortMismatch {
        predicate: String,
        position: usize,
        expected: Sort,
        found: Sort,
    },

    #[error("variable `{variable}` is used as both symbol and number in rule `{rule}`")]
    VariableSort { variable: String, rule: String },

    #[error("comparison over a symbol in rule `{rule}`")]
    SymbolComparison { rule: String },

    #[error("relation `{0}` declared twice with different signatures")]
    Redeclared(String),

    #[error("rule `{rule}` is not range-restricted: variable `{variable}` does not occur in a positive body literal")]
    RangeRestriction { rule: String, variable: String },

    #[error("wildcard in the head of rule `{0}`")]
    WildcardInHead(String),

    #[error("negation on a recursive cycle: {0}")]
    UnstratifiableNegation(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("fact `{0}` is not derivable")]
    NotDerivable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DatalogError> = std::result::Result<T, E>;
