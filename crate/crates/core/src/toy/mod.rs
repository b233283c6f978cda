//! A small loop-free C-like language with an interpreter, normalizer,
//! fact extractors and ground-truth oracles.

mod ast;
mod extract;
mod gen;
mod interp;
mod normalize;
mod oracle;
mod parse;

use thiserror::Error;

pub use ast::{Expr, Stmt, ToyProgram};
pub use extract::{extract_equiv_facts, extract_msan_facts, program_facts, ENTRY_COND, MAIN, UNINIT_KIND};
pub use gen::{mutate, random_expr, random_program, GenConfig, Mutation, MutatedPair, BINARY_OPS, UNARY_OPS};
pub use interp::{interpret, mix, ExecState, DOMAIN};
pub use normalize::normalize;
pub use oracle::{assignments, oracle_equiv, taint_reaches_output};
pub use parse::parse_toy;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToyError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("`{var}` used before definition at line {line}")]
    UseBeforeDef { var: String, line: u32 },
    #[error("no value supplied for input `{0}`")]
    MissingInput(String),
}
