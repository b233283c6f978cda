//! A small deterministic Datalog engine.
//!
//! Programs are parsed from Soufflé-like text or assembled with
//! [`Program::build`], checked at load time (arity, sorts, range
//! restriction, stratification) and evaluated semi-naively.
//!
//! ```
//! use claimcheck_datalog::{evaluate, parse_program, Atom, Term};
//!
//! let p = parse_program("e(1, 2). e(2, 3). t(x, y) :- e(x, y). t(x, z) :- t(x, y), e(y, z).").unwrap();
//! let db = evaluate(&p);
//! assert!(db.holds(&Atom::new("t", vec![Term::int(1), Term::int(3)])).unwrap());
//! ```

mod ast;
mod check;
mod error;
mod eval;
mod export;
mod parser;

pub use ast::{Atom, CmpOp, Declaration, Fact, Literal, Program, Rule, Sort, Term, Value};
pub use check::parse_program;
pub use error::{DatalogError, Result};
pub use eval::{evaluate, Bindings, Database, Derivation};
pub use export::{export_external, import_external, RULES_FILE};
pub use parser::{parse_clauses, Clause, ClauseKind};
