//! Fact vocabularies, verifiers, a toy frontend and the iterative
//! formalizer loop, built on `claimcheck-datalog`.

pub mod error;
pub mod facts;
pub mod lint;
pub mod equiv;
pub mod formalize;
pub mod msan;
pub mod toy;

pub use error::{LoadError, SchemaIssue};
pub use facts::Side;
pub use lint::{LintIssue, LintReport};
