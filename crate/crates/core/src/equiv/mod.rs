//! The program-equivalence vocabulary, site pairing and verifier.

mod diff;
mod lint;
mod load;
mod model;
mod pairing;
mod rules;
mod verify;

pub use diff::{check_watchvars, diff_structure, Mismatch, MismatchKey, MismatchKind};
pub use lint::lint_equiv;
pub use load::{load_equiv_bundle, load_equiv_text, Section, DEFAULT_FILE};
pub use model::{BinaryFun, ControlDep, Correspondence, Entry, EquivBundle, MapEnd, ProgramFacts, UnaryFun};
pub use pairing::{build_pairing, Bijection, PairingError, SitePairing};
pub use rules::{equiv_rules, evaluate_equiv_rules, mismatch_keys};
pub use verify::{all_mismatches, verify_equiv, EquivOutcome, EquivVerdict, EquivWitness, PAIRING_NOTE};

pub(crate) use load::{section_marker, Loader};
