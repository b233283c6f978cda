use std::fmt;

use serde::Serialize;

use crate::equiv::diff::{check_watchvars, diff_structure, Mismatch};
use crate::equiv::lint::lint_equiv;
use crate::equiv::model::EquivBundle;
use crate::equiv::pairing::build_pairing;
use crate::lint::{LintIssue, LintReport};

/// Printed with every equivalence report.
pub const PAIRING_NOTE: &str = "equivalence is structural over the fact abstraction: variables pair by varMap then by name, \
sites by entry/exit maps, ordinal definition and condition order, then identical lines";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquivOutcome {
    Equivalent,
    NotEquivalent,
    Inconclusive,
}

impl fmt::Display for EquivOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquivOutcome::Equivalent => "Equivalent",
            EquivOutcome::NotEquivalent => "NotEquivalent",
            EquivOutcome::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EquivWitness {
    Mismatch(Mismatch),
    MissingObligations { errors: Vec<LintIssue> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivVerdict {
    pub outcome: EquivOutcome,
    pub witness: Option<EquivWitness>,
    /// Total number of mismatches found (zero unless NotEquivalent).
    pub mismatch_count: usize,
    pub lint: LintReport,
    pub note: &'static str,
}

impl EquivVerdict {
    pub fn mismatch(&self) -> Option<&Mismatch> {
        match &self.witness {
            Some(EquivWitness::Mismatch(m)) => Some(m),
            _ => None,
        }
    }
}

/// All mismatches in witness order: structural ones first, then
/// watch-variable ones.
pub fn all_mismatches(b: &EquivBundle) -> Option<Vec<Mismatch>> {
    let p = build_pairing(b).ok()?;
    let mut out = diff_structure(b, &p);
    out.extend(check_watchvars(b, &p));
    out.sort();
    Some(out)
}

/// Inconclusive when the bundle fails its sufficiency lint; otherwise
/// NotEquivalent with the first mismatch, or Equivalent.
pub fn verify_equiv(b: &EquivBundle) -> EquivVerdict {
    let lint = lint_equiv(b);
    if !lint.is_clean() {
        return EquivVerdict {
            outcome: EquivOutcome::Inconclusive,
            witness: Some(EquivWitness::MissingObligations {
                errors: lint.errors.clone(),
            }),
            mismatch_count: 0,
            lint,
            note: PAIRING_NOTE,
        };
    }
    let mismatches = all_mismatches(b).expect("lint rejects conflicting varMap");
    let count = mismatches.len();
    match mismatches.into_iter().next() {
        Some(m) => EquivVerdict {
            outcome: EquivOutcome::NotEquivalent,
            witness: Some(EquivWitness::Mismatch(m)),
            mismatch_count: count,
            lint,
            note: PAIRING_NOTE,
        },
        None => EquivVerdict {
            outcome: EquivOutcome::Equivalent,
            witness: None,
            mismatch_count: 0,
            lint,
            note: PAIRING_NOTE,
        },
    }
}
