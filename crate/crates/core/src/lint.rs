use std::fmt;

use serde::Serialize;

use crate::facts::Side;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LintIssue {
    pub code: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    pub message: String,
    pub fact: String,
}

/// Findings of a linter. An empty `errors` list means every mandatory
/// check passed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub errors: Vec<LintIssue>,
    pub warnings: Vec<LintIssue>,
}

impl LintReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    pub(crate) fn error(&mut self, code: &'static str, side: Option<Side>, fact: String, message: String) {
        self.errors.push(LintIssue {
            code,
            side,
            message,
            fact,
        });
    }

    pub(crate) fn warn(&mut self, code: &'static str, side: Option<Side>, fact: String, message: String) {
        self.warnings.push(LintIssue {
            code,
            side,
            message,
            fact,
        });
    }

    pub(crate) fn finish(mut self) -> Self {
        self.errors.sort();
        self.errors.dedup();
        self.warnings.sort();
        self.warnings.dedup();
        self
    }
}

impl fmt::Display for LintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, list) in [("error", &self.errors), ("warning", &self.warnings)] {
            for i in list {
                let side = i.side.map(|s| format!(" [{s}]")).unwrap_or_default();
                writeln!(f, "{label}[{}]{side}: {} ({})", i.code, i.message, i.fact)?;
            }
        }
        Ok(())
    }
}
