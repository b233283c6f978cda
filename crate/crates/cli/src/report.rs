use std::fs;
use std::path::{Path, PathBuf};

use claimcheck_core::formalize::Iteration;
use claimcheck_core::toy::ToyError;
use claimcheck_core::{LintReport, LoadError};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Input {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Failure {
        Failure {
            kind: "IoError",
            line: None,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn usage(message: impl Into<String>) -> Failure {
        Failure {
            kind: "UsageError",
            line: None,
            message: message.into(),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Failure {
        let (kind, line) = match &e {
            LoadError::Syntax { line, .. } => ("SyntaxError", Some(*line)),
            LoadError::Schema(issues) => ("SchemaError", issues.first().map(|i| match i {
                claimcheck_core::SchemaIssue::UnknownPredicate { line, .. }
                | claimcheck_core::SchemaIssue::ArityMismatch { line, .. }
                | claimcheck_core::SchemaIssue::BadArgument { line, .. } => *line,
            })),
            LoadError::DanglingMapReference { line, .. } => ("DanglingMapReference", Some(*line)),
        };
        Failure {
            kind,
            line,
            message: e.to_string(),
        }
    }
}

impl From<ToyError> for Failure {
    fn from(e: ToyError) -> Failure {
        let (kind, line) = match &e {
            ToyError::Syntax { line, .. } => ("SyntaxError", Some(*line as usize)),
            ToyError::UseBeforeDef { line, .. } => ("UseBeforeDef", Some(*line as usize)),
            ToyError::MissingInput(_) => ("MissingInput", None),
        };
        Failure {
            kind,
            line,
            message: e.to_string(),
        }
    }
}

/// The machine-readable result of one command.
#[derive(Debug, Serialize)]
pub struct Report {
    pub task: String,
    pub verdict: Option<String>,
    pub witness: Value,
    pub lint: LintReport,
    pub iterations: Vec<Iteration>,
    pub version: &'static str,
    pub inputs: Vec<Input>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Failure>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Report {
    pub fn new(task: &str) -> Report {
        Report {
            task: task.into(),
            verdict: None,
            witness: Value::Null,
            lint: LintReport::default(),
            iterations: Vec::new(),
            version: VERSION,
            inputs: Vec::new(),
            timing_ms: None,
            error: None,
            details: Value::Null,
        }
    }

    /// Reads a file and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
        self.inputs.push(Input {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|_| Failure {
            kind: "IoError",
            line: None,
            message: format!("{}: not UTF-8", path.display()),
        })
    }

    pub fn fail(mut self, f: Failure) -> Report {
        self.error = Some(f);
        self
    }

    /// 0 when verified or all-match, 1 for any other verdict, 2 when no
    /// verdict was reached.
    pub fn exit_code(&self) -> i32 {
        match self.verdict.as_deref() {
            None => 2,
            Some("Verified" | "Equivalent" | "AllMatch" | "Clean") => 0,
            Some(_) => 1,
        }
    }
}

pub fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report values serialize")
}

pub fn relative_to(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
