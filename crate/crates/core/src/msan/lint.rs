use crate::lint::LintReport;
use crate::msan::{MsanFactSet, VarSite};

fn site_fact(p: &str, s: &VarSite) -> String {
    format!("{p}(\"{}\", \"{}\", {})", s.var, s.file, s.line)
}

/// Well-formedness checks on a trace.
///
/// A flow must land on a site the trace otherwise mentions for the same
/// variable, and every memoryError must sit on a use.
pub fn lint_msan(fs: &MsanFactSet) -> LintReport {
    let mut report = LintReport::default();
    let known = |s: &VarSite| {
        fs.uses.contains(s)
            || fs.declared.contains(s)
            || fs.allocated.contains(s)
            || fs.uninitialized.contains(s)
    };
    for (a, b) in &fs.flow {
        if !known(b) {
            report.error(
                "flow-unanchored",
                None,
                format!(
                    "flow(\"{}\", \"{}\", {}, \"{}\", \"{}\", {})",
                    a.var, a.file, a.line, b.var, b.file, b.line
                ),
                format!("no uses/declared/allocated/uninitialized fact for {b}"),
            );
        }
    }
    for e in &fs.memory_error {
        if !fs.uses.iter().any(|u| u.file == e.file && u.line == e.line) {
            report.error(
                "error-without-use",
                None,
                format!("memoryError(\"{}\", \"{}\", \"{}\", {})", e.var, e.kind, e.file, e.line),
                format!("no uses fact at {}:{}", e.file, e.line),
            );
        }
    }
    for (p, set) in [
        ("hasInitializer", &fs.has_initializer),
        ("hasMemberInitializer", &fs.has_member_initializer),
    ] {
        for (x, m) in set {
            if let Some(s) = fs.uninitialized.iter().find(|s| &s.var == x) {
                report.warn(
                    "initializer-conflict",
                    None,
                    format!("{p}(\"{x}\", \"{m}\")"),
                    format!("`{x}` is also claimed {}", site_fact("uninitialized", s)),
                );
            }
        }
    }
    report.finish()
}
