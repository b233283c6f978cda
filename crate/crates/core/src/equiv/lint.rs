use crate::equiv::model::{render, render_loc, EquivBundle, ProgramFacts};
use crate::equiv::pairing::{build_pairing, PairingError};
use crate::facts::{Loc, Side, VarSite};
use crate::lint::LintReport;

fn has_inbound_flow(pf: &ProgramFacts, at: &VarSite) -> bool {
    pf.flow.iter().any(|(_, d)| d == at)
}

/// Sufficiency obligations on a bundle. Any error makes the equivalence
/// verdict Inconclusive.
pub fn lint_equiv(b: &EquivBundle) -> LintReport {
    let mut r = LintReport::default();
    for s in Side::BOTH {
        lint_side(b, s, &mut r);
    }
    if let Err(PairingError::ConflictingVarMap(x)) = build_pairing(b) {
        r.error(
            "conflicting-varmap",
            None,
            format!("varMap(\"{x}\", ...)"),
            format!("varMap pairs `{x}` with more than one variable"),
        );
    }
    r.finish()
}

fn lint_side(b: &EquivBundle, s: Side, r: &mut LintReport) {
    let pf = b.side(s);
    let other = b.side(s.other());
    let corr = &b.correspondence;
    let side = Some(s);
    if pf.entry.is_empty() {
        r.error("missing-entry", side, String::new(), "no entry fact".into());
    }
    if pf.exit.is_empty() {
        r.error("missing-exit", side, String::new(), "no exit fact".into());
    }
    let entry_locs: Vec<&Loc> = pf.entry.iter().map(|e| &e.at).collect();
    for d in &pf.defs {
        if d.line == 0 || entry_locs.iter().any(|l| l.file == d.file && l.line == d.line) {
            continue;
        }
        if !has_inbound_flow(pf, d) && !pf.def_with_expr.contains(d) {
            r.error(
                "def-without-source",
                side,
                render("def", d),
                format!("no flow into `{}` at {} and no defWithExpr there", d.var, d.loc()),
            );
        }
    }
    let has_fun = |at: &Loc| pf.unary_fun.iter().any(|u| &u.at == at) || pf.binary_fun.iter().any(|f| &f.at == at);
    for d in &pf.def_with_expr {
        if !has_fun(&d.loc()) {
            r.error(
                "expr-without-fun",
                side,
                render("defWithExpr", d),
                format!("no unaryFun/binaryFun at {}", d.loc()),
            );
        }
    }
    for l in &pf.cond_with_expr {
        if !has_fun(l) {
            r.error(
                "expr-without-fun",
                side,
                render_loc("condWithExpr", l),
                format!("no unaryFun/binaryFun at {l}"),
            );
        }
    }
    for u in &pf.uses {
        let constant_at_zero = pf.defs.iter().any(|d| d.var == u.var && d.line == 0);
        if !has_inbound_flow(pf, u) && !constant_at_zero {
            r.error(
                "use-without-flow",
                side,
                render("use", u),
                format!("no flow reaches the use of `{}` at {}", u.var, u.loc()),
            );
        }
    }
    for w in &pf.watch_var {
        if !pf.exit.contains(&w.loc()) {
            r.error(
                "watchvar-not-at-exit",
                side,
                render("watchVar", w),
                format!("{} is not an exit", w.loc()),
            );
        } else if !pf.uses.contains(w) || !has_inbound_flow(pf, w) {
            r.error(
                "watchvar-without-flow",
                side,
                render("watchVar", w),
                format!("`{}` needs a use and an inbound flow at {}", w.var, w.loc()),
            );
        }
    }
    if pf.watch_var.is_empty() && pf.uses.iter().any(|u| pf.exit.contains(&u.loc())) {
        r.error(
            "missing-watchvar",
            side,
            String::new(),
            "variables are used at an exit but none is a watchVar".into(),
        );
    }
    let mapped_ends = |m: &std::collections::BTreeSet<(crate::equiv::model::MapEnd, crate::equiv::model::MapEnd)>| {
        m.iter()
            .map(|(a, z)| if s == Side::Code1 { a.clone() } else { z.clone() })
            .collect::<Vec<_>>()
    };
    let exit_ends = mapped_ends(&corr.exit_map);
    for l in &pf.exit {
        let ok = if corr.exit_map.is_empty() {
            other.exit.contains(l)
        } else {
            exit_ends.iter().any(|e| e.matches_exit(l))
        };
        if !ok {
            r.error(
                "unmapped-exit",
                side,
                render_loc("exit", l),
                format!("exit at {l} has no corresponding exit"),
            );
        }
    }
    let entry_ends = mapped_ends(&corr.entry_map);
    for e in &pf.entry {
        let ok = if corr.entry_map.is_empty() {
            other.entry.iter().any(|o| o.at == e.at)
        } else {
            entry_ends.iter().any(|m| m.matches_entry(e))
        };
        if !ok {
            r.error(
                "unmapped-entry",
                side,
                format!("entry(\"{}\", \"{}\", {})", e.fun, e.at.file, e.at.line),
                format!("entry at {} has no corresponding entry", e.at),
            );
        }
    }
}
