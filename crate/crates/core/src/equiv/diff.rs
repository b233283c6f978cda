use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use claimcheck_datalog::Value;
use serde::Serialize;

use crate::equiv::model::{render, render_flow, render_loc, BinaryFun, EquivBundle, ProgramFacts, UnaryFun};
use crate::equiv::pairing::SitePairing;
use crate::facts::{Loc, Side, VarSite};

/// What kind of structural difference a mismatch records. The order of
/// the variants is the order in which witnesses are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    Controldep,
    Expression,
    Constant,
    Dataflow,
    Watchvar,
    Reachingdefs,
}

impl MismatchKind {
    pub const ALL: [MismatchKind; 6] = [
        MismatchKind::Controldep,
        MismatchKind::Expression,
        MismatchKind::Constant,
        MismatchKind::Dataflow,
        MismatchKind::Watchvar,
        MismatchKind::Reachingdefs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MismatchKind::Controldep => "controldep",
            MismatchKind::Expression => "expression",
            MismatchKind::Constant => "constant",
            MismatchKind::Dataflow => "dataflow",
            MismatchKind::Watchvar => "watchvar",
            MismatchKind::Reachingdefs => "reachingdefs",
        }
    }

    pub fn from_name(s: &str) -> Option<MismatchKind> {
        MismatchKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for MismatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The identifying tuple of a mismatch: a variable/file/line triple and a
/// second one (used by flows), with `""`/`0` in unused slots.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MismatchKey {
    pub kind: MismatchKind,
    pub side: Side,
    pub predicate: String,
    pub a: (String, String, u32),
    pub b: (String, String, u32),
}

impl MismatchKey {
    fn new(kind: MismatchKind, side: Side, predicate: &str, a: (&str, &str, u32), b: (&str, &str, u32)) -> Self {
        MismatchKey {
            kind,
            side,
            predicate: predicate.to_string(),
            a: (a.0.to_string(), a.1.to_string(), a.2),
            b: (b.0.to_string(), b.1.to_string(), b.2),
        }
    }

    /// The 9-ary tuple used by the Datalog rule set.
    pub fn values(&self) -> Vec<Value> {
        vec![
            Value::sym(self.kind.name()),
            Value::Int(self.side.number()),
            Value::sym(&self.predicate),
            Value::sym(&self.a.0),
            Value::sym(&self.a.1),
            Value::Int(i64::from(self.a.2)),
            Value::sym(&self.b.0),
            Value::sym(&self.b.1),
            Value::Int(i64::from(self.b.2)),
        ]
    }

    /// The location the mismatch is reported at. Flows report at their
    /// destination.
    pub fn site(&self) -> (&str, u32) {
        if self.predicate == "flow" {
            (&self.b.1, self.b.2)
        } else {
            (&self.a.1, self.a.2)
        }
    }
}

/// One structural difference between the two programs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub key: MismatchKey,
    /// The offending facts on `key.side`.
    pub facts: Vec<String>,
    /// What the pairing maps them to on the other side (present facts only).
    pub counterpart: Vec<String>,
    pub message: String,
}

impl Mismatch {
    pub fn kind(&self) -> MismatchKind {
        self.key.kind
    }

    pub fn side(&self) -> Side {
        self.key.side
    }
}

impl Ord for Mismatch {
    fn cmp(&self, other: &Self) -> Ordering {
        let k = |m: &Mismatch| {
            let (f, l) = m.key.site();
            (m.key.kind, f.to_string(), l, m.key.predicate.clone(), m.key.side, m.key.a.clone(), m.key.b.clone())
        };
        k(self).cmp(&k(other)).then_with(|| self.facts.cmp(&other.facts))
    }
}

impl PartialOrd for Mismatch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mismatch in {}: {}", self.key.kind, self.key.side, self.message)
    }
}

/// Translation helpers from side `s` to the other side.
struct View<'a> {
    s: Side,
    p: &'a SitePairing,
    mine: &'a ProgramFacts,
    theirs: &'a ProgramFacts,
}

impl View<'_> {
    fn site(&self, v: &VarSite) -> Option<VarSite> {
        self.p.site(self.s, v)
    }

    fn loc(&self, l: &Loc) -> Option<Loc> {
        self.p.loc(self.s, l).cloned()
    }

    fn var(&self, x: &str) -> Option<String> {
        self.p.var(self.s, x).map(str::to_string)
    }

    fn flow(&self, a: &VarSite, b: &VarSite) -> Option<(VarSite, VarSite)> {
        Some((self.site(a)?, self.site(b)?))
    }

    fn unary(&self, u: &UnaryFun) -> Option<UnaryFun> {
        Some(UnaryFun {
            op: u.op.clone(),
            arg: self.var(&u.arg)?,
            at: self.loc(&u.at)?,
        })
    }

    fn binary(&self, b: &BinaryFun) -> Option<BinaryFun> {
        Some(BinaryFun {
            op: b.op.clone(),
            lhs: self.var(&b.lhs)?,
            rhs: self.var(&b.rhs)?,
            at: self.loc(&b.at)?,
        })
    }

    /// Whether every expression fact of `mine` at `at` has its image.
    fn exprs_bad(&self, at: &Loc) -> bool {
        self.mine
            .unary_fun
            .iter()
            .filter(|u| &u.at == at)
            .any(|u| self.unary(u).is_none_or(|i| !self.theirs.unary_fun.contains(&i)))
            || self
                .mine
                .binary_fun
                .iter()
                .filter(|b| &b.at == at)
                .any(|b| self.binary(b).is_none_or(|i| !self.theirs.binary_fun.contains(&i)))
    }

    fn cd_bad(&self, groups: &BTreeMap<&VarSite, Vec<&crate::equiv::model::ControlDep>>, at: &VarSite) -> bool {
        groups.get(at).is_some_and(|g| {
            g.iter().any(|c| {
                let img = (|| {
                    Some(crate::equiv::model::ControlDep {
                        at: self.site(&c.at)?,
                        cond: self.p.cond(self.s, &c.cond)?.to_string(),
                        branch: c.branch,
                        site: self.loc(&c.site)?,
                    })
                })();
                img.is_none_or(|i| !self.theirs.controldep.contains(&i))
            })
        })
    }
}

fn fun_lines(pf: &ProgramFacts) -> BTreeSet<Loc> {
    pf.unary_fun
        .iter()
        .map(|u| u.at.clone())
        .chain(pf.binary_fun.iter().map(|b| b.at.clone()))
        .collect()
}

fn funs_at(pf: &ProgramFacts, at: &Loc) -> Vec<String> {
    pf.unary_fun
        .iter()
        .filter(|u| &u.at == at)
        .map(|u| u.to_fact().to_string())
        .chain(pf.binary_fun.iter().filter(|b| &b.at == at).map(|b| b.to_fact().to_string()))
        .collect()
}

fn cd_groups(pf: &ProgramFacts) -> BTreeMap<&VarSite, Vec<&crate::equiv::model::ControlDep>> {
    let mut m: BTreeMap<&VarSite, Vec<_>> = BTreeMap::new();
    for c in &pf.controldep {
        m.entry(&c.at).or_default().push(c);
    }
    m
}

fn site_key(v: &VarSite) -> (&str, &str, u32) {
    (&v.var, &v.file, v.line)
}

const NONE: (&str, &str, u32) = ("", "", 0);

/// Structural differences other than watch-variable coverage: dataflow
/// facts without an image, expression groups, control dependences and
/// constants.
pub fn diff_structure(b: &EquivBundle, p: &SitePairing) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for s in Side::BOTH {
        let v = View {
            s,
            p,
            mine: b.side(s),
            theirs: b.side(s.other()),
        };
        dataflow(&v, &mut out);
        constants(&v, &mut out);
    }
    expressions(b, p, &mut out);
    controldeps(b, p, &mut out);
    out.sort();
    out
}

fn dataflow(v: &View, out: &mut Vec<Mismatch>) {
    let s = v.s;
    for (pred, mine, theirs) in [
        ("def", &v.mine.defs, &v.theirs.defs),
        ("use", &v.mine.uses, &v.theirs.uses),
        ("defWithExpr", &v.mine.def_with_expr, &v.theirs.def_with_expr),
    ] {
        for x in mine {
            let img = v.site(x);
            if img.as_ref().is_some_and(|i| theirs.contains(i)) {
                continue;
            }
            out.push(Mismatch {
                key: MismatchKey::new(MismatchKind::Dataflow, s, pred, site_key(x), NONE),
                facts: vec![render(pred, x)],
                counterpart: vec![],
                message: match img {
                    None => format!("{pred} of `{}` at {} has no paired site", x.var, x.loc()),
                    Some(i) => format!("no {} on the other side", render(pred, &i)),
                },
            });
        }
    }
    for (a, bb) in &v.mine.flow {
        let img = v.flow(a, bb);
        if img.as_ref().is_some_and(|i| v.theirs.flow.contains(i)) {
            continue;
        }
        out.push(Mismatch {
            key: MismatchKey::new(MismatchKind::Dataflow, s, "flow", site_key(a), site_key(bb)),
            facts: vec![render_flow(a, bb)],
            counterpart: vec![],
            message: match img {
                None => format!("flow into `{}` at {} has no paired endpoints", bb.var, bb.loc()),
                Some((x, y)) => format!("no {} on the other side", render_flow(&x, &y)),
            },
        });
    }
    for l in &v.mine.cond_with_expr {
        let img = v.loc(l);
        if img.as_ref().is_some_and(|i| v.theirs.cond_with_expr.contains(i)) {
            continue;
        }
        out.push(Mismatch {
            key: MismatchKey::new(MismatchKind::Dataflow, s, "condWithExpr", ("", &l.file, l.line), NONE),
            facts: vec![render_loc("condWithExpr", l)],
            counterpart: vec![],
            message: format!("complex condition at {l} has no counterpart"),
        });
    }
}

fn constants(v: &View, out: &mut Vec<Mismatch>) {
    for c in &v.mine.is_constant {
        let same = v.var(c).as_deref() == Some(c.as_str());
        if same && v.theirs.is_constant.contains(c) {
            continue;
        }
        out.push(Mismatch {
            key: MismatchKey::new(MismatchKind::Constant, v.s, "isConstantValue", (c, "", 0), NONE),
            facts: vec![format!("isConstantValue(\"{c}\")")],
            counterpart: vec![],
            message: format!("constant `{c}` is not a constant of the same text on the other side"),
        });
    }
}

fn expressions(b: &EquivBundle, p: &SitePairing, out: &mut Vec<Mismatch>) {
    let v1 = View {
        s: Side::Code1,
        p,
        mine: &b.code1,
        theirs: &b.code2,
    };
    let v2 = View {
        s: Side::Code2,
        p,
        mine: &b.code2,
        theirs: &b.code1,
    };
    let lines1 = fun_lines(&b.code1);
    for l in &lines1 {
        let img = v1.loc(l);
        let bad = v1.exprs_bad(l) || img.as_ref().is_some_and(|i| v2.exprs_bad(i));
        if !bad {
            continue;
        }
        let counterpart = img.as_ref().map(|i| funs_at(&b.code2, i)).unwrap_or_default();
        let ours = funs_at(&b.code1, l);
        out.push(Mismatch {
            key: MismatchKey::new(MismatchKind::Expression, Side::Code1, "expr", ("", &l.file, l.line), NONE),
            message: match &img {
                None => format!("expression at {l} has no paired line"),
                Some(i) => format!("expressions at {l} [{}] differ from those at {i} [{}]", ours.join(", "), counterpart.join(", ")),
            },
            facts: ours,
            counterpart,
        });
    }
    for l in fun_lines(&b.code2) {
        if !v2.exprs_bad(&l) {
            continue;
        }
        let covered = v2.loc(&l).is_some_and(|pre| lines1.contains(&pre));
        if covered {
            continue;
        }
        out.push(Mismatch {
            key: MismatchKey::new(MismatchKind::Expression, Side::Code2, "expr", ("", &l.file, l.line), NONE),
            facts: funs_at(&b.code2, &l),
            counterpart: vec![],
            message: format!("expression at {l} has no counterpart"),
        });
    }
}

fn controldeps(b: &EquivBundle, p: &SitePairing, out: &mut Vec<Mismatch>) {
    let v1 = View {
        s: Side::Code1,
        p,
        mine: &b.code1,
        theirs: &b.code2,
    };
    let v2 = View {
        s: Side::Code2,
        p,
        mine: &b.code2,
        theirs: &b.code1,
    };
    let g1 = cd_groups(&b.code1);
    let g2 = cd_groups(&b.code2);
    let render_group = |g: &BTreeMap<&VarSite, Vec<&crate::equiv::model::ControlDep>>, at: &VarSite| {
        g.get(at)
            .map(|cs| cs.iter().map(|c| c.to_fact().to_string()).collect())
            .unwrap_or_default()
    };
    for at in g1.keys() {
        let img = v1.site(at);
        let bad = v1.cd_bad(&g1, at) || img.as_ref().is_some_and(|i| v2.cd_bad(&g2, i));
        if !bad {
            continue;
        }
        let counterpart: Vec<String> = img.as_ref().map(|i| render_group(&g2, i)).unwrap_or_default();
        out.push(Mismatch {
            key: MismatchKey::new(MismatchKind::Controldep, Side::Code1, "controldep", site_key(at), NONE),
            facts: render_group(&g1, at),
            message: match &img {
                None => format!("control dependences of `{}` at {} have no paired site", at.var, at.loc()),
                Some(i) if counterpart.is_empty() => {
                    format!("`{}` at {} is control dependent but `{}` at {} is not", at.var, at.loc(), i.var, i.loc())
                }
                Some(i) => format!(
                    "control dependences of `{}` at {} differ from those of `{}` at {}",
                    at.var,
                    at.loc(),
                    i.var,
                    i.loc()
                ),
            },
            counterpart,
        });
    }
    for at in g2.keys() {
        if !v2.cd_bad(&g2, at) {
            continue;
        }
        let covered = v2.site(at).is_some_and(|pre| g1.contains_key(&pre));
        if covered {
            continue;
        }
        out.push(Mismatch {
            key: MismatchKey::new(MismatchKind::Controldep, Side::Code2, "controldep", site_key(at), NONE),
            facts: render_group(&g2, at),
            counterpart: vec![],
            message: format!("control dependences of `{}` at {} have no counterpart", at.var, at.loc()),
        });
    }
}

/// Watch-variable coverage in both directions, and for each matched pair
/// the reaching definitions at the exit.
pub fn check_watchvars(b: &EquivBundle, p: &SitePairing) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for s in Side::BOTH {
        let v = View {
            s,
            p,
            mine: b.side(s),
            theirs: b.side(s.other()),
        };
        for w in &v.mine.watch_var {
            let img = v.site(w).filter(|i| v.theirs.watch_var.contains(i));
            let Some(img) = img else {
                out.push(Mismatch {
                    key: MismatchKey::new(MismatchKind::Watchvar, s, "watchVar", site_key(w), NONE),
                    facts: vec![render("watchVar", w)],
                    counterpart: vec![],
                    message: format!("watched `{}` at {} has no paired watchVar", w.var, w.loc()),
                });
                continue;
            };
            for (a, dst) in v.mine.flow.iter().filter(|(_, d)| d == w) {
                if v.flow(a, dst).is_some_and(|f| v.theirs.flow.contains(&f)) {
                    continue;
                }
                out.push(Mismatch {
                    key: MismatchKey::new(MismatchKind::Reachingdefs, s, "flow", site_key(a), site_key(dst)),
                    facts: vec![render_flow(a, dst)],
                    counterpart: v
                        .theirs
                        .flow
                        .iter()
                        .filter(|(_, d)| *d == img)
                        .map(|(x, y)| render_flow(x, y))
                        .collect(),
                    message: format!(
                        "definition of `{}` at {} reaching the exit has no counterpart reaching `{}` at {}",
                        a.var,
                        a.loc(),
                        img.var,
                        img.loc()
                    ),
                });
            }
        }
    }
    out.sort();
    out
}
