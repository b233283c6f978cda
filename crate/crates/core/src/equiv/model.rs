use std::collections::BTreeSet;
use std::fmt;

use claimcheck_datalog::{Fact, Value};
use serde::Serialize;

use crate::facts::{fact, num, sym, Loc, Side, VarSite};

/// `controldep(x, f1, l1, cond, branch, f2, l2)`: the value of `x` at `at`
/// depends on `cond` taking `branch` at `site`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ControlDep {
    pub at: VarSite,
    pub cond: String,
    pub branch: bool,
    pub site: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct UnaryFun {
    pub op: String,
    pub arg: String,
    pub at: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BinaryFun {
    pub op: String,
    pub lhs: String,
    pub rhs: String,
    pub at: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Entry {
    pub fun: String,
    pub at: Loc,
}

/// One end of an entryMap/exitMap. `name` is either a file or a
/// function name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MapEnd {
    pub name: String,
    pub line: u32,
}

impl MapEnd {
    pub fn matches_entry(&self, e: &Entry) -> bool {
        self.line == e.at.line && (self.name == e.at.file || self.name == e.fun)
    }

    pub fn matches_exit(&self, at: &Loc) -> bool {
        self.line == at.line && (self.name == at.file || self.name == "main")
    }
}

/// The equivalence-vocabulary facts of one program.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgramFacts {
    pub uses: BTreeSet<VarSite>,
    pub defs: BTreeSet<VarSite>,
    pub flow: BTreeSet<(VarSite, VarSite)>,
    pub controldep: BTreeSet<ControlDep>,
    pub def_with_expr: BTreeSet<VarSite>,
    pub cond_with_expr: BTreeSet<Loc>,
    pub unary_fun: BTreeSet<UnaryFun>,
    pub binary_fun: BTreeSet<BinaryFun>,
    pub entry: BTreeSet<Entry>,
    pub exit: BTreeSet<Loc>,
    pub is_constant: BTreeSet<String>,
    pub watch_var: BTreeSet<VarSite>,
}

/// The cross-program facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Correspondence {
    pub var_map: BTreeSet<(VarSite, VarSite)>,
    pub entry_map: BTreeSet<(MapEnd, MapEnd)>,
    pub exit_map: BTreeSet<(MapEnd, MapEnd)>,
}

/// Facts for two programs plus the correspondence between them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquivBundle {
    pub code1: ProgramFacts,
    pub code2: ProgramFacts,
    pub correspondence: Correspondence,
}

fn site_fact(p: &str, s: &VarSite) -> Fact {
    fact(p, s.values().to_vec())
}

fn flow_fact(a: &VarSite, b: &VarSite) -> Fact {
    let mut v = a.values().to_vec();
    v.extend(b.values());
    fact("flow", v)
}

fn map_end(e: &MapEnd) -> [Value; 2] {
    [sym(&e.name), num(e.line)]
}

impl ControlDep {
    pub fn to_fact(&self) -> Fact {
        let mut v = self.at.values().to_vec();
        v.extend([
            sym(&self.cond),
            sym(if self.branch { "true" } else { "false" }),
            sym(&self.site.file),
            num(self.site.line),
        ]);
        fact("controldep", v)
    }
}

impl UnaryFun {
    pub fn to_fact(&self) -> Fact {
        fact(
            "unaryFun",
            vec![sym(&self.op), sym(&self.arg), sym(&self.at.file), num(self.at.line)],
        )
    }
}

impl BinaryFun {
    pub fn to_fact(&self) -> Fact {
        fact(
            "binaryFun",
            vec![
                sym(&self.op),
                sym(&self.lhs),
                sym(&self.rhs),
                sym(&self.at.file),
                num(self.at.line),
            ],
        )
    }
}


pub(crate) fn render(p: &str, s: &VarSite) -> String {
    site_fact(p, s).to_string()
}

pub(crate) fn render_flow(a: &VarSite, b: &VarSite) -> String {
    flow_fact(a, b).to_string()
}

pub(crate) fn render_loc(p: &str, at: &Loc) -> String {
    fact(p, vec![sym(&at.file), num(at.line)]).to_string()
}

impl ProgramFacts {
    pub fn len(&self) -> usize {
        self.uses.len()
            + self.defs.len()
            + self.flow.len()
            + self.controldep.len()
            + self.def_with_expr.len()
            + self.cond_with_expr.len()
            + self.unary_fun.len()
            + self.binary_fun.len()
            + self.entry.len()
            + self.exit.len()
            + self.is_constant.len()
            + self.watch_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The facts in canonical full-arity form without program tags.
    pub fn facts(&self) -> Vec<Fact> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(
            self.entry
                .iter()
                .map(|e| fact("entry", vec![sym(&e.fun), sym(&e.at.file), num(e.at.line)])),
        );
        out.extend(self.is_constant.iter().map(|c| fact("isConstantValue", vec![sym(c)])));
        out.extend(self.defs.iter().map(|s| site_fact("def", s)));
        out.extend(self.uses.iter().map(|s| site_fact("use", s)));
        out.extend(self.flow.iter().map(|(a, b)| flow_fact(a, b)));
        out.extend(self.controldep.iter().map(ControlDep::to_fact));
        out.extend(self.def_with_expr.iter().map(|s| site_fact("defWithExpr", s)));
        out.extend(
            self.cond_with_expr
                .iter()
                .map(|l| fact("condWithExpr", vec![sym(&l.file), num(l.line)])),
        );
        out.extend(self.unary_fun.iter().map(UnaryFun::to_fact));
        out.extend(self.binary_fun.iter().map(BinaryFun::to_fact));
        out.extend(
            self.exit
                .iter()
                .map(|l| fact("exit", vec![sym(&l.file), num(l.line)])),
        );
        out.extend(self.watch_var.iter().map(|s| site_fact("watchVar", s)));
        out
    }

    pub fn extend(&mut self, other: &ProgramFacts) {
        self.uses.extend(other.uses.iter().cloned());
        self.defs.extend(other.defs.iter().cloned());
        self.flow.extend(other.flow.iter().cloned());
        self.controldep.extend(other.controldep.iter().cloned());
        self.def_with_expr.extend(other.def_with_expr.iter().cloned());
        self.cond_with_expr.extend(other.cond_with_expr.iter().cloned());
        self.unary_fun.extend(other.unary_fun.iter().cloned());
        self.binary_fun.extend(other.binary_fun.iter().cloned());
        self.entry.extend(other.entry.iter().cloned());
        self.exit.extend(other.exit.iter().cloned());
        self.is_constant.extend(other.is_constant.iter().cloned());
        self.watch_var.extend(other.watch_var.iter().cloned());
    }

    /// Variable names mentioned anywhere on this side.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for s in self
            .defs
            .iter()
            .chain(&self.uses)
            .chain(&self.def_with_expr)
            .chain(&self.watch_var)
        {
            out.insert(s.var.as_str());
        }
        for (a, b) in &self.flow {
            out.insert(a.var.as_str());
            out.insert(b.var.as_str());
        }
        for c in &self.controldep {
            out.insert(c.at.var.as_str());
        }
        for u in &self.unary_fun {
            out.insert(u.arg.as_str());
        }
        for b in &self.binary_fun {
            out.insert(b.lhs.as_str());
            out.insert(b.rhs.as_str());
        }
        out.extend(self.is_constant.iter().map(String::as_str));
        out
    }

    /// Every location any fact on this side mentions.
    pub fn locations(&self) -> BTreeSet<Loc> {
        let mut out = BTreeSet::new();
        for s in self
            .defs
            .iter()
            .chain(&self.uses)
            .chain(&self.def_with_expr)
            .chain(&self.watch_var)
        {
            out.insert(s.loc());
        }
        for (a, b) in &self.flow {
            out.insert(a.loc());
            out.insert(b.loc());
        }
        for c in &self.controldep {
            out.insert(c.at.loc());
            out.insert(c.site.clone());
        }
        out.extend(self.cond_with_expr.iter().cloned());
        out.extend(self.unary_fun.iter().map(|u| u.at.clone()));
        out.extend(self.binary_fun.iter().map(|b| b.at.clone()));
        out.extend(self.entry.iter().map(|e| e.at.clone()));
        out.extend(self.exit.iter().cloned());
        out
    }
}

impl Correspondence {
    pub fn len(&self) -> usize {
        self.var_map.len() + self.entry_map.len() + self.exit_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn facts(&self) -> Vec<Fact> {
        let mut out = Vec::with_capacity(self.len());
        for (a, b) in &self.var_map {
            let mut v = a.values().to_vec();
            v.extend(b.values());
            out.push(fact("varMap", v));
        }
        for (p, set) in [("entryMap", &self.entry_map), ("exitMap", &self.exit_map)] {
            for (a, b) in set {
                let mut v = map_end(a).to_vec();
                v.extend(map_end(b));
                out.push(fact(p, v));
            }
        }
        out
    }
}

impl EquivBundle {
    pub fn side(&self, s: Side) -> &ProgramFacts {
        match s {
            Side::Code1 => &self.code1,
            Side::Code2 => &self.code2,
        }
    }

    pub fn side_mut(&mut self, s: Side) -> &mut ProgramFacts {
        match s {
            Side::Code1 => &mut self.code1,
            Side::Code2 => &mut self.code2,
        }
    }

    /// Exchanges the two programs, flipping every correspondence fact.
    pub fn swapped(&self) -> EquivBundle {
        let flip = |set: &BTreeSet<(MapEnd, MapEnd)>| set.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        EquivBundle {
            code1: self.code2.clone(),
            code2: self.code1.clone(),
            correspondence: Correspondence {
                var_map: self
                    .correspondence
                    .var_map
                    .iter()
                    .map(|(a, b)| (b.clone(), a.clone()))
                    .collect(),
                entry_map: flip(&self.correspondence.entry_map),
                exit_map: flip(&self.correspondence.exit_map),
            },
        }
    }

    pub fn extend(&mut self, other: &EquivBundle) {
        self.code1.extend(&other.code1);
        self.code2.extend(&other.code2);
        let c = &mut self.correspondence;
        c.var_map.extend(other.correspondence.var_map.iter().cloned());
        c.entry_map.extend(other.correspondence.entry_map.iter().cloned());
        c.exit_map.extend(other.correspondence.exit_map.iter().cloned());
    }
}

impl fmt::Display for EquivBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (marker, facts) in [
            ("=== code1 ===", self.code1.facts()),
            ("=== code2 ===", self.code2.facts()),
            ("=== correspondence ===", self.correspondence.facts()),
        ] {
            writeln!(f, "{marker}")?;
            for fact in facts {
                writeln!(f, "{fact}.")?;
            }
        }
        Ok(())
    }
}
