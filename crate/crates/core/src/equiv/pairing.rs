use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::equiv::model::{EquivBundle, ProgramFacts};
use crate::facts::{Loc, Side, VarSite};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairingError {
    #[error("varMap pairs `{0}` inconsistently")]
    ConflictingVarMap(String),
}

/// A partial bijection, stored in both directions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bijection<T: Ord> {
    forward: BTreeMap<T, T>,
    backward: BTreeMap<T, T>,
}

impl<T: Ord> Default for Bijection<T> {
    fn default() -> Self {
        Bijection {
            forward: BTreeMap::new(),
            backward: BTreeMap::new(),
        }
    }
}

impl<T: Ord + Clone> Bijection<T> {
    /// Inserts `a ↔ b` unless either endpoint is already taken. Returns
    /// whether the pair is now present.
    pub fn try_pair(&mut self, a: &T, b: &T) -> bool {
        match (self.forward.get(a), self.backward.get(b)) {
            (None, None) => {
                self.forward.insert(a.clone(), b.clone());
                self.backward.insert(b.clone(), a.clone());
                true
            }
            (Some(x), _) => x == b,
            _ => false,
        }
    }

    /// The image of `a` when read from side `s`.
    pub fn get(&self, s: Side, a: &T) -> Option<&T> {
        match s {
            Side::Code1 => self.forward.get(a),
            Side::Code2 => self.backward.get(a),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&T, &T)> {
        self.forward.iter()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

/// The correspondence between the two programs' variables, conditions
/// and locations, plus the facts it cannot translate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SitePairing {
    pub vars: Bijection<String>,
    pub conds: Bijection<String>,
    pub lines: Bijection<Loc>,
    /// Definition sites matched by ordinal per variable pair.
    pub def_sites: Vec<(VarSite, VarSite)>,
    pub entries: Vec<(Loc, Loc)>,
    pub exits: Vec<(Loc, Loc)>,
    /// Facts (rendered) on each side whose image is undefined.
    pub residue_code1: Vec<String>,
    pub residue_code2: Vec<String>,
}

impl SitePairing {
    pub fn var(&self, s: Side, x: &str) -> Option<&str> {
        self.vars.get(s, &x.to_string()).map(String::as_str)
    }

    pub fn cond(&self, s: Side, c: &str) -> Option<&str> {
        self.conds.get(s, &c.to_string()).map(String::as_str)
    }

    pub fn loc(&self, s: Side, l: &Loc) -> Option<&Loc> {
        self.lines.get(s, l)
    }

    pub fn site(&self, s: Side, v: &VarSite) -> Option<VarSite> {
        let x = self.var(s, &v.var)?;
        let l = self.loc(s, &v.loc())?;
        Some(VarSite::new(x, l.file.clone(), l.line))
    }

    pub fn residue(&self, s: Side) -> &[String] {
        match s {
            Side::Code1 => &self.residue_code1,
            Side::Code2 => &self.residue_code2,
        }
    }
}

/// Sites sorted by location, grouped per key.
fn ordinal_sites<K: Ord>(items: impl Iterator<Item = (K, Loc)>) -> BTreeMap<K, Vec<Loc>> {
    let mut m: BTreeMap<K, BTreeSet<Loc>> = BTreeMap::new();
    for (k, l) in items {
        m.entry(k).or_default().insert(l);
    }
    m.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
}

/// Builds the site pairing.
///
/// Variables pair through varMap first and identical names second.
/// Locations pair in this order, never overriding an earlier pair:
/// entries, exits, definition sites by ordinal per variable pair,
/// condition sites by ordinal per condition pair, condWithExpr sites by
/// ordinal, and finally identical locations.
pub fn build_pairing(b: &EquivBundle) -> Result<SitePairing, PairingError> {
    let mut p = SitePairing::default();
    let (c1, c2) = (&b.code1, &b.code2);

    for (x, y) in &b.correspondence.var_map {
        if !p.vars.try_pair(&x.var, &y.var) {
            return Err(PairingError::ConflictingVarMap(x.var.clone()));
        }
    }
    let vars2 = c2.variables();
    for x in c1.variables() {
        if vars2.contains(x) {
            p.vars.try_pair(&x.to_string(), &x.to_string());
        }
    }

    let corr = &b.correspondence;
    let mut entry_pairs = Vec::new();
    if corr.entry_map.is_empty() {
        for e1 in &c1.entry {
            if let Some(e2) = c2.entry.iter().find(|e2| e2.at == e1.at) {
                entry_pairs.push((e1, e2));
            }
        }
    } else {
        for (a, z) in &corr.entry_map {
            let e1 = c1.entry.iter().find(|e| a.matches_entry(e));
            let e2 = c2.entry.iter().find(|e| z.matches_entry(e));
            if let (Some(e1), Some(e2)) = (e1, e2) {
                entry_pairs.push((e1, e2));
            }
        }
    }
    for (e1, e2) in entry_pairs {
        if p.lines.try_pair(&e1.at, &e2.at) {
            p.entries.push((e1.at.clone(), e2.at.clone()));
        }
        p.conds
            .try_pair(&format!("Entry:{}", e1.fun), &format!("Entry:{}", e2.fun));
    }

    let mut exit_pairs = Vec::new();
    if corr.exit_map.is_empty() {
        for l in c1.exit.intersection(&c2.exit) {
            exit_pairs.push((l, l));
        }
    } else {
        for (a, z) in &corr.exit_map {
            let l1 = c1.exit.iter().find(|l| a.matches_exit(l));
            let l2 = c2.exit.iter().find(|l| z.matches_exit(l));
            if let (Some(l1), Some(l2)) = (l1, l2) {
                exit_pairs.push((l1, l2));
            }
        }
    }
    for (l1, l2) in exit_pairs {
        if p.lines.try_pair(l1, l2) {
            p.exits.push((l1.clone(), l2.clone()));
        }
    }

    // Condition texts: variables pair through V, Entry conditions through
    // the entry pairs above, anything else by identical text.
    let conds = |pf: &ProgramFacts| -> BTreeSet<String> {
        pf.controldep.iter().map(|c| c.cond.clone()).collect()
    };
    let (conds1, conds2) = (conds(c1), conds(c2));
    for c in &conds1 {
        if let Some(d) = p.var(Side::Code1, c).map(str::to_string) {
            p.conds.try_pair(c, &d);
        }
    }
    for c in conds1.intersection(&conds2) {
        p.conds.try_pair(c, c);
    }

    let defs1 = ordinal_sites(c1.defs.iter().map(|s| (s.var.as_str(), s.loc())));
    let defs2 = ordinal_sites(c2.defs.iter().map(|s| (s.var.as_str(), s.loc())));
    for (x, y) in p.vars.pairs().map(|(a, b)| (a.clone(), b.clone())).collect::<Vec<_>>() {
        let (Some(d1), Some(d2)) = (defs1.get(x.as_str()), defs2.get(y.as_str())) else {
            continue;
        };
        for (l1, l2) in d1.iter().zip(d2) {
            if p.lines.try_pair(l1, l2) {
                p.def_sites.push((
                    VarSite::new(x.clone(), l1.file.clone(), l1.line),
                    VarSite::new(y.clone(), l2.file.clone(), l2.line),
                ));
            }
        }
    }

    let cs1 = ordinal_sites(c1.controldep.iter().map(|c| (c.cond.as_str(), c.site.clone())));
    let cs2 = ordinal_sites(c2.controldep.iter().map(|c| (c.cond.as_str(), c.site.clone())));
    for (c, d) in p.conds.pairs().map(|(a, b)| (a.clone(), b.clone())).collect::<Vec<_>>() {
        let (Some(s1), Some(s2)) = (cs1.get(c.as_str()), cs2.get(d.as_str())) else {
            continue;
        };
        for (l1, l2) in s1.iter().zip(s2) {
            p.lines.try_pair(l1, l2);
        }
    }

    for (l1, l2) in c1.cond_with_expr.iter().zip(&c2.cond_with_expr) {
        p.lines.try_pair(l1, l2);
    }

    let locs2 = c2.locations();
    for l in c1.locations() {
        if locs2.contains(&l) {
            p.lines.try_pair(&l, &l);
        }
    }

    for s in Side::BOTH {
        let residue = untranslatable(b.side(s), s, &p);
        match s {
            Side::Code1 => p.residue_code1 = residue,
            Side::Code2 => p.residue_code2 = residue,
        }
    }
    Ok(p)
}

/// Rendered facts of side `s` with at least one unpaired variable,
/// condition or location.
fn untranslatable(pf: &ProgramFacts, s: Side, p: &SitePairing) -> Vec<String> {
    use crate::equiv::model::{render, render_flow, render_loc};
    let mut out = Vec::new();
    for (pred, set) in [
        ("def", &pf.defs),
        ("use", &pf.uses),
        ("defWithExpr", &pf.def_with_expr),
        ("watchVar", &pf.watch_var),
    ] {
        for v in set {
            if p.site(s, v).is_none() {
                out.push(render(pred, v));
            }
        }
    }
    for (a, b) in &pf.flow {
        if p.site(s, a).is_none() || p.site(s, b).is_none() {
            out.push(render_flow(a, b));
        }
    }
    for c in &pf.controldep {
        if p.site(s, &c.at).is_none() || p.cond(s, &c.cond).is_none() || p.loc(s, &c.site).is_none() {
            out.push(c.to_fact().to_string());
        }
    }
    for l in &pf.cond_with_expr {
        if p.loc(s, l).is_none() {
            out.push(render_loc("condWithExpr", l));
        }
    }
    for u in &pf.unary_fun {
        if p.var(s, &u.arg).is_none() || p.loc(s, &u.at).is_none() {
            out.push(u.to_fact().to_string());
        }
    }
    for f in &pf.binary_fun {
        if p.var(s, &f.lhs).is_none() || p.var(s, &f.rhs).is_none() || p.loc(s, &f.at).is_none() {
            out.push(f.to_fact().to_string());
        }
    }
    for l in &pf.exit {
        if p.loc(s, l).is_none() {
            out.push(render_loc("exit", l));
        }
    }
    for c in &pf.is_constant {
        if p.var(s, c).is_none() {
            out.push(format!("isConstantValue(\"{c}\")"));
        }
    }
    out.sort();
    out
}
