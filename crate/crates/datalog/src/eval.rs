//! Semi-naive bottom-up evaluation, queries and derivation trees.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::ast::{Atom, Fact, Literal, Program, Rule, Term, Value};
use crate::check::strata;
use crate::error::{DatalogError, Result};

type Tuple = Vec<Value>;

/// Result of evaluating a [`Program`]: every relation's tuples together with
/// the round in which each tuple was first derived (input facts are round 0).
/// Equality compares tuple sets only.
#[derive(Debug, Clone)]
pub struct Database {
    relations: BTreeMap<String, BTreeMap<Tuple, u32>>,
    rules: Vec<Rule>,
}

impl PartialEq for Database {
    fn eq(&self, other: &Self) -> bool {
        self.relations.len() == other.relations.len()
            && self
                .relations
                .iter()
                .zip(&other.relations)
                .all(|((n1, r1), (n2, r2))| n1 == n2 && r1.keys().eq(r2.keys()))
    }
}

impl Eq for Database {}

/// One substitution returned by [`Database::query`].
pub type Bindings = BTreeMap<String, Value>;

impl Database {
    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    /// Tuples of a relation in lexicographic order.
    pub fn tuples(&self, relation: &str) -> Result<impl Iterator<Item = &[Value]>> {
        let rel = self
            .relations
            .get(relation)
            .ok_or_else(|| DatalogError::UnknownRelation(relation.to_string()))?;
        Ok(rel.keys().map(Vec::as_slice))
    }

    pub fn len(&self, relation: &str) -> usize {
        self.relations.get(relation).map_or(0, BTreeMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.relations.values().all(BTreeMap::is_empty)
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.relations
            .get(&fact.predicate)
            .is_some_and(|r| r.contains_key(&fact.values))
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.relations
            .iter()
            .flat_map(|(n, r)| r.keys().map(move |t| Fact::new(n.clone(), t.clone())))
    }

    /// Whether any tuple matches `pattern`.
    pub fn holds(&self, pattern: &Atom) -> Result<bool> {
        Ok(!self.query(pattern)?.is_empty())
    }

    /// All substitutions of the pattern's variables that match a tuple, in
    /// tuple order. A ground pattern that holds yields one empty substitution.
    pub fn query(&self, pattern: &Atom) -> Result<Vec<Bindings>> {
        let rel = self
            .relations
            .get(&pattern.predicate)
            .ok_or_else(|| DatalogError::UnknownRelation(pattern.predicate.clone()))?;
        let mut out: Vec<Bindings> = Vec::new();
        let mut seen: BTreeSet<Bindings> = BTreeSet::new();
        for tuple in rel.keys() {
            if tuple.len() != pattern.args.len() {
                return Err(DatalogError::ArityMismatch {
                    predicate: pattern.predicate.clone(),
                    expected: tuple.len(),
                    found: pattern.args.len(),
                });
            }
            let mut b = Bindings::new();
            let ok = pattern.args.iter().zip(tuple).all(|(t, v)| match t {
                Term::Const(c) => c == v,
                Term::Wildcard => true,
                Term::Var(x) => match b.get(x) {
                    Some(prev) => prev == v,
                    None => {
                        b.insert(x.clone(), v.clone());
                        true
                    }
                },
            });
            if ok && seen.insert(b.clone()) {
                out.push(b);
            }
        }
        Ok(out)
    }

    /// A derivation tree for `fact`. Each internal node uses only facts
    /// derived in strictly earlier rounds, so the tree is finite.
    pub fn explain(&self, fact: &Fact) -> Result<Derivation> {
        let rank = self
            .relations
            .get(&fact.predicate)
            .and_then(|r| r.get(&fact.values))
            .copied()
            .ok_or_else(|| DatalogError::NotDerivable(fact.to_string()))?;
        if rank == 0 {
            return Ok(Derivation {
                fact: fact.clone(),
                rule: None,
                children: Vec::new(),
            });
        }
        for (ri, rule) in self.rules.iter().enumerate() {
            if rule.head.predicate != fact.predicate {
                continue;
            }
            let compiled = CompiledRule::new(rule);
            let mut slots = vec![None; compiled.vars.len()];
            if !compiled.bind_atom(&compiled.head, &fact.values, &mut slots) {
                continue;
            }
            let view = RankedView { db: self, below: rank };
            let mut found = None;
            compiled.join(&view, None, slots, &mut |s| {
                if found.is_none() {
                    found = Some(s.to_vec());
                }
            });
            if let Some(slots) = found {
                let mut children = Vec::new();
                for a in compiled.positives.iter() {
                    // Wildcard positions take any tuple consistent with the bindings.
                    let tuple = view
                        .scan(&a.predicate)
                        .into_iter()
                        .find(|t| compiled.bind_atom(a, t, &mut slots.clone()))
                        .expect("joined atom has a witness tuple")
                        .clone();
                    children.push(self.explain(&Fact::new(a.predicate.clone(), tuple))?);
                }
                return Ok(Derivation {
                    fact: fact.clone(),
                    rule: Some(ri),
                    children,
                });
            }
        }
        Err(DatalogError::NotDerivable(fact.to_string()))
    }

    /// Rules of the evaluated program, indexed by [`Derivation::rule`].
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }
}

/// Proof of a fact: a leaf for input facts, otherwise the index of the rule
/// applied and a subtree per positive body literal, in body order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub fact: Fact,
    pub rule: Option<usize>,
    pub children: Vec<Derivation>,
}

impl Derivation {
    pub fn leaves(&self) -> Vec<&Fact> {
        if self.children.is_empty() && self.rule.is_none() {
            return vec![&self.fact];
        }
        self.children.iter().flat_map(Derivation::leaves).collect()
    }

    /// Re-checks the tree bottom-up: every leaf is an input fact of
    /// `program` and every internal node is an instance of its rule whose
    /// negated literals and comparisons hold in `db`.
    pub fn replay(&self, program: &Program, db: &Database) -> bool {
        let Some(ri) = self.rule else {
            return program.facts.contains(&self.fact);
        };
        let Some(rule) = program.rules.get(ri) else {
            return false;
        };
        if !self.children.iter().all(|c| c.replay(program, db)) {
            return false;
        }
        let compiled = CompiledRule::new(rule);
        let mut slots = vec![None; compiled.vars.len()];
        if !compiled.bind_atom(&compiled.head, &self.fact.values, &mut slots) {
            return false;
        }
        if compiled.positives.len() != self.children.len() {
            return false;
        }
        for (a, c) in compiled.positives.iter().zip(&self.children) {
            if a.predicate != c.fact.predicate || !compiled.bind_atom(a, &c.fact.values, &mut slots) {
                return false;
            }
        }
        let view = RankedView { db, below: u32::MAX };
        compiled.filters_hold(&view, &slots)
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let how = match self.rule {
            Some(i) => format!("rule {i}"),
            None => "input".to_string(),
        };
        writeln!(f, "{:width$}{}  [{how}]", "", self.fact, width = depth * 2)?;
        for c in &self.children {
            c.write_indented(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

/// Read access to the tuples a join may use.
trait Source {
    fn scan(&self, predicate: &str) -> Vec<&Tuple>;
    fn lookup(&self, predicate: &str, column: usize, value: &Value) -> Vec<&Tuple>;
    fn contains(&self, predicate: &str, tuple: &Tuple) -> bool;
}

/// Facts of a database whose rank is below a bound.
struct RankedView<'a> {
    db: &'a Database,
    below: u32,
}

impl Source for RankedView<'_> {
    fn scan(&self, predicate: &str) -> Vec<&Tuple> {
        self.db
            .relations
            .get(predicate)
            .into_iter()
            .flatten()
            .filter(|(_, r)| **r < self.below)
            .map(|(t, _)| t)
            .collect()
    }

    fn lookup(&self, predicate: &str, column: usize, value: &Value) -> Vec<&Tuple> {
        self.scan(predicate)
            .into_iter()
            .filter(|t| &t[column] == value)
            .collect()
    }

    fn contains(&self, predicate: &str, tuple: &Tuple) -> bool {
        self.db
            .relations
            .get(predicate)
            .and_then(|r| r.get(tuple))
            .is_some_and(|r| *r < self.below)
    }
}

type Index = HashMap<Value, Vec<Tuple>>;

/// Relations as sets plus lazily built single-column hash indexes.
#[derive(Default)]
struct Store {
    sets: HashMap<String, BTreeSet<Tuple>>,
    indexes: std::cell::RefCell<HashMap<(String, usize), Index>>,
}

impl Store {
    fn insert(&mut self, predicate: &str, tuple: Tuple) -> bool {
        let added = self.sets.entry(predicate.to_string()).or_default().insert(tuple.clone());
        if added {
            for ((p, col), idx) in self.indexes.get_mut().iter_mut() {
                if p == predicate {
                    idx.entry(tuple[*col].clone()).or_default().push(tuple.clone());
                }
            }
        }
        added
    }
}

impl Source for Store {
    fn scan(&self, predicate: &str) -> Vec<&Tuple> {
        self.sets.get(predicate).into_iter().flatten().collect()
    }

    fn lookup(&self, predicate: &str, column: usize, value: &Value) -> Vec<&Tuple> {
        let Some(set) = self.sets.get(predicate) else {
            return Vec::new();
        };
        let key = (predicate.to_string(), column);
        let mut indexes = self.indexes.borrow_mut();
        let idx = indexes.entry(key).or_insert_with(|| {
            let mut m: HashMap<Value, Vec<Tuple>> = HashMap::new();
            for t in set {
                m.entry(t[column].clone()).or_default().push(t.clone());
            }
            m
        });
        // Return references into the set so they outlive the borrow.
        idx.get(value)
            .map(|ts| ts.iter().filter_map(|t| set.get(t)).collect())
            .unwrap_or_default()
    }

    fn contains(&self, predicate: &str, tuple: &Tuple) -> bool {
        self.sets.get(predicate).is_some_and(|s| s.contains(tuple))
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Const(usize),
    Var(usize),
    Any,
}

struct CompiledAtom {
    predicate: String,
    args: Vec<Slot>,
}

/// A rule with variables numbered and constants pooled.
struct CompiledRule {
    vars: Vec<String>,
    consts: Vec<Value>,
    head: CompiledAtom,
    positives: Vec<CompiledAtom>,
    negatives: Vec<CompiledAtom>,
    comparisons: Vec<(Slot, crate::ast::CmpOp, Slot)>,
}

impl CompiledRule {
    fn new(rule: &Rule) -> Self {
        let mut vars: Vec<String> = Vec::new();
        let mut consts: Vec<Value> = Vec::new();
        let mut slot = |t: &Term| match t {
            Term::Var(v) => Slot::Var(match vars.iter().position(|x| x == v) {
                Some(i) => i,
                None => {
                    vars.push(v.clone());
                    vars.len() - 1
                }
            }),
            Term::Const(c) => {
                consts.push(c.clone());
                Slot::Const(consts.len() - 1)
            }
            Term::Wildcard => Slot::Any,
        };
        let atom = |a: &Atom, slot: &mut dyn FnMut(&Term) -> Slot| CompiledAtom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(slot).collect(),
        };
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        let mut comparisons = Vec::new();
        for l in &rule.body {
            match l {
                Literal::Pos(a) => positives.push(atom(a, &mut slot)),
                Literal::Neg(a) => negatives.push(atom(a, &mut slot)),
                Literal::Cmp(lhs, op, rhs) => comparisons.push((slot(lhs), *op, slot(rhs))),
            }
        }
        let head = atom(&rule.head, &mut slot);
        CompiledRule {
            vars,
            consts,
            head,
            positives,
            negatives,
            comparisons,
        }
    }

    fn value<'s>(&'s self, s: Slot, slots: &'s [Option<Value>]) -> Option<&'s Value> {
        match s {
            Slot::Const(i) => Some(&self.consts[i]),
            Slot::Var(i) => slots[i].as_ref(),
            Slot::Any => None,
        }
    }

    fn ground(&self, a: &CompiledAtom, slots: &[Option<Value>]) -> Tuple {
        a.args
            .iter()
            .map(|s| self.value(*s, slots).cloned().expect("range-restricted rule"))
            .collect()
    }

    /// Unifies `a` with `tuple`, extending `slots`. On failure `slots` may be
    /// partially extended; callers pass a scratch copy.
    fn bind_atom(&self, a: &CompiledAtom, tuple: &[Value], slots: &mut [Option<Value>]) -> bool {
        if a.args.len() != tuple.len() {
            return false;
        }
        for (s, v) in a.args.iter().zip(tuple) {
            match *s {
                Slot::Const(i) => {
                    if &self.consts[i] != v {
                        return false;
                    }
                }
                Slot::Var(i) => match &slots[i] {
                    Some(b) if b != v => return false,
                    Some(_) => {}
                    None => slots[i] = Some(v.clone()),
                },
                Slot::Any => {}
            }
        }
        true
    }

    /// Checks negations and comparisons under a complete assignment.
    fn filters_hold(&self, src: &dyn Source, slots: &[Option<Value>]) -> bool {
        for (l, op, r) in &self.comparisons {
            if let (Some(a), Some(b)) = (self.value(*l, slots), self.value(*r, slots)) {
                let (Some(a), Some(b)) = (a.as_int(), b.as_int()) else {
                    return false;
                };
                if !op.holds(a, b) {
                    return false;
                }
            }
        }
        for n in &self.negatives {
            let mut complete = true;
            let tuple: Vec<Option<&Value>> = n.args.iter().map(|s| self.value(*s, slots)).collect();
            let wild = n.args.iter().any(|s| matches!(s, Slot::Any));
            if tuple.iter().zip(&n.args).any(|(v, s)| v.is_none() && !matches!(s, Slot::Any)) {
                complete = false;
            }
            if !complete {
                continue;
            }
            if wild {
                let hit = src.scan(&n.predicate).into_iter().any(|t| {
                    t.iter().zip(&tuple).all(|(tv, pv)| pv.is_none_or(|p| p == tv))
                });
                if hit {
                    return false;
                }
            } else {
                let t: Tuple = tuple.into_iter().map(|v| v.cloned().unwrap()).collect();
                if src.contains(&n.predicate, &t) {
                    return false;
                }
            }
        }
        true
    }

    /// Enumerates all satisfying assignments. When `delta` is given as
    /// `(position, tuples)`, the positive atom at that position ranges over
    /// `tuples` instead of `src`.
    fn join(
        &self,
        src: &dyn Source,
        delta: Option<(usize, &[Tuple])>,
        slots: Vec<Option<Value>>,
        emit: &mut dyn FnMut(&[Option<Value>]),
    ) {
        self.join_from(src, delta, 0, slots, emit)
    }

    fn join_from(
        &self,
        src: &dyn Source,
        delta: Option<(usize, &[Tuple])>,
        i: usize,
        slots: Vec<Option<Value>>,
        emit: &mut dyn FnMut(&[Option<Value>]),
    ) {
        if i == self.positives.len() {
            if self.filters_hold(src, &slots) {
                emit(&slots);
            }
            return;
        }
        let a = &self.positives[i];
        let candidates: Vec<&Tuple> = match delta {
            Some((d, tuples)) if d == i => tuples.iter().collect(),
            _ => {
                let bound = a
                    .args
                    .iter()
                    .enumerate()
                    .find_map(|(c, s)| self.value(*s, &slots).map(|v| (c, v.clone())));
                match bound {
                    Some((c, v)) => src.lookup(&a.predicate, c, &v),
                    None => src.scan(&a.predicate),
                }
            }
        };
        for t in candidates {
            let mut next = slots.clone();
            if self.bind_atom(a, t, &mut next) {
                self.join_from(src, delta, i + 1, next, emit);
            }
        }
    }
}

/// Evaluates `program` to its stratified minimal model.
pub fn evaluate(program: &Program) -> Database {
    let layers = strata(program).expect("programs are checked at construction");
    let mut store = Store::default();
    let mut relations: BTreeMap<String, BTreeMap<Tuple, u32>> = program
        .declarations
        .keys()
        .map(|k| (k.clone(), BTreeMap::new()))
        .collect();
    for f in &program.facts {
        store.insert(&f.predicate, f.values.clone());
        relations.get_mut(&f.predicate).expect("declared").insert(f.values.clone(), 0);
    }
    let compiled: Vec<CompiledRule> = program.rules.iter().map(CompiledRule::new).collect();
    let mut round = 0u32;
    for layer in layers {
        let rules: Vec<&CompiledRule> = compiled
            .iter()
            .filter(|r| layer.contains(&r.head.predicate))
            .collect();
        if rules.is_empty() {
            continue;
        }
        // First round: every rule against everything known so far.
        let mut derived: Vec<(String, Tuple)> = Vec::new();
        for r in &rules {
            r.join(&store, None, vec![None; r.vars.len()], &mut |s| {
                derived.push((r.head.predicate.clone(), r.ground(&r.head, s)))
            });
        }
        loop {
            round += 1;
            let mut delta: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
            for (p, t) in derived.drain(..) {
                if store.insert(&p, t.clone()) {
                    relations.get_mut(&p).expect("declared").insert(t.clone(), round);
                    delta.entry(p).or_default().push(t);
                }
            }
            if delta.is_empty() {
                break;
            }
            for r in &rules {
                for (i, a) in r.positives.iter().enumerate() {
                    if let Some(d) = delta.get(&a.predicate) {
                        r.join(&store, Some((i, d)), vec![None; r.vars.len()], &mut |s| {
                            derived.push((r.head.predicate.clone(), r.ground(&r.head, s)))
                        });
                    }
                }
            }
            derived.retain(|(p, t)| !store.contains(p, t));
        }
    }
    Database {
        relations,
        rules: program.rules.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_program;

    #[test]
    fn transitive_closure() {
        let p = parse_program("e(1,2). e(2,3). e(3,4). t(x,y) :- e(x,y). t(x,z) :- t(x,y), e(y,z).").unwrap();
        let db = evaluate(&p);
        assert_eq!(db.len("t"), 6);
        let d = db.explain(&Fact::new("t", vec![1.into(), 4.into()])).unwrap();
        assert!(d.replay(&p, &db));
        assert_eq!(d.leaves().len(), 3);
    }

    #[test]
    fn negation_after_lower_stratum() {
        let p = parse_program("n(1). n(2). n(3). odd(1). odd(3). even(x) :- n(x), !odd(x).").unwrap();
        let db = evaluate(&p);
        assert_eq!(db.tuples("even").unwrap().collect::<Vec<_>>(), vec![&[Value::Int(2)][..]]);
    }

    #[test]
    fn rule_without_positive_literals() {
        let p = parse_program(".decl bad()\nok() :- !bad().").unwrap();
        let db = evaluate(&p);
        assert!(db.holds(&Atom::new("ok", vec![])).unwrap());
    }

    #[test]
    fn negation_with_wildcard() {
        let p = parse_program("a(1). b(1, 5). c(x) :- a(x), !b(x, _). d(x) :- a(x), !b(_, 7).").unwrap();
        let db = evaluate(&p);
        assert_eq!(db.len("c"), 0);
        assert_eq!(db.len("d"), 1);
    }

    #[test]
    fn query_unknown_relation() {
        let db = evaluate(&parse_program("p(1).").unwrap());
        assert!(matches!(
            db.query(&Atom::new("q", vec![])),
            Err(DatalogError::UnknownRelation(_))
        ));
    }

    #[test]
    fn explain_not_derivable() {
        let db = evaluate(&parse_program("p(1).").unwrap());
        assert!(matches!(
            db.explain(&Fact::new("p", vec![2.into()])),
            Err(DatalogError::NotDerivable(_))
        ));
    }
}
