//! Load-time checks: declarations, arity, sorts, range restriction and
//! stratification.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ast::{Atom, Declaration, Fact, Literal, Program, Rule, Sort, Term};
use crate::error::{DatalogError, Result};
use crate::parser::{parse_clauses, ClauseKind};

/// Parses and checks a program. Undeclared predicates are declared from
/// their uses: constant arguments fix the sort of their column, variables
/// propagate sorts between columns, and anything left open defaults to
/// `symbol`.
pub fn parse_program(source: &str) -> Result<Program> {
    let mut decls: Vec<(String, Declaration)> = Vec::new();
    let mut rules = Vec::new();
    let mut facts = Vec::new();
    for clause in parse_clauses(source)? {
        match clause.kind {
            ClauseKind::Decl(name, d) => decls.push((name, d)),
            ClauseKind::Rule(r) => rules.push(r),
            ClauseKind::Fact(a) => match a.to_fact() {
                Some(f) => facts.push(f),
                None => {
                    return Err(DatalogError::Syntax {
                        line: clause.line,
                        column: clause.column,
                        message: format!("fact `{a}` is not ground"),
                    })
                }
            },
            ClauseKind::Input(_) | ClauseKind::Output(_) => {}
        }
    }
    Program::build(decls, rules, facts)
}

impl Program {
    /// Assembles and checks a program from its parts.
    pub fn build(
        declarations: impl IntoIterator<Item = (String, Declaration)>,
        rules: Vec<Rule>,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Result<Program> {
        let mut decls: BTreeMap<String, Declaration> = BTreeMap::new();
        for (name, d) in declarations {
            if let Some(prev) = decls.get(&name) {
                if prev.sorts().ne(d.sorts()) {
                    return Err(DatalogError::Redeclared(name));
                }
                continue;
            }
            decls.insert(name, d);
        }
        let facts: BTreeSet<Fact> = facts.into_iter().collect();
        infer_declarations(&mut decls, &rules, &facts)?;

        for f in &facts {
            let d = &decls[&f.predicate];
            check_arity(&f.predicate, d, f.values.len())?;
            for (i, (v, s)) in f.values.iter().zip(d.sorts()).enumerate() {
                if v.sort() != s {
                    return Err(DatalogError::SortMismatch {
                        predicate: f.predicate.clone(),
                        position: i,
                        expected: s,
                        found: v.sort(),
                    });
                }
            }
        }
        for r in &rules {
            check_rule(r, &decls)?;
        }
        let program = Program {
            declarations: decls,
            rules,
            facts,
        };
        strata(&program)?;
        Ok(program)
    }
}

fn check_arity(predicate: &str, d: &Declaration, found: usize) -> Result<()> {
    if d.arity() != found {
        return Err(DatalogError::ArityMismatch {
            predicate: predicate.to_string(),
            expected: d.arity(),
            found,
        });
    }
    Ok(())
}

fn rule_atoms(r: &Rule) -> impl Iterator<Item = &Atom> {
    std::iter::once(&r.head).chain(r.body.iter().filter_map(|l| match l {
        Literal::Pos(a) | Literal::Neg(a) => Some(a),
        Literal::Cmp(..) => None,
    }))
}

fn infer_declarations(
    decls: &mut BTreeMap<String, Declaration>,
    rules: &[Rule],
    facts: &BTreeSet<Fact>,
) -> Result<()> {
    // Column sorts for undeclared predicates; `None` while unknown.
    let mut open: BTreeMap<String, Vec<Option<Sort>>> = BTreeMap::new();
    let mut note = |name: &str, arity: usize, decls: &BTreeMap<String, Declaration>| -> Result<()> {
        if let Some(d) = decls.get(name) {
            return check_arity(name, d, arity);
        }
        match open.get(name) {
            Some(cols) => check_arity(name, &Declaration::from_sorts(&vec![Sort::Symbol; cols.len()]), arity),
            None => {
                open.insert(name.to_string(), vec![None; arity]);
                Ok(())
            }
        }
    };
    for f in facts {
        note(&f.predicate, f.values.len(), decls)?;
    }
    for r in rules {
        for a in rule_atoms(r) {
            note(&a.predicate, a.args.len(), decls)?;
        }
    }
    for f in facts {
        if let Some(cols) = open.get_mut(&f.predicate) {
            for (c, v) in cols.iter_mut().zip(&f.values) {
                c.get_or_insert(v.sort());
            }
        }
    }
    loop {
        let mut changed = false;
        for r in rules {
            let mut var_sorts: HashMap<&str, Sort> = HashMap::new();
            for a in rule_atoms(r) {
                for (i, t) in a.args.iter().enumerate() {
                    let known = decls
                        .get(&a.predicate)
                        .map(|d| Some(d.params[i].1))
                        .unwrap_or_else(|| open[&a.predicate][i]);
                    if let (Term::Var(v), Some(s)) = (t, known) {
                        var_sorts.entry(v).or_insert(s);
                    }
                }
            }
            for l in &r.body {
                if let Literal::Cmp(lhs, _, rhs) = l {
                    for t in [lhs, rhs] {
                        if let Term::Var(v) = t {
                            var_sorts.entry(v).or_insert(Sort::Number);
                        }
                    }
                }
            }
            for a in rule_atoms(r) {
                if let Some(cols) = open.get_mut(&a.predicate) {
                    for (c, t) in cols.iter_mut().zip(&a.args) {
                        if c.is_some() {
                            continue;
                        }
                        let s = match t {
                            Term::Const(v) => Some(v.sort()),
                            Term::Var(v) => var_sorts.get(v.as_str()).copied(),
                            Term::Wildcard => None,
                        };
                        if s.is_some() {
                            *c = s;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for (name, cols) in open {
        let sorts: Vec<Sort> = cols.into_iter().map(|c| c.unwrap_or(Sort::Symbol)).collect();
        decls.insert(name, Declaration::from_sorts(&sorts));
    }
    Ok(())
}

fn check_rule(r: &Rule, decls: &BTreeMap<String, Declaration>) -> Result<()> {
    let rule_text = || r.to_string();
    if r.head.args.iter().any(|t| matches!(t, Term::Wildcard)) {
        return Err(DatalogError::WildcardInHead(rule_text()));
    }
    let mut var_sorts: HashMap<&str, Sort> = HashMap::new();
    for a in rule_atoms(r) {
        let d = decls
            .get(&a.predicate)
            .ok_or_else(|| DatalogError::UnknownRelation(a.predicate.clone()))?;
        check_arity(&a.predicate, d, a.args.len())?;
        for (i, (t, s)) in a.args.iter().zip(d.sorts()).enumerate() {
            match t {
                Term::Const(v) if v.sort() != s => {
                    return Err(DatalogError::SortMismatch {
                        predicate: a.predicate.clone(),
                        position: i,
                        expected: s,
                        found: v.sort(),
                    })
                }
                Term::Var(v)
                    if *var_sorts.entry(v).or_insert(s) != s => {
                        return Err(DatalogError::VariableSort {
                            variable: v.clone(),
                            rule: rule_text(),
                        });
                    }
                _ => {}
            }
        }
    }
    let positive: BTreeSet<&str> = r.positive_atoms().flat_map(Atom::variables).collect();
    for l in &r.body {
        if let Literal::Cmp(lhs, _, rhs) = l {
            for t in [lhs, rhs] {
                match t {
                    Term::Const(v) if v.sort() == Sort::Symbol => {
                        return Err(DatalogError::SymbolComparison { rule: rule_text() })
                    }
                    Term::Var(v) if var_sorts.get(v.as_str()) == Some(&Sort::Symbol) => {
                        return Err(DatalogError::SymbolComparison { rule: rule_text() })
                    }
                    Term::Wildcard => {
                        return Err(DatalogError::Syntax {
                            line: 0,
                            column: 0,
                            message: format!("wildcard in comparison in rule `{}`", rule_text()),
                        })
                    }
                    _ => {}
                }
            }
        }
    }
    let needs_binding = r
        .head
        .variables()
        .chain(r.body.iter().flat_map(|l| match l {
            Literal::Pos(_) => Vec::new(),
            other => other.variables(),
        }));
    for v in needs_binding {
        if !positive.contains(v) {
            return Err(DatalogError::RangeRestriction {
                rule: rule_text(),
                variable: v.to_string(),
            });
        }
    }
    Ok(())
}

/// Groups the rules' head predicates into strata in evaluation order. Each
/// stratum is one strongly connected component of the predicate dependency
/// graph; negation inside a component is rejected.
pub(crate) fn strata(program: &Program) -> Result<Vec<BTreeSet<String>>> {
    let preds: Vec<&str> = program.declarations.keys().map(String::as_str).collect();
    let index: HashMap<&str, usize> = preds.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    // edges[body] -> (head, negated)
    let mut edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); preds.len()];
    for r in &program.rules {
        let h = index[r.head.predicate.as_str()];
        for l in &r.body {
            match l {
                Literal::Pos(a) => edges[index[a.predicate.as_str()]].push((h, false)),
                Literal::Neg(a) => edges[index[a.predicate.as_str()]].push((h, true)),
                Literal::Cmp(..) => {}
            }
        }
    }
    let comps = tarjan(&edges);
    let mut comp_of = vec![0usize; preds.len()];
    for (ci, c) in comps.iter().enumerate() {
        for &n in c {
            comp_of[n] = ci;
        }
    }
    for (from, outs) in edges.iter().enumerate() {
        for &(to, neg) in outs {
            if neg && comp_of[from] == comp_of[to] {
                let cycle: Vec<&str> = comps[comp_of[from]].iter().map(|&n| preds[n]).collect();
                return Err(DatalogError::UnstratifiableNegation(format!(
                    "`{}` negates `{}` within the cycle {{{}}}",
                    preds[to],
                    preds[from],
                    cycle.join(", ")
                )));
            }
        }
    }
    // Tarjan yields components in reverse topological order.
    Ok(comps
        .into_iter()
        .rev()
        .map(|c| c.into_iter().map(|n| preds[n].to_string()).collect())
        .collect())
}

fn tarjan(edges: &[Vec<(usize, bool)>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        edges: &'a [Vec<(usize, bool)>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut State, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for &(w, _) in &s.edges[v] {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().expect("tarjan stack underflow");
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }
    let n = edges.len();
    let mut s = State {
        edges,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}
