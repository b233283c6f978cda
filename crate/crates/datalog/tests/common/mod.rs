#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use claimcheck_datalog::{Atom, CmpOp, Declaration, Fact, Literal, Program, Rule, Sort, Term, Value};
use rand::seq::SliceRandom;
use rand::Rng;

pub struct Shape {
    pub negation: bool,
}

/// Random program over numbers 0..4. Relations r0 and r1 hold facts only;
/// r2.. are derived. Negation, when enabled, only targets r0/r1 so every
/// generated program is stratified.
pub fn random_program(rng: &mut impl Rng, shape: &Shape) -> Program {
    let nrel = rng.gen_range(2..=5);
    let arities: Vec<usize> = (0..nrel).map(|_| rng.gen_range(1..=3)).collect();
    let decls: Vec<(String, Declaration)> = arities
        .iter()
        .enumerate()
        .map(|(i, a)| (format!("r{i}"), Declaration::from_sorts(&vec![Sort::Number; *a])))
        .collect();
    let mut facts = Vec::new();
    for _ in 0..rng.gen_range(0..=30) {
        let r = rng.gen_range(0..nrel.min(2));
        facts.push(Fact::new(
            format!("r{r}"),
            (0..arities[r]).map(|_| Value::Int(rng.gen_range(0..4))).collect(),
        ));
    }
    let mut rules = Vec::new();
    if nrel > 2 {
        for _ in 0..rng.gen_range(0..=8) {
            rules.push(random_rule(rng, &arities, shape));
        }
    }
    Program::build(decls, rules, facts).expect("generated program is valid")
}

fn random_rule(rng: &mut impl Rng, arities: &[usize], shape: &Shape) -> Rule {
    let vars = ["x", "y", "z", "w"];
    let head_rel = rng.gen_range(2..arities.len());
    let mut body = Vec::new();
    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let term = |rng: &mut dyn rand::RngCore, bound: &mut BTreeSet<&'static str>| -> Term {
        match rng.gen_range(0..10) {
            0 => Term::int(rng.gen_range(0..4)),
            1 => Term::Wildcard,
            _ => {
                let v = *vars.choose(rng).unwrap();
                bound.insert(v);
                Term::var(v)
            }
        }
    };
    for _ in 0..rng.gen_range(1..=3) {
        let r = rng.gen_range(0..arities.len());
        let args = (0..arities[r]).map(|_| term(rng, &mut bound)).collect();
        body.push(Literal::Pos(Atom::new(format!("r{r}"), args)));
    }
    let bound: Vec<&str> = bound.into_iter().collect();
    let pick = |rng: &mut dyn rand::RngCore| -> Term {
        if bound.is_empty() || rng.gen_bool(0.2) {
            Term::int(rng.gen_range(0..4))
        } else {
            Term::var(*bound.choose(rng).unwrap())
        }
    };
    if rng.gen_bool(0.3) {
        let ops = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Ge];
        body.push(Literal::Cmp(pick(rng), *ops.choose(rng).unwrap(), pick(rng)));
    }
    if shape.negation && rng.gen_bool(0.4) {
        let r = rng.gen_range(0..2);
        let args = (0..arities[r])
            .map(|_| if rng.gen_bool(0.2) { Term::Wildcard } else { pick(rng) })
            .collect();
        body.push(Literal::Neg(Atom::new(format!("r{r}"), args)));
    }
    let head = Atom::new(
        format!("r{head_rel}"),
        (0..arities[head_rel]).map(|_| pick(rng)).collect(),
    );
    Rule::new(head, body)
}

type Env = HashMap<String, Value>;

fn unify(args: &[Term], tuple: &[Value], env: &Env) -> Option<Env> {
    let mut env = env.clone();
    for (t, v) in args.iter().zip(tuple) {
        match t {
            Term::Const(c) if c != v => return None,
            Term::Var(x) => match env.get(x) {
                Some(b) if b != v => return None,
                Some(_) => {}
                None => {
                    env.insert(x.clone(), v.clone());
                }
            },
            _ => {}
        }
    }
    Some(env)
}

fn resolve(t: &Term, env: &Env) -> Option<Value> {
    match t {
        Term::Const(c) => Some(c.clone()),
        Term::Var(x) => env.get(x).cloned(),
        Term::Wildcard => None,
    }
}

/// Naive fixpoint: apply every rule to the whole fact set until nothing
/// changes. Negated atoms are matched against the current set, which is
/// exact when they only mention relations without rules.
pub fn naive(program: &Program) -> BTreeSet<Fact> {
    let mut facts: BTreeSet<Fact> = program.facts.clone();
    loop {
        let mut next = facts.clone();
        for rule in &program.rules {
            let mut envs = vec![Env::new()];
            for lit in &rule.body {
                if let Literal::Pos(a) = lit {
                    envs = envs
                        .iter()
                        .flat_map(|e| {
                            facts
                                .iter()
                                .filter(|f| f.predicate == a.predicate)
                                .filter_map(|f| unify(&a.args, &f.values, e))
                                .collect::<Vec<_>>()
                        })
                        .collect();
                }
            }
            for e in envs {
                let ok = rule.body.iter().all(|lit| match lit {
                    Literal::Pos(_) => true,
                    Literal::Cmp(l, op, r) => {
                        let (l, r) = (resolve(l, &e).unwrap(), resolve(r, &e).unwrap());
                        op.holds(l.as_int().unwrap(), r.as_int().unwrap())
                    }
                    Literal::Neg(a) => !facts
                        .iter()
                        .any(|f| f.predicate == a.predicate && unify(&a.args, &f.values, &e).is_some()),
                });
                if ok {
                    let values = rule.head.args.iter().map(|t| resolve(t, &e).unwrap()).collect();
                    next.insert(Fact::new(rule.head.predicate.clone(), values));
                }
            }
        }
        if next == facts {
            return facts;
        }
        facts = next;
    }
}
