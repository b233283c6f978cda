use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use super::ast::{Expr, Stmt, ToyProgram};

pub const UNARY_OPS: &[&str] = &["foo", "bar", "!", "-"];
pub const BINARY_OPS: &[&str] = &["+", "-", "*", "==", "<", "min"];

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_inputs: usize,
    pub max_stmts: usize,
    pub max_depth: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_inputs: 3,
            max_stmts: 8,
            max_depth: 2,
        }
    }
}

fn op_expr(op: &str, args: Vec<Expr>) -> Expr {
    if op.chars().all(|c| c.is_ascii_alphabetic()) {
        Expr::call(op, args)
    } else {
        Expr::operator(op, args)
    }
}

struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    next_var: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn atom(&mut self, scope: &[String]) -> Expr {
        if scope.is_empty() || self.rng.gen_bool(0.15) {
            Expr::Lit(self.rng.gen_range(0..3))
        } else {
            Expr::Var(scope.choose(self.rng).expect("nonempty").clone())
        }
    }

    fn rhs(&mut self, scope: &[String]) -> Expr {
        match self.rng.gen_range(0..10) {
            0 => Expr::Lit(self.rng.gen_range(0..3)),
            1 => self.atom(scope),
            2..=4 => {
                let op = UNARY_OPS.choose(self.rng).expect("ops");
                op_expr(op, vec![self.atom(scope)])
            }
            _ => {
                let op = BINARY_OPS.choose(self.rng).expect("ops");
                op_expr(op, vec![self.atom(scope), self.atom(scope)])
            }
        }
    }

    fn assign(&mut self, scope: &mut Vec<String>, fresh_only: bool) -> Stmt {
        let value = self.rhs(scope);
        let reuse = !fresh_only && !scope.is_empty() && self.rng.gen_bool(0.3);
        let (ty, target) = if reuse {
            (None, scope.choose(self.rng).expect("nonempty").clone())
        } else {
            let name = format!("v{}", self.next_var);
            self.next_var += 1;
            (Some("int".to_string()), name)
        };
        if !scope.contains(&target) {
            scope.push(target.clone());
        }
        Stmt::Assign {
            line: 0,
            ty,
            target,
            value,
        }
    }

    /// Every nested block starts with a definition, so its guard always
    /// matters.
    fn block(&mut self, scope: &mut Vec<String>, depth: usize, len: usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        if depth > 0 {
            out.push(self.assign(scope, false));
        }
        while out.len() < len {
            let roll = self.rng.gen_range(0..10);
            if roll < 2 && depth < self.cfg.max_depth && !scope.is_empty() {
                let var = scope.choose(self.rng).expect("nonempty").clone();
                let negated = self.rng.gen_bool(0.3);
                let inner_len = self.rng.gen_range(1..=3);
                let body = self.block(&mut scope.clone(), depth + 1, inner_len);
                out.push(Stmt::If {
                    line: 0,
                    var,
                    negated,
                    body,
                    end_line: 0,
                });
            } else if roll < 3 && !scope.is_empty() {
                let value = Expr::Var(scope.choose(self.rng).expect("nonempty").clone());
                out.push(Stmt::Output { line: 0, value });
            } else {
                out.push(self.assign(scope, false));
            }
        }
        let ret_prob = if depth == 0 { 0.2 } else { 0.25 };
        if self.rng.gen_bool(ret_prob) {
            out.push(Stmt::Return { line: 0 });
        }
        out
    }
}

/// A random normalized program over inputs `i0..`, with definitions
/// `v0..`, shallow nested guards and occasional returns.
pub fn random_program<R: Rng>(rng: &mut R, cfg: &GenConfig) -> ToyProgram {
    let inputs = rng.gen_range(1..=cfg.max_inputs.max(1));
    let mut scope: Vec<String> = (0..inputs).map(|i| format!("i{i}")).collect();
    let mut stmts = vec![Stmt::Input {
        line: 0,
        vars: scope.clone(),
    }];
    let len = rng.gen_range(2..=cfg.max_stmts.max(2));
    let mut b = Builder {
        rng,
        cfg,
        next_var: 0,
    };
    stmts.extend(b.block(&mut scope, 0, len));
    ToyProgram { stmts, end_line: 0 }.renumbered()
}

/// A random expression tree over `vars`, for normalization checks.
pub fn random_expr<R: Rng>(rng: &mut R, vars: &[String], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.2) || vars.is_empty() {
            Expr::Lit(rng.gen_range(0..3))
        } else {
            Expr::Var(vars.choose(rng).expect("nonempty").clone())
        };
    }
    if rng.gen_bool(0.3) {
        let op = UNARY_OPS.choose(rng).expect("ops");
        op_expr(op, vec![random_expr(rng, vars, depth - 1)])
    } else {
        let op = BINARY_OPS.choose(rng).expect("ops");
        op_expr(op, vec![random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    OperatorSwap,
    OperandSwap,
    GuardFlip,
    Insertion,
    Renaming,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::OperatorSwap,
        Mutation::OperandSwap,
        Mutation::GuardFlip,
        Mutation::Insertion,
        Mutation::Renaming,
    ];
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mutation::OperatorSwap => "operator-swap",
            Mutation::OperandSwap => "operand-swap",
            Mutation::GuardFlip => "guard-flip",
            Mutation::Insertion => "insertion",
            Mutation::Renaming => "renaming",
        })
    }
}

#[derive(Debug, Clone)]
pub struct MutatedPair {
    pub original: ToyProgram,
    pub mutated: ToyProgram,
    pub mutation: Mutation,
    /// Variable correspondence, original name to mutated name.
    pub var_pairs: Vec<(String, String)>,
}

fn paths(stmts: &[Stmt], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for (i, s) in stmts.iter().enumerate() {
        prefix.push(i);
        out.push(prefix.clone());
        if let Stmt::If { body, .. } = s {
            paths(body, prefix, out);
        }
        prefix.pop();
    }
}

fn at_mut<'a>(stmts: &'a mut [Stmt], path: &[usize]) -> &'a mut Stmt {
    let s = &mut stmts[path[0]];
    if path.len() == 1 {
        return s;
    }
    match s {
        Stmt::If { body, .. } => at_mut(body, &path[1..]),
        _ => unreachable!("path descends into a non-block"),
    }
}

fn at<'a>(stmts: &'a [Stmt], path: &[usize]) -> &'a Stmt {
    let s = &stmts[path[0]];
    match (path.len(), s) {
        (1, _) => s,
        (_, Stmt::If { body, .. }) => at(body, &path[1..]),
        _ => unreachable!("path descends into a non-block"),
    }
}

fn other_op<R: Rng>(rng: &mut R, op: &str, arity: usize) -> String {
    let pool = if arity == 1 { UNARY_OPS } else { BINARY_OPS };
    let choices: Vec<&&str> = pool.iter().filter(|o| **o != op).collect();
    choices.choose(rng).expect("alternatives").to_string()
}

/// Applies one mutation of the given kind to a normalized program, or
/// returns `None` when the program offers no site for it. Every mutation
/// except renaming changes what the program computes at some exit or
/// definition.
pub fn mutate<R: Rng>(rng: &mut R, p: &ToyProgram, kind: Mutation) -> Option<MutatedPair> {
    let mut all = Vec::new();
    paths(&p.stmts, &mut Vec::new(), &mut all);
    let pick = |pred: &dyn Fn(&Stmt) -> bool| -> Vec<Vec<usize>> {
        all.iter().filter(|path| pred(at(&p.stmts, path))).cloned().collect()
    };
    let mut q = p.clone();
    let mut var_pairs = Vec::new();
    match kind {
        Mutation::OperatorSwap => {
            let sites = pick(&|s| matches!(s, Stmt::Assign { value: Expr::Op { .. }, .. }));
            let path = sites.choose(rng)?;
            if let Stmt::Assign { value, .. } = at_mut(&mut q.stmts, path) {
                if let Expr::Op { op, args, .. } = value {
                    let new = other_op(rng, op, args.len());
                    *value = op_expr(&new, args.clone());
                }
            }
        }
        Mutation::OperandSwap => {
            let sites = pick(&|s| {
                matches!(s, Stmt::Assign { value: Expr::Op { args, .. }, .. }
                    if args.len() == 2 && args[0] != args[1])
            });
            let path = sites.choose(rng)?;
            if let Stmt::Assign {
                value: Expr::Op { args, .. },
                ..
            } = at_mut(&mut q.stmts, path)
            {
                args.swap(0, 1);
            }
        }
        Mutation::GuardFlip => {
            let sites = pick(&|s| matches!(s, Stmt::If { .. }));
            let path = sites.choose(rng)?;
            if let Stmt::If { negated, .. } = at_mut(&mut q.stmts, path) {
                *negated = !*negated;
            }
        }
        Mutation::Insertion => {
            let inputs = p.free_vars();
            let taken = p.variables();
            let name = (0..)
                .map(|k| format!("w{k}"))
                .find(|n| !taken.contains(n))
                .expect("fresh name");
            let op = BINARY_OPS.choose(rng).expect("ops");
            let arg = |rng: &mut R| match inputs.choose(rng) {
                Some(v) => Expr::Var(v.clone()),
                None => Expr::Lit(rng.gen_range(0..3)),
            };
            let value = op_expr(op, vec![arg(rng), arg(rng)]);
            let first = usize::from(matches!(q.stmts.first(), Some(Stmt::Input { .. })));
            let last = q.stmts.len() - usize::from(matches!(q.stmts.last(), Some(Stmt::Return { .. })));
            let at = rng.gen_range(first..=last.max(first));
            q.stmts.insert(
                at,
                Stmt::Assign {
                    line: 0,
                    ty: Some("int".into()),
                    target: name,
                    value,
                },
            );
            q = q.renumbered();
        }
        Mutation::Renaming => {
            let vars: Vec<String> = p.variables().into_iter().collect();
            let mut renamed: BTreeSet<String> = vars.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            if renamed.is_empty() {
                renamed.insert(vars.choose(rng)?.clone());
            }
            let f = |v: &str| {
                if renamed.contains(v) {
                    format!("r_{v}")
                } else {
                    v.to_string()
                }
            };
            q = p.renamed(f);
            var_pairs = vars.iter().map(|v| (v.clone(), f(v))).collect();
        }
    }
    Some(MutatedPair {
        original: p.clone(),
        mutated: q,
        mutation: kind,
        var_pairs,
    })
}
