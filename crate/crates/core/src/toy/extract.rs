use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::ast::{Expr, Stmt, ToyProgram};
use super::normalize::normalize;
use crate::equiv::{
    BinaryFun, ControlDep, Correspondence, Entry, EquivBundle, MapEnd, ProgramFacts, UnaryFun,
    DEFAULT_FILE,
};
use crate::facts::{Loc, VarSite};
use crate::msan::{MemoryError, MsanFactSet};

pub const MAIN: &str = "main";
pub const ENTRY_COND: &str = "Entry:main";
pub const UNINIT_KIND: &str = "use-of-uninitialized-value";

type Reaching = BTreeMap<String, BTreeSet<u32>>;

#[derive(Debug, Clone)]
struct Guard {
    var: String,
    branch: bool,
    line: u32,
}

impl Guard {
    fn entry() -> Guard {
        Guard {
            var: ENTRY_COND.into(),
            branch: true,
            line: 0,
        }
    }
}

/// An operand together with the lines whose definitions of it may reach
/// the use. Literals carry no lines.
#[derive(Debug, Clone)]
struct Operand {
    expr: Expr,
    reaching: BTreeSet<u32>,
}

#[derive(Debug, Clone)]
enum Event {
    Def {
        var: String,
        line: u32,
        value: Expr,
        operands: Vec<Operand>,
        guard: Guard,
    },
    GuardUse {
        var: String,
        line: u32,
        reaching: BTreeSet<u32>,
        guard: Guard,
    },
    Output {
        operand: Operand,
        line: u32,
    },
    Exit {
        line: u32,
        vars: Vec<(String, BTreeSet<u32>)>,
        guard: Guard,
    },
}

/// Reaching definitions over a normalized program, flattened into events.
struct Analysis {
    events: Vec<Event>,
}

impl Analysis {
    fn run(p: &ToyProgram) -> Analysis {
        let mut a = Analysis { events: Vec::new() };
        let reaching: Reaching = p
            .free_vars()
            .into_iter()
            .map(|v| (v, BTreeSet::from([0])))
            .collect();
        if let Some(state) = a.block(&p.stmts, reaching, &Guard::entry()) {
            a.exit(p.end_line + 1, &state, &Guard::entry());
        }
        a
    }

    fn operand(e: &Expr, state: &Reaching) -> Operand {
        let reaching = match e {
            Expr::Var(v) => state.get(v).cloned().unwrap_or_default(),
            _ => BTreeSet::new(),
        };
        Operand {
            expr: e.clone(),
            reaching,
        }
    }

    fn exit(&mut self, line: u32, state: &Reaching, guard: &Guard) {
        self.events.push(Event::Exit {
            line,
            vars: state.iter().map(|(v, r)| (v.clone(), r.clone())).collect(),
            guard: guard.clone(),
        });
    }

    /// Returns the state at the end of the block, or `None` when it
    /// always returns.
    fn block(&mut self, stmts: &[Stmt], mut state: Reaching, guard: &Guard) -> Option<Reaching> {
        for s in stmts {
            match s {
                Stmt::Input { .. } => {}
                Stmt::Assign {
                    line, target, value, ..
                } => {
                    let operands = match value {
                        Expr::Op { args, .. } => args.iter().map(|a| Self::operand(a, &state)).collect(),
                        atom => vec![Self::operand(atom, &state)],
                    };
                    self.events.push(Event::Def {
                        var: target.clone(),
                        line: *line,
                        value: value.clone(),
                        operands,
                        guard: guard.clone(),
                    });
                    state.insert(target.clone(), BTreeSet::from([*line]));
                }
                Stmt::Output { line, value } => self.events.push(Event::Output {
                    operand: Self::operand(value, &state),
                    line: *line,
                }),
                Stmt::Return { line } => {
                    self.exit(*line, &state, guard);
                    return None;
                }
                Stmt::If {
                    line,
                    var,
                    negated,
                    body,
                    ..
                } => {
                    self.events.push(Event::GuardUse {
                        var: var.clone(),
                        line: *line,
                        reaching: state.get(var).cloned().unwrap_or_default(),
                        guard: guard.clone(),
                    });
                    let inner = Guard {
                        var: var.clone(),
                        branch: !negated,
                        line: *line,
                    };
                    if let Some(after) = self.block(body, state.clone(), &inner) {
                        for (v, lines) in state.iter_mut() {
                            if let Some(more) = after.get(v) {
                                lines.extend(more);
                            }
                        }
                    }
                }
            }
        }
        Some(state)
    }
}

fn site(var: &str, line: u32) -> VarSite {
    VarSite::new(var, DEFAULT_FILE, line)
}

fn loc(line: u32) -> Loc {
    Loc::new(DEFAULT_FILE, line)
}

fn control(at: VarSite, g: &Guard) -> ControlDep {
    ControlDep {
        at,
        cond: g.var.clone(),
        branch: g.branch,
        site: loc(g.line),
    }
}

impl ProgramFacts {
    /// use at `line` plus a flow from every reaching definition; literals
    /// flow from their own line-0 definition.
    fn add_use(&mut self, o: &Operand, line: u32) {
        let text = o.expr.atom_text().expect("normalized operand");
        let here = site(&text, line);
        self.uses.insert(here.clone());
        if let Expr::Lit(_) = o.expr {
            self.defs.insert(site(&text, 0));
            self.is_constant.insert(text.clone());
            self.flow.insert((site(&text, 0), here));
        } else {
            for r in &o.reaching {
                self.flow.insert((site(&text, *r), here.clone()));
            }
        }
    }
}

/// The equivalence facts of one program, in its own coordinates.
pub fn program_facts(p: &ToyProgram) -> ProgramFacts {
    let p = normalize(p);
    let mut f = ProgramFacts::default();
    f.entry.insert(Entry {
        fun: MAIN.into(),
        at: loc(0),
    });
    for v in p.free_vars() {
        f.defs.insert(site(&v, 0));
    }
    for ev in Analysis::run(&p).events {
        match ev {
            Event::Def {
                var,
                line,
                value,
                operands,
                guard,
            } => {
                let at = site(&var, line);
                f.defs.insert(at.clone());
                f.controldep.insert(control(at.clone(), &guard));
                for o in &operands {
                    f.add_use(o, line);
                }
                match value {
                    Expr::Op { op, args, .. } => {
                        f.def_with_expr.insert(at);
                        let text: Vec<String> = args.iter().filter_map(Expr::atom_text).collect();
                        match text.as_slice() {
                            [a] => f.unary_fun.insert(UnaryFun {
                                op,
                                arg: a.clone(),
                                at: loc(line),
                            }),
                            [a, b] => f.binary_fun.insert(BinaryFun {
                                op,
                                lhs: a.clone(),
                                rhs: b.clone(),
                                at: loc(line),
                            }),
                            _ => unreachable!("operators take one or two arguments"),
                        };
                    }
                    atom => {
                        let text = atom.atom_text().expect("atom");
                        f.flow.insert((site(&text, line), at));
                    }
                }
            }
            Event::GuardUse {
                var,
                line,
                reaching,
                guard,
            } => {
                let o = Operand {
                    expr: Expr::Var(var.clone()),
                    reaching,
                };
                f.add_use(&o, line);
                f.controldep.insert(control(site(&var, line), &guard));
            }
            Event::Output { operand, line } => f.add_use(&operand, line),
            Event::Exit { line, vars, guard } => {
                f.exit.insert(loc(line));
                for (v, reaching) in vars {
                    let o = Operand {
                        expr: Expr::Var(v.clone()),
                        reaching,
                    };
                    f.add_use(&o, line);
                    f.watch_var.insert(site(&v, line));
                    f.controldep.insert(control(site(&v, line), &guard));
                }
            }
        }
    }
    f
}

/// Facts for both programs plus the correspondence: main entries paired,
/// exits paired by ordinal, and a varMap entry for every supplied pair
/// whose names differ. Programs are normalized first.
pub fn extract_equiv_facts(
    p1: &ToyProgram,
    p2: &ToyProgram,
    var_pairs: &[(String, String)],
) -> EquivBundle {
    let (n1, n2) = (normalize(p1), normalize(p2));
    let mut corr = Correspondence::default();
    let main = |line| MapEnd {
        name: MAIN.into(),
        line,
    };
    corr.entry_map.insert((main(0), main(0)));
    for (a, b) in n1.exit_lines().into_iter().zip(n2.exit_lines()) {
        let end = |line| MapEnd {
            name: DEFAULT_FILE.into(),
            line,
        };
        corr.exit_map.insert((end(a), end(b)));
    }
    for (x, y) in var_pairs {
        if x == y {
            continue;
        }
        if let (Some(l1), Some(l2)) = (n1.first_def_line(x), n2.first_def_line(y)) {
            corr.var_map.insert((site(x, l1), site(y, l2)));
        }
    }
    EquivBundle {
        code1: program_facts(&n1),
        code2: program_facts(&n2),
        correspondence: corr,
    }
}

/// Memory-safety facts for `p` with the variables in `uninit` treated as
/// uninitialized at their first definition (line 0 for free variables).
/// A memoryError is emitted at every output reachable through flows
/// from an uninitialized site.
pub fn extract_msan_facts(p: &ToyProgram, uninit: &BTreeSet<String>) -> MsanFactSet {
    let p = normalize(p);
    let mut f = MsanFactSet::default();
    for v in p.free_vars() {
        f.declared.insert(site(&v, 0));
    }
    for v in uninit {
        if let Some(line) = p.first_def_line(v) {
            f.uninitialized.insert(site(v, line));
        }
    }
    let mut outputs = Vec::new();
    for ev in Analysis::run(&p).events {
        match ev {
            Event::Def {
                var,
                line,
                operands,
                ..
            } => {
                let at = site(&var, line);
                f.declared.insert(at.clone());
                for o in operands {
                    if let Expr::Var(y) = &o.expr {
                        for r in &o.reaching {
                            f.flow.insert((site(y, *r), at.clone()));
                        }
                    }
                }
            }
            Event::Output { operand, line } => {
                if let Expr::Var(y) = &operand.expr {
                    let at = site(y, line);
                    f.uses.insert(at.clone());
                    for r in &operand.reaching {
                        f.flow.insert((site(y, *r), at.clone()));
                    }
                    outputs.push(at);
                }
            }
            Event::GuardUse { .. } | Event::Exit { .. } => {}
        }
    }
    let tainted = reachable(&f.uninitialized, &f.flow);
    for at in outputs {
        if tainted.contains(&at) {
            f.memory_error.insert(MemoryError {
                var: at.var.clone(),
                kind: UNINIT_KIND.into(),
                file: at.file.clone(),
                line: at.line,
            });
        }
    }
    f
}

fn reachable(from: &BTreeSet<VarSite>, edges: &BTreeSet<(VarSite, VarSite)>) -> BTreeSet<VarSite> {
    let mut seen: BTreeSet<VarSite> = from.clone();
    let mut queue: VecDeque<VarSite> = from.iter().cloned().collect();
    while let Some(s) = queue.pop_front() {
        for (_, b) in edges.iter().filter(|(a, _)| *a == s) {
            if seen.insert(b.clone()) {
                queue.push_back(b.clone());
            }
        }
    }
    seen
}
