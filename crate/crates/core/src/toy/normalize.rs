use std::collections::BTreeSet;

use super::ast::{Expr, Stmt, ToyProgram};

struct Normalizer {
    names: BTreeSet<String>,
    shift: u32,
}

impl Normalizer {
    fn fresh(&mut self, base: &str) -> String {
        let mut k = 1;
        loop {
            let name = format!("{base}_tmp{k}");
            if self.names.insert(name.clone()) {
                return name;
            }
            k += 1;
        }
    }

    /// Reduces `e` to at most one operator over atoms, pushing the
    /// temporaries it needs onto `temps`.
    fn flatten(&mut self, e: &Expr, base: &str, temps: &mut Vec<(String, Expr)>) -> Expr {
        match e {
            Expr::Var(_) | Expr::Lit(_) => e.clone(),
            Expr::Op { op, args, infix } => {
                let args = args.iter().map(|a| self.atom(a, base, temps)).collect();
                Expr::Op {
                    op: op.clone(),
                    args,
                    infix: *infix,
                }
            }
        }
    }

    fn atom(&mut self, e: &Expr, base: &str, temps: &mut Vec<(String, Expr)>) -> Expr {
        if e.is_atom() {
            return e.clone();
        }
        let value = self.flatten(e, base, temps);
        let name = self.fresh(base);
        temps.push((name.clone(), value));
        Expr::Var(name)
    }

    fn block(&mut self, stmts: &[Stmt]) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in stmts {
            let old = s.line();
            let mut temps = Vec::new();
            let stmt = match s {
                Stmt::Assign {
                    ty, target, value, ..
                } => {
                    let value = self.flatten(value, target, &mut temps);
                    Stmt::Assign {
                        line: 0,
                        ty: ty.clone(),
                        target: target.clone(),
                        value,
                    }
                }
                Stmt::Output { value, .. } => {
                    let value = self.atom(value, "out", &mut temps);
                    Stmt::Output { line: 0, value }
                }
                other => other.clone(),
            };
            for (name, value) in temps {
                out.push(Stmt::Assign {
                    line: old + self.shift,
                    ty: Some("int".into()),
                    target: name,
                    value,
                });
                self.shift += 1;
            }
            let line = old + self.shift;
            out.push(match stmt {
                Stmt::Assign {
                    ty, target, value, ..
                } => Stmt::Assign {
                    line,
                    ty,
                    target,
                    value,
                },
                Stmt::Output { value, .. } => Stmt::Output { line, value },
                Stmt::Input { vars, .. } => Stmt::Input { line, vars },
                Stmt::Return { .. } => Stmt::Return { line },
                Stmt::If {
                    var,
                    negated,
                    body,
                    end_line,
                    ..
                } => {
                    let body = self.block(&body);
                    Stmt::If {
                        line,
                        var,
                        negated,
                        body,
                        end_line: end_line + self.shift,
                    }
                }
            });
        }
        out
    }
}

/// Splits compound expressions into chains of fresh `<var>_tmp<k>`
/// temporaries, each on its own inserted line. Later lines shift down.
/// Already-normal programs come back unchanged.
pub fn normalize(p: &ToyProgram) -> ToyProgram {
    let mut n = Normalizer {
        names: p.variables(),
        shift: 0,
    };
    let stmts = n.block(&p.stmts);
    ToyProgram {
        stmts,
        end_line: p.end_line + n.shift,
    }
}
