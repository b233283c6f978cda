use std::collections::BTreeSet;
use std::fmt;

/// An expression. Operators and calls are both `Op`; `infix` only
/// affects printing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Lit(i64),
    Op { op: String, args: Vec<Expr>, infix: bool },
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn call(op: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Op {
            op: op.into(),
            args,
            infix: false,
        }
    }

    /// A symbolic operator: prefix when unary, infix when binary.
    pub fn operator(op: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Op {
            op: op.into(),
            args,
            infix: true,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Expr::Var(_) | Expr::Lit(_))
    }

    /// At most one operator, applied to atoms.
    pub fn is_normalized(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Lit(_) => true,
            Expr::Op { args, .. } => args.iter().all(Expr::is_atom),
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        match self {
            Expr::Var(v) => vec![v.as_str()],
            Expr::Lit(_) => vec![],
            Expr::Op { args, .. } => args.iter().flat_map(Expr::vars).collect(),
        }
    }

    /// Text of an atom as it appears in facts: the name, or the literal.
    pub fn atom_text(&self) -> Option<String> {
        match self {
            Expr::Var(v) => Some(v.clone()),
            Expr::Lit(n) => Some(n.to_string()),
            Expr::Op { .. } => None,
        }
    }

    fn rename(&mut self, f: &impl Fn(&str) -> String) {
        match self {
            Expr::Var(v) => *v = f(v),
            Expr::Lit(_) => {}
            Expr::Op { args, .. } => args.iter_mut().for_each(|a| a.rename(f)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(v),
            Expr::Lit(n) => write!(f, "{n}"),
            Expr::Op { op, args, infix } => {
                let wrap = |e: &Expr| match e {
                    Expr::Op { infix: true, .. } => format!("({e})"),
                    _ => e.to_string(),
                };
                match (infix, args.as_slice()) {
                    (true, [a]) => write!(f, "{op}{}", wrap(a)),
                    (true, [a, b]) => write!(f, "{} {op} {}", wrap(a), wrap(b)),
                    _ => {
                        let parts: Vec<String> = args.iter().map(ToString::to_string).collect();
                        write!(f, "{op}({})", parts.join(", "))
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    /// `input a, b;` declares free variables.
    Input { line: u32, vars: Vec<String> },
    /// `[type] x = e;`
    Assign {
        line: u32,
        ty: Option<String>,
        target: String,
        value: Expr,
    },
    /// `if (v) {` or `if (!v) {` ... `}`
    If {
        line: u32,
        var: String,
        negated: bool,
        body: Vec<Stmt>,
        end_line: u32,
    },
    Output { line: u32, value: Expr },
    Return { line: u32 },
}

impl Stmt {
    pub fn line(&self) -> u32 {
        match self {
            Stmt::Input { line, .. }
            | Stmt::Assign { line, .. }
            | Stmt::If { line, .. }
            | Stmt::Output { line, .. }
            | Stmt::Return { line } => *line,
        }
    }

    /// The last physical line the statement occupies.
    pub fn last_line(&self) -> u32 {
        match self {
            Stmt::If { end_line, .. } => *end_line,
            s => s.line(),
        }
    }
}

/// A toy program: one statement per line, no loops, single implicit main.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ToyProgram {
    pub stmts: Vec<Stmt>,
    /// Last physical line of the source (0 when empty).
    pub end_line: u32,
}

fn walk<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        if let Stmt::If { body, .. } = s {
            walk(body, f);
        }
    }
}

fn walk_mut(stmts: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for s in stmts {
        f(s);
        if let Stmt::If { body, .. } = s {
            walk_mut(body, f);
        }
    }
}

impl ToyProgram {
    /// Declared free variables, in declaration order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        walk(&self.stmts, &mut |s| {
            if let Stmt::Input { vars, .. } = s {
                for v in vars {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        });
        out
    }

    /// Every variable name defined or declared.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.free_vars().into_iter().collect();
        walk(&self.stmts, &mut |s| {
            if let Stmt::Assign { target, .. } = s {
                out.insert(target.clone());
            }
        });
        out
    }

    /// Lines at which the program can terminate, in textual order: every
    /// `return`, plus the line after the end when the top level does not
    /// end in `return`.
    pub fn exit_lines(&self) -> Vec<u32> {
        let mut out = Vec::new();
        walk(&self.stmts, &mut |s| {
            if let Stmt::Return { line } = s {
                out.push(*line);
            }
        });
        if !matches!(self.stmts.last(), Some(Stmt::Return { .. })) {
            out.push(self.end_line + 1);
        }
        out
    }

    /// Line of the first definition of `var` (0 for free variables).
    pub fn first_def_line(&self, var: &str) -> Option<u32> {
        if self.free_vars().iter().any(|v| v == var) {
            return Some(0);
        }
        let mut found = None;
        walk(&self.stmts, &mut |s| {
            if let Stmt::Assign { line, target, .. } = s {
                if target == var && found.is_none() {
                    found = Some(*line);
                }
            }
        });
        found
    }

    pub fn is_normalized(&self) -> bool {
        let mut ok = true;
        walk(&self.stmts, &mut |s| match s {
            Stmt::Assign { value, .. } => ok &= value.is_normalized(),
            Stmt::Output { value, .. } => ok &= value.is_atom(),
            _ => {}
        });
        ok
    }

    /// Applies `f` to every variable name.
    pub fn renamed(&self, f: impl Fn(&str) -> String) -> ToyProgram {
        let mut p = self.clone();
        walk_mut(&mut p.stmts, &mut |s| match s {
            Stmt::Input { vars, .. } => vars.iter_mut().for_each(|v| *v = f(v)),
            Stmt::Assign { target, value, .. } => {
                *target = f(target);
                value.rename(&f);
            }
            Stmt::If { var, .. } => *var = f(var),
            Stmt::Output { value, .. } => value.rename(&f),
            Stmt::Return { .. } => {}
        });
        p
    }

    /// Reassigns line numbers so that statements sit on consecutive lines
    /// starting at 1 (closing braces take a line of their own).
    pub fn renumbered(&self) -> ToyProgram {
        fn go(stmts: &mut [Stmt], next: &mut u32) {
            for s in stmts {
                match s {
                    Stmt::If {
                        line, body, end_line, ..
                    } => {
                        *line = *next;
                        *next += 1;
                        go(body, next);
                        *end_line = *next;
                        *next += 1;
                    }
                    Stmt::Input { line, .. }
                    | Stmt::Assign { line, .. }
                    | Stmt::Output { line, .. }
                    | Stmt::Return { line } => {
                        *line = *next;
                        *next += 1;
                    }
                }
            }
        }
        let mut p = self.clone();
        let mut next = 1;
        go(&mut p.stmts, &mut next);
        p.end_line = next - 1;
        p
    }
}

impl fmt::Display for ToyProgram {
    /// Prints one statement per line, padding with blank lines so that
    /// every statement lands on its recorded line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn emit(stmts: &[Stmt], depth: usize, at: &mut u32, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let pad = |f: &mut fmt::Formatter<'_>, at: &mut u32, line: u32| -> fmt::Result {
                while *at < line {
                    writeln!(f)?;
                    *at += 1;
                }
                Ok(())
            };
            let indent = "  ".repeat(depth);
            for s in stmts {
                pad(f, at, s.line())?;
                match s {
                    Stmt::Input { vars, .. } => write!(f, "{indent}input {};", vars.join(", "))?,
                    Stmt::Assign { ty, target, value, .. } => match ty {
                        Some(t) => write!(f, "{indent}{t} {target} = {value};")?,
                        None => write!(f, "{indent}{target} = {value};")?,
                    },
                    Stmt::If {
                        var,
                        negated,
                        body,
                        end_line,
                        ..
                    } => {
                        writeln!(f, "{indent}if ({}{var}) {{", if *negated { "!" } else { "" })?;
                        *at += 1;
                        emit(body, depth + 1, at, f)?;
                        pad(f, at, *end_line)?;
                        write!(f, "{indent}}}")?;
                    }
                    Stmt::Output { value, .. } => write!(f, "{indent}output({value});")?,
                    Stmt::Return { .. } => write!(f, "{indent}return;")?,
                }
                writeln!(f)?;
                *at += 1;
            }
            Ok(())
        }
        let mut at = 1;
        emit(&self.stmts, 0, &mut at, f)?;
        while at <= self.end_line {
            writeln!(f)?;
            at += 1;
        }
        Ok(())
    }
}
