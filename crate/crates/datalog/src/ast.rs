//! Terms, atoms, rules and programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// A ground value: either an interned symbol or an integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Sym(Arc<str>),
}

impl Value {
    pub fn sym(text: impl AsRef<str>) -> Self {
        Value::Sym(Arc::from(text.as_ref()))
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Value::Sym(s) => Some(s),
            Value::Int(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Sym(_) => None,
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Number,
            Value::Sym(_) => Sort::Symbol,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::sym(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Sym(Arc::from(v))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write_quoted(f, s),
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

/// Argument sort of a relation column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Symbol,
    Number,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Symbol => "symbol",
            Sort::Number => "number",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Value),
    Var(String),
    Wildcard,
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn sym(text: impl AsRef<str>) -> Self {
        Term::Const(Value::sym(text))
    }

    pub fn int(v: i64) -> Self {
        Term::Const(Value::Int(v))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(v) => v.fmt(f),
            Term::Var(v) => f.write_str(v),
            Term::Wildcard => f.write_str("_"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    /// Converts a ground atom into a [`Fact`]; `None` if any argument is not a constant.
    pub fn to_fact(&self) -> Option<Fact> {
        let values = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(v) => Some(v.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Fact::new(self.predicate.clone(), values))
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            a.fmt(f)?;
        }
        f.write_str(")")
    }
}

/// A ground atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub predicate: String,
    pub values: Vec<Value>,
}

impl Fact {
    pub fn new(predicate: impl Into<String>, values: Vec<Value>) -> Self {
        Fact {
            predicate: predicate.into(),
            values,
        }
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(
            self.predicate.clone(),
            self.values.iter().cloned().map(Term::Const).collect(),
        )
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            v.fmt(f)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Term, CmpOp, Term),
}

impl Literal {
    pub fn variables(&self) -> Vec<&str> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.variables().collect(),
            Literal::Cmp(l, _, r) => [l, r].into_iter().filter_map(Term::as_var).collect(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => a.fmt(f),
            Literal::Neg(a) => write!(f, "!{a}"),
            Literal::Cmp(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head, body }
    }

    pub fn positive_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|l| match l {
            Literal::Pos(a) => Some(a),
            _ => None,
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, l) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            l.fmt(f)?;
        }
        f.write_str(".")
    }
}

/// Relation signature: ordered `(parameter name, sort)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Declaration {
    pub params: Vec<(String, Sort)>,
}

impl Declaration {
    pub fn from_sorts(sorts: &[Sort]) -> Self {
        Declaration {
            params: sorts
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("a{i}"), *s))
                .collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn sorts(&self) -> impl Iterator<Item = Sort> + '_ {
        self.params.iter().map(|(_, s)| *s)
    }
}

/// A checked Datalog program. Construct through [`crate::parse_program`] or
/// [`Program::build`] so that arity, sort, range-restriction and
/// stratification checks have run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub declarations: BTreeMap<String, Declaration>,
    pub rules: Vec<Rule>,
    pub facts: BTreeSet<Fact>,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, decl) in &self.declarations {
            write!(f, ".decl {name}(")?;
            for (i, (p, s)) in decl.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}: {s}")?;
            }
            f.write_str(")\n")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        Ok(())
    }
}
