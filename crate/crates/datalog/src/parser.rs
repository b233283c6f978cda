//! Hand-written lexer and recursive-descent parser for the clause grammar.
//!
//! ```text
//! .decl name(arg: sort, ...)
//! name(t1, ..., tn).
//! head(...) :- lit1, ..., litk.
//! ```
//!
//! Literals are atoms, negated atoms (`!atom`) or infix integer comparisons.
//! Symbols are double-quoted with `\"` and `\\` escapes, `_` is the wildcard,
//! and the bare words `true` / `false` read as the symbols `"true"` / `"false"`.
//! `//` and `/* */` comments are skipped. `.input` / `.output` directives are
//! accepted so exported rule files read back.

use crate::ast::{Atom, CmpOp, Declaration, Literal, Rule, Sort, Term, Value};
use crate::error::{DatalogError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    If,
    Bang,
    Cmp(CmpOp),
    Directive(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> DatalogError {
    DatalogError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn rest(&mut self) -> &'a str {
        match self.chars.peek() {
            Some(&(i, _)) => &self.src[i..],
            None => "",
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let (line, column) = (self.line, self.column);
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, column });
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek2() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '/' if self.peek2() == Some('*') => {
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => return Err(syntax(line, column, "unterminated block comment")),
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                        }
                    }
                }
                '(' => {
                    self.bump();
                    push(&mut out, Tok::LParen);
                }
                ')' => {
                    self.bump();
                    push(&mut out, Tok::RParen);
                }
                ',' => {
                    self.bump();
                    push(&mut out, Tok::Comma);
                }
                ':' => {
                    self.bump();
                    if self.peek() == Some('-') {
                        self.bump();
                        push(&mut out, Tok::If);
                    } else {
                        push(&mut out, Tok::Colon);
                    }
                }
                '.' => {
                    self.bump();
                    let rest = self.rest();
                    let word: String = rest
                        .chars()
                        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                        .collect();
                    if matches!(word.as_str(), "decl" | "input" | "output") {
                        for _ in 0..word.len() {
                            self.bump();
                        }
                        push(&mut out, Tok::Directive(word));
                    } else {
                        push(&mut out, Tok::Dot);
                    }
                }
                '!' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        push(&mut out, Tok::Cmp(CmpOp::Ne));
                    } else {
                        push(&mut out, Tok::Bang);
                    }
                }
                '<' | '>' => {
                    self.bump();
                    let eq = self.peek() == Some('=');
                    if eq {
                        self.bump();
                    }
                    let op = match (c, eq) {
                        ('<', false) => CmpOp::Lt,
                        ('<', true) => CmpOp::Le,
                        ('>', false) => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    };
                    push(&mut out, Tok::Cmp(op));
                }
                '=' => {
                    self.bump();
                    push(&mut out, Tok::Cmp(CmpOp::Eq));
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None => return Err(syntax(line, column, "unterminated string")),
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some(c @ ('"' | '\\')) => s.push(c),
                                Some(c) => {
                                    s.push('\\');
                                    s.push(c);
                                }
                                None => return Err(syntax(line, column, "unterminated string")),
                            },
                            Some(c) => s.push(c),
                        }
                    }
                    push(&mut out, Tok::Str(s));
                }
                c if c.is_ascii_digit() || (c == '-' && self.peek2().is_some_and(|d| d.is_ascii_digit())) => {
                    let mut s = String::new();
                    s.push(c);
                    self.bump();
                    while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                        s.push(d);
                        self.bump();
                    }
                    let v = s
                        .parse::<i64>()
                        .map_err(|_| syntax(line, column, format!("integer literal `{s}` out of range")))?;
                    push(&mut out, Tok::Int(v));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while let Some(d) = self.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                        s.push(d);
                        self.bump();
                    }
                    push(&mut out, Tok::Ident(s));
                }
                other => return Err(syntax(line, column, format!("unexpected character `{other}`"))),
            }
        }
        Ok(out)
    }
}

/// One parsed statement with the position of its first token.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub kind: ClauseKind,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClauseKind {
    Decl(String, Declaration),
    /// A body-less clause. Not necessarily ground; callers decide.
    Fact(Atom),
    Rule(Rule),
    Input(String),
    Output(String),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.column))
            .unwrap_or(self.eof)
    }

    fn err(&self, message: impl Into<String>) -> DatalogError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected {what}, found {}", describe(t)))),
            None => Err(self.err(format!("expected {what}, found end of input"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.err(format!("expected {what}, found {}", describe(t)))),
            None => Err(self.err(format!("expected {what}, found end of input"))),
        }
    }

    fn clause(&mut self) -> Result<Clause> {
        let (line, column) = self.here();
        let kind = match self.peek() {
            Some(Tok::Directive(d)) => {
                let d = d.clone();
                self.pos += 1;
                match d.as_str() {
                    "decl" => self.decl()?,
                    _ => {
                        let name = self.ident("relation name")?;
                        // Skip an optional parenthesised parameter list such as `(IO=file)`.
                        if self.peek() == Some(&Tok::LParen) {
                            let mut depth = 0usize;
                            loop {
                                match self.next() {
                                    Some(Tok::LParen) => depth += 1,
                                    Some(Tok::RParen) => {
                                        depth -= 1;
                                        if depth == 0 {
                                            break;
                                        }
                                    }
                                    Some(_) => {}
                                    None => return Err(self.err("unbalanced directive parameters")),
                                }
                            }
                        }
                        if d == "input" {
                            ClauseKind::Input(name)
                        } else {
                            ClauseKind::Output(name)
                        }
                    }
                }
            }
            _ => {
                let head = self.atom()?;
                if self.peek() == Some(&Tok::If) {
                    self.pos += 1;
                    let mut body = vec![self.literal()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        body.push(self.literal()?);
                    }
                    self.expect(Tok::Dot, "`.` after rule body")?;
                    ClauseKind::Rule(Rule::new(head, body))
                } else {
                    self.expect(Tok::Dot, "`.` or `:-` after atom")?;
                    ClauseKind::Fact(head)
                }
            }
        };
        Ok(Clause { kind, line, column })
    }

    fn decl(&mut self) -> Result<ClauseKind> {
        let name = self.ident("relation name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let p = self.ident("parameter name")?;
                self.expect(Tok::Colon, "`:`")?;
                let sort = match self.ident("sort")?.as_str() {
                    "symbol" => Sort::Symbol,
                    "number" => Sort::Number,
                    other => return Err(self.err(format!("unknown sort `{other}`"))),
                };
                params.push((p, sort));
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(ClauseKind::Decl(name, Declaration { params }))
    }

    fn atom(&mut self) -> Result<Atom> {
        let name = self.ident("predicate name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.term()?);
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(Atom::new(name, args))
    }

    fn term(&mut self) -> Result<Term> {
        match self.next() {
            Some(Tok::Str(s)) => Ok(Term::Const(Value::sym(s))),
            Some(Tok::Int(i)) => Ok(Term::Const(Value::Int(i))),
            Some(Tok::Ident(s)) => Ok(match s.as_str() {
                "_" => Term::Wildcard,
                "true" | "false" => Term::Const(Value::sym(s)),
                _ if s.starts_with('_') => {
                    self.pos -= 1;
                    return Err(self.err(format!("variable `{s}` must begin with a letter")));
                }
                _ => Term::Var(s),
            }),
            Some(t) => {
                self.pos -= 1;
                Err(self.err(format!("expected a term, found {}", describe(&t))))
            }
            None => Err(self.err("expected a term, found end of input")),
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        if self.peek() == Some(&Tok::Bang) {
            self.pos += 1;
            return Ok(Literal::Neg(self.atom()?));
        }
        let is_atom = matches!(self.peek(), Some(Tok::Ident(_)))
            && matches!(self.toks.get(self.pos + 1).map(|s| &s.tok), Some(Tok::LParen));
        if is_atom {
            return Ok(Literal::Pos(self.atom()?));
        }
        let lhs = self.term()?;
        let op = match self.next() {
            Some(Tok::Cmp(op)) => op,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected a comparison operator"));
            }
        };
        let rhs = self.term()?;
        Ok(Literal::Cmp(lhs, op, rhs))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Colon => "`:`".into(),
        Tok::If => "`:-`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Cmp(op) => format!("`{}`", op.symbol()),
        Tok::Directive(d) => format!("`.{d}`"),
    }
}

/// Parses source text into raw clauses without any semantic checking.
pub fn parse_clauses(source: &str) -> Result<Vec<Clause>> {
    let toks = Lexer::new(source).tokens()?;
    let eof = end_position(source);
    let mut p = Parser { toks, pos: 0, eof };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.clause()?);
    }
    Ok(out)
}

fn end_position(source: &str) -> (usize, usize) {
    let line = source.lines().count().max(1);
    let column = source.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_fact_rule_and_decl() {
        let cs = parse_clauses(".decl p(x: number)\np(1). q(x) :- p(x), x < 2, !r(x).").unwrap();
        assert_eq!(cs.len(), 3);
        assert!(matches!(cs[0].kind, ClauseKind::Decl(..)));
        assert!(matches!(cs[1].kind, ClauseKind::Fact(_)));
        match &cs[2].kind {
            ClauseKind::Rule(r) => assert_eq!(r.body.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn escapes_and_booleans() {
        let cs = parse_clauses(r#"s("a\"b\\c", true, -3)."#).unwrap();
        let ClauseKind::Fact(a) = &cs[0].kind else { panic!() };
        assert_eq!(a.args[0], Term::sym("a\"b\\c"));
        assert_eq!(a.args[1], Term::sym("true"));
        assert_eq!(a.args[2], Term::int(-3));
    }

    #[test]
    fn space_before_paren_is_allowed() {
        let cs = parse_clauses("flow (\"0\", 0, \"0\", 1).").unwrap();
        assert_eq!(cs.len(), 1);
    }

    #[test]
    fn reports_position() {
        let err = parse_clauses("p(1).\np(2)\nq(3).").unwrap_err();
        match err {
            DatalogError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comments_are_skipped() {
        let cs = parse_clauses("// a\np(1). /* b\n c */ p(2).").unwrap();
        assert_eq!(cs.len(), 2);
    }
}
