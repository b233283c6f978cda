use std::collections::BTreeSet;

use super::ast::{Expr, Stmt, ToyProgram};
use super::ToyError;

const TYPES: &[&str] = &["int", "bool", "unsigned", "char", "long", "short", "auto"];

const BINARY_LEVELS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", "<=", ">", ">="],
    &["<<", ">>"],
    &["+", "-"],
    &["*", "/", "%"],
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

const SYMBOLS: &[&str] = &[
    "||", "&&", "==", "!=", "<=", ">=", "<<", ">>", "|", "^", "&", "<", ">", "+", "-", "*", "/",
    "%", "!", "~", "(", ")", ",",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokenize(text: &str, line: u32) -> Result<Vec<Tok>, ToyError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if is_ident_start(c) {
            // `a.b` and `a->b` stay one identifier
            let start = i;
            loop {
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                if i + 1 < chars.len() && chars[i] == '.' && is_ident_start(chars[i + 1]) {
                    i += 1;
                } else if i + 2 < chars.len()
                    && chars[i] == '-'
                    && chars[i + 1] == '>'
                    && is_ident_start(chars[i + 2])
                {
                    i += 2;
                } else {
                    break;
                }
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse()
                .map_err(|_| syntax(line, format!("integer literal `{text}` out of range")))?;
            out.push(Tok::Int(n));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| syntax(line, format!("unexpected character `{c}`")))?;
            out.push(Tok::Sym(sym));
            i += sym.len();
        }
    }
    Ok(out)
}

fn syntax(line: u32, message: impl Into<String>) -> ToyError {
    ToyError::Syntax {
        line,
        message: message.into(),
    }
}

struct ExprParser {
    toks: Vec<Tok>,
    pos: usize,
    line: u32,
}

impl ExprParser {
    fn peek_sym(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some(Tok::Sym(s)) => Some(s),
            _ => None,
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), ToyError> {
        if self.peek_sym() == Some(sym) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.line, format!("expected `{sym}`")))
        }
    }

    fn binary(&mut self, level: usize) -> Result<Expr, ToyError> {
        if level == BINARY_LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.peek_sym().filter(|s| BINARY_LEVELS[level].contains(s)) {
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = Expr::operator(op, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ToyError> {
        if let Some(op) = self.peek_sym().filter(|s| ["!", "-", "~"].contains(s)) {
            self.pos += 1;
            let arg = self.unary()?;
            return Ok(Expr::operator(op, vec![arg]));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ToyError> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Lit(n))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek_sym() != Some("(") {
                    return Ok(Expr::Var(name));
                }
                self.pos += 1;
                let mut args = vec![self.binary(0)?];
                while self.peek_sym() == Some(",") {
                    self.pos += 1;
                    args.push(self.binary(0)?);
                }
                self.expect(")")?;
                if args.len() > 2 {
                    return Err(syntax(self.line, format!("`{name}` takes at most two arguments")));
                }
                Ok(Expr::call(name, args))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.binary(0)?;
                self.expect(")")?;
                Ok(e)
            }
            _ => Err(syntax(self.line, "expected an expression")),
        }
    }
}

fn parse_expr(text: &str, line: u32) -> Result<Expr, ToyError> {
    let mut p = ExprParser {
        toks: tokenize(text, line)?,
        pos: 0,
        line,
    };
    let e = p.binary(0)?;
    if p.pos != p.toks.len() {
        return Err(syntax(line, "unexpected trailing tokens"));
    }
    Ok(e)
}

fn ident(text: &str, line: u32) -> Result<String, ToyError> {
    match tokenize(text, line)?.as_slice() {
        [Tok::Ident(name)] => Ok(name.clone()),
        _ => Err(syntax(line, format!("expected an identifier, found `{text}`"))),
    }
}

enum Line {
    Stmt(Stmt),
    Open { var: String, negated: bool },
    Close,
}

fn parse_line(text: &str, line: u32) -> Result<Line, ToyError> {
    if text == "}" {
        return Ok(Line::Close);
    }
    if let Some(rest) = text.strip_prefix("if") {
        let rest = rest.trim_start();
        let inner = rest
            .strip_prefix('(')
            .and_then(|r| r.trim_end().strip_suffix('{'))
            .and_then(|r| r.trim_end().strip_suffix(')'))
            .ok_or_else(|| syntax(line, "expected `if (v) {`"))?
            .trim();
        let (negated, var) = match inner.strip_prefix('!') {
            Some(v) => (true, v.trim()),
            None => (false, inner),
        };
        return Ok(Line::Open {
            var: ident(var, line)?,
            negated,
        });
    }
    let body = text.strip_suffix(';').unwrap_or(text).trim_end();
    if body == "return" {
        return Ok(Line::Stmt(Stmt::Return { line }));
    }
    if let Some(rest) = body.strip_prefix("input ") {
        let vars = rest
            .split(',')
            .map(|v| ident(v.trim(), line))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Line::Stmt(Stmt::Input { line, vars }));
    }
    if let Some(rest) = body.strip_prefix("output") {
        let inner = rest
            .trim_start()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| syntax(line, "expected `output(e)`"))?;
        return Ok(Line::Stmt(Stmt::Output {
            line,
            value: parse_expr(inner, line)?,
        }));
    }
    let (lhs, rhs) = body
        .split_once('=')
        .filter(|(_, r)| !r.starts_with('='))
        .ok_or_else(|| syntax(line, format!("unrecognised statement `{text}`")))?;
    let mut words: Vec<&str> = lhs.split_whitespace().collect();
    let ty = match words.as_slice() {
        [t, _] if TYPES.contains(t) => Some(t.to_string()),
        [_] => None,
        _ => return Err(syntax(line, format!("bad assignment target `{}`", lhs.trim()))),
    };
    let target = ident(words.pop().unwrap_or_default(), line)?;
    Ok(Line::Stmt(Stmt::Assign {
        line,
        ty,
        target,
        value: parse_expr(rhs, line)?,
    }))
}

struct Frame {
    stmts: Vec<Stmt>,
    header: Option<(u32, String, bool)>,
}

/// Parses a toy program. Blank lines and `//` comments are ignored but
/// still count towards line numbers.
pub fn parse_toy(source: &str) -> Result<ToyProgram, ToyError> {
    let mut stack = vec![Frame {
        stmts: Vec::new(),
        header: None,
    }];
    let mut end_line = 0;
    for (idx, raw) in source.lines().enumerate() {
        let line = idx as u32 + 1;
        let text = raw.split("//").next().unwrap_or_default().trim();
        if text.is_empty() {
            continue;
        }
        end_line = line;
        let parsed = parse_line(text, line)?;
        let nested = stack.len() > 1;
        let top = stack.last_mut().expect("frame");
        if matches!(top.stmts.last(), Some(Stmt::Return { .. })) && !matches!(parsed, Line::Close) {
            return Err(syntax(line, "unreachable statement after `return`"));
        }
        match parsed {
            Line::Stmt(s) => {
                if matches!(s, Stmt::Input { .. }) && nested {
                    return Err(syntax(line, "`input` is only allowed at top level"));
                }
                top.stmts.push(s);
            }
            Line::Open { var, negated } => stack.push(Frame {
                stmts: Vec::new(),
                header: Some((line, var, negated)),
            }),
            Line::Close => {
                let frame = stack.pop().expect("frame");
                let Some((open, var, negated)) = frame.header else {
                    return Err(syntax(line, "unmatched `}`"));
                };
                stack.last_mut().expect("frame").stmts.push(Stmt::If {
                    line: open,
                    var,
                    negated,
                    body: frame.stmts,
                    end_line: line,
                });
            }
        }
    }
    if stack.len() > 1 {
        let (open, _, _) = stack.last().and_then(|f| f.header.clone()).expect("header");
        return Err(syntax(open, "unclosed block"));
    }
    let program = ToyProgram {
        stmts: stack.pop().expect("frame").stmts,
        end_line,
    };
    check_defined(&program)?;
    Ok(program)
}

/// Every use must be preceded by a definition in an enclosing scope.
fn check_defined(p: &ToyProgram) -> Result<(), ToyError> {
    fn go(stmts: &[Stmt], scope: &mut BTreeSet<String>) -> Result<(), ToyError> {
        let require = |v: &str, line: u32, scope: &BTreeSet<String>| {
            if scope.contains(v) {
                Ok(())
            } else {
                Err(ToyError::UseBeforeDef {
                    var: v.to_string(),
                    line,
                })
            }
        };
        for s in stmts {
            match s {
                Stmt::Input { .. } | Stmt::Return { .. } => {}
                Stmt::Assign {
                    line, target, value, ..
                } => {
                    for v in value.vars() {
                        require(v, *line, scope)?;
                    }
                    scope.insert(target.clone());
                }
                Stmt::Output { line, value } => {
                    for v in value.vars() {
                        require(v, *line, scope)?;
                    }
                }
                Stmt::If { line, var, body, .. } => {
                    require(var, *line, scope)?;
                    go(body, &mut scope.clone())?;
                }
            }
        }
        Ok(())
    }
    let mut scope: BTreeSet<String> = p.free_vars().into_iter().collect();
    go(&p.stmts, &mut scope)
}
