use std::collections::BTreeSet;

use claimcheck_datalog::{evaluate, parse_program, Database, Fact, Program, Result, Value};

use crate::equiv::diff::{MismatchKey, MismatchKind};
use crate::equiv::model::EquivBundle;
use crate::equiv::pairing::SitePairing;
use crate::facts::{num, sym, Side};

const RULES: &str = r#"
.decl def(s: number, x: symbol, f: symbol, l: number)
.decl use(s: number, x: symbol, f: symbol, l: number)
.decl defWithExpr(s: number, x: symbol, f: symbol, l: number)
.decl watchVar(s: number, x: symbol, f: symbol, l: number)
.decl flow(s: number, x: symbol, f1: symbol, l1: number, y: symbol, f2: symbol, l2: number)
.decl controldep(s: number, x: symbol, f: symbol, l: number, c: symbol, b: symbol, g: symbol, m: number)
.decl condWithExpr(s: number, f: symbol, l: number)
.decl unaryFun(s: number, op: symbol, a: symbol, f: symbol, l: number)
.decl binaryFun(s: number, op: symbol, a: symbol, b: symbol, f: symbol, l: number)
.decl isConstantValue(s: number, c: symbol)
.decl varPair(s: number, x: symbol, y: symbol)
.decl linePair(s: number, f: symbol, l: number, g: symbol, m: number)
.decl condPair(s: number, c: symbol, d: symbol)
.decl other(s: number, t: number)
.decl mismatch(kind: symbol, s: number, pred: symbol, a1: symbol, a2: symbol, a3: number, a4: symbol, a5: symbol, a6: number)
.decl anyMismatch()
.decl equivalent()

other(1, 2).
other(2, 1).

// Dataflow facts must have an image on the other side.
defImg(s, x, f, l) :- def(s, x, f, l), varPair(s, x, y), linePair(s, f, l, g, m), other(s, t), def(t, y, g, m).
mismatch("dataflow", s, "def", x, f, l, "", "", 0) :- def(s, x, f, l), !defImg(s, x, f, l).
useImg(s, x, f, l) :- use(s, x, f, l), varPair(s, x, y), linePair(s, f, l, g, m), other(s, t), use(t, y, g, m).
mismatch("dataflow", s, "use", x, f, l, "", "", 0) :- use(s, x, f, l), !useImg(s, x, f, l).
dweImg(s, x, f, l) :- defWithExpr(s, x, f, l), varPair(s, x, y), linePair(s, f, l, g, m), other(s, t), defWithExpr(t, y, g, m).
mismatch("dataflow", s, "defWithExpr", x, f, l, "", "", 0) :- defWithExpr(s, x, f, l), !dweImg(s, x, f, l).
flowImg(s, x, f1, l1, y, f2, l2) :- flow(s, x, f1, l1, y, f2, l2), varPair(s, x, x2), linePair(s, f1, l1, g1, m1),
    varPair(s, y, y2), linePair(s, f2, l2, g2, m2), other(s, t), flow(t, x2, g1, m1, y2, g2, m2).
mismatch("dataflow", s, "flow", x, f1, l1, y, f2, l2) :- flow(s, x, f1, l1, y, f2, l2), !flowImg(s, x, f1, l1, y, f2, l2).
cweImg(s, f, l) :- condWithExpr(s, f, l), linePair(s, f, l, g, m), other(s, t), condWithExpr(t, g, m).
mismatch("dataflow", s, "condWithExpr", "", f, l, "", "", 0) :- condWithExpr(s, f, l), !cweImg(s, f, l).

// Constants compare by literal text.
constOk(s, c) :- isConstantValue(s, c), varPair(s, c, c), other(s, t), isConstantValue(t, c).
mismatch("constant", s, "isConstantValue", c, "", 0, "", "", 0) :- isConstantValue(s, c), !constOk(s, c).

// Expressions, grouped by line; operands compare positionally.
funLine(s, f, l) :- unaryFun(s, _, _, f, l).
funLine(s, f, l) :- binaryFun(s, _, _, _, f, l).
unImg(s, op, a, f, l) :- unaryFun(s, op, a, f, l), varPair(s, a, a2), linePair(s, f, l, g, m), other(s, t), unaryFun(t, op, a2, g, m).
binImg(s, op, a, b, f, l) :- binaryFun(s, op, a, b, f, l), varPair(s, a, a2), varPair(s, b, b2), linePair(s, f, l, g, m),
    other(s, t), binaryFun(t, op, a2, b2, g, m).
exprBad(s, f, l) :- unaryFun(s, op, a, f, l), !unImg(s, op, a, f, l).
exprBad(s, f, l) :- binaryFun(s, op, a, b, f, l), !binImg(s, op, a, b, f, l).
mismatch("expression", 1, "expr", "", f, l, "", "", 0) :- exprBad(1, f, l).
mismatch("expression", 1, "expr", "", f, l, "", "", 0) :- funLine(1, f, l), linePair(1, f, l, g, m), exprBad(2, g, m).
exprCovered(f, l) :- funLine(2, f, l), linePair(2, f, l, g, m), funLine(1, g, m).
mismatch("expression", 2, "expr", "", f, l, "", "", 0) :- exprBad(2, f, l), !exprCovered(f, l).

// Control dependences, grouped by dependent position.
cdImg(s, x, f, l, c, b, g, m) :- controldep(s, x, f, l, c, b, g, m), varPair(s, x, x2), linePair(s, f, l, f2, l2),
    condPair(s, c, c2), linePair(s, g, m, g2, m2), other(s, t), controldep(t, x2, f2, l2, c2, b, g2, m2).
cdBad(s, x, f, l) :- controldep(s, x, f, l, c, b, g, m), !cdImg(s, x, f, l, c, b, g, m).
cdPos(s, x, f, l) :- controldep(s, x, f, l, _, _, _, _).
mismatch("controldep", 1, "controldep", x, f, l, "", "", 0) :- cdBad(1, x, f, l).
mismatch("controldep", 1, "controldep", x, f, l, "", "", 0) :- cdPos(1, x, f, l), varPair(1, x, y), linePair(1, f, l, g, m), cdBad(2, y, g, m).
cdCovered(y, g, m) :- cdPos(2, y, g, m), varPair(2, y, x), linePair(2, g, m, f, l), cdPos(1, x, f, l).
mismatch("controldep", 2, "controldep", y, g, m, "", "", 0) :- cdBad(2, y, g, m), !cdCovered(y, g, m).

// Watch variables in both directions, then reaching definitions.
wOk(s, x, f, l) :- watchVar(s, x, f, l), varPair(s, x, y), linePair(s, f, l, g, m), other(s, t), watchVar(t, y, g, m).
mismatch("watchvar", s, "watchVar", x, f, l, "", "", 0) :- watchVar(s, x, f, l), !wOk(s, x, f, l).
mismatch("reachingdefs", s, "flow", a, f1, l1, x, f, l) :- wOk(s, x, f, l), flow(s, a, f1, l1, x, f, l), !flowImg(s, a, f1, l1, x, f, l).

anyMismatch() :- mismatch(_, _, _, _, _, _, _, _, _).
equivalent() :- !anyMismatch().
"#;

fn tagged(pred: &str, s: Side, rest: Vec<Value>) -> Fact {
    let mut v = vec![Value::Int(s.number())];
    v.extend(rest);
    Fact::new(pred, v)
}

/// The comparison as a stratified Datalog program over side-tagged
/// facts and the pairing. Evaluating it derives one `mismatch` tuple per
/// mismatch of [`diff_structure`](crate::equiv::diff_structure) and
/// [`check_watchvars`](crate::equiv::check_watchvars), and `equivalent()`
/// exactly when there are none.
pub fn equiv_rules(b: &EquivBundle, p: &SitePairing) -> Result<Program> {
    let base = parse_program(RULES)?;
    let mut facts: Vec<Fact> = base.facts.iter().cloned().collect();
    for s in Side::BOTH {
        let pf = b.side(s);
        for f in pf.facts() {
            match f.predicate.as_str() {
                "entry" | "exit" => continue,
                _ => facts.push(tagged(&f.predicate, s, f.values)),
            }
        }
        for x in pf.variables() {
            if let Some(y) = p.var(s, x) {
                facts.push(tagged("varPair", s, vec![sym(x), sym(y)]));
            }
        }
        for c in pf.controldep.iter().map(|c| &c.cond).collect::<BTreeSet<_>>() {
            if let Some(d) = p.cond(s, c) {
                facts.push(tagged("condPair", s, vec![sym(c), sym(d)]));
            }
        }
        for l in pf.locations() {
            if let Some(m) = p.loc(s, &l) {
                facts.push(tagged(
                    "linePair",
                    s,
                    vec![sym(&l.file), num(l.line), sym(&m.file), num(m.line)],
                ));
            }
        }
    }
    Program::build(base.declarations, base.rules, facts)
}

/// Reads the `mismatch` keys out of an evaluated rule program.
pub fn mismatch_keys(db: &Database) -> BTreeSet<MismatchKey> {
    let mut out = BTreeSet::new();
    let Ok(rows) = db.tuples("mismatch") else {
        return out;
    };
    for t in rows {
        let s = |i: usize| t[i].as_sym().unwrap_or_default().to_string();
        let n = |i: usize| t[i].as_int().unwrap_or_default() as u32;
        out.insert(MismatchKey {
            kind: MismatchKind::from_name(&s(0)).expect("rule kinds are known"),
            side: if t[1].as_int() == Some(1) { Side::Code1 } else { Side::Code2 },
            predicate: s(2),
            a: (s(3), s(4), n(5)),
            b: (s(6), s(7), n(8)),
        });
    }
    out
}

/// Evaluates [`equiv_rules`] and reports whether `equivalent()` holds
/// together with the derived mismatch keys.
pub fn evaluate_equiv_rules(b: &EquivBundle, p: &SitePairing) -> Result<(bool, BTreeSet<MismatchKey>)> {
    let program = equiv_rules(b, p)?;
    let db = evaluate(&program);
    let eq = db.len("equivalent") > 0;
    Ok((eq, mismatch_keys(&db)))
}
