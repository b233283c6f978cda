use claimcheck_datalog::{parse_program, Program, Result};

use crate::msan::MsanFactSet;

const RULES: &str = r#"
.decl uses(x: symbol, f: symbol, l: number)
.decl uninitialized(x: symbol, f: symbol, l: number)
.decl hasInitializer(x: symbol, m: symbol)
.decl hasMemberInitializer(x: symbol, m: symbol)
.decl allocated(x: symbol, f: symbol, l: number)
.decl declared(x: symbol, f: symbol, l: number)
.decl flow(x: symbol, f1: symbol, l1: number, y: symbol, f2: symbol, l2: number)
.decl memoryError(x: symbol, kind: symbol, f: symbol, l: number)
.decl flowStar(x: symbol, f1: symbol, l1: number, y: symbol, f2: symbol, l2: number)
.decl reachesUse(x: symbol, f1: symbol, l1: number, y: symbol, f2: symbol, l2: number)
.decl anyMemoryError()
.decl satisfied()

flowStar(x, f, l, x, f, l) :- uninitialized(x, f, l).
flowStar(x, f, l, z, f2, l2) :- flowStar(x, f, l, y, f1, l1), flow(y, f1, l1, z, f2, l2).
reachesUse(x, f, l, y, f2, l2) :- uninitialized(x, f, l), flowStar(x, f, l, y, f2, l2), uses(y, f2, l2).
anyMemoryError() :- memoryError(_, _, _, _).
satisfied() :- reachesUse(_, _, _, _, _, _), !anyMemoryError().
satisfied() :- reachesUse(_, _, _, _, f, l), memoryError(_, _, f, l).
"#;

/// The fixed rule set for the MSAN verification condition, with the
/// vocabulary declarations and no facts.
pub fn msan_rules() -> Program {
    parse_program(RULES).expect("shipped MSAN rules are well formed")
}

/// The rule set plus the facts of `fs`.
pub fn msan_program(fs: &MsanFactSet) -> Result<Program> {
    let rules = msan_rules();
    Program::build(rules.declarations, rules.rules, fs.facts())
}
