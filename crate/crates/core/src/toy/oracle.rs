use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Expr, Stmt, ToyProgram};
use super::interp::{interpret, DOMAIN};
use super::ToyError;

/// All assignments of {0, 1, 2} to `vars`.
pub fn assignments(vars: &[String]) -> impl Iterator<Item = BTreeMap<String, i64>> + '_ {
    let total = (DOMAIN as u64).pow(vars.len() as u32);
    (0..total).map(move |mut n| {
        vars.iter()
            .map(|v| {
                let digit = (n % DOMAIN as u64) as i64;
                n /= DOMAIN as u64;
                (v.clone(), digit)
            })
            .collect()
    })
}

/// Exhaustive equivalence: for every input assignment both programs stop
/// at exits with the same ordinal, and their final in-scope variables
/// correspond one-to-one (through `var_pairs`, else by name) with equal
/// values. Free variables of `p1` feed the paired free variables of `p2`.
pub fn oracle_equiv(
    p1: &ToyProgram,
    p2: &ToyProgram,
    var_pairs: &[(String, String)],
) -> Result<bool, ToyError> {
    let forward: BTreeMap<&str, &str> = var_pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let map = |v: &str| forward.get(v).copied().unwrap_or(v).to_string();
    let free1 = p1.free_vars();
    let free2: BTreeSet<String> = p2.free_vars().into_iter().collect();
    let mapped: BTreeSet<String> = free1.iter().map(|v| map(v)).collect();
    if mapped != free2 {
        return Ok(false);
    }
    for input in assignments(&free1) {
        let input2 = input.iter().map(|(k, v)| (map(k), *v)).collect();
        let s1 = interpret(p1, &input)?;
        let s2 = interpret(p2, &input2)?;
        if s1.exit_ordinal != s2.exit_ordinal {
            return Ok(false);
        }
        let env1: BTreeMap<String, i64> = s1.env.iter().map(|(k, v)| (map(k), *v)).collect();
        if env1 != s2.env {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Path-insensitive taint: every combination of branch decisions is
/// explored regardless of guard values. The first definition of each
/// variable in `uninit` (or its input, for free variables) is tainted,
/// taint follows data dependences only, and the answer is whether some
/// `output` ever receives a tainted value.
pub fn taint_reaches_output(p: &ToyProgram, uninit: &BTreeSet<String>) -> bool {
    let firsts: BTreeMap<String, u32> = p
        .variables()
        .into_iter()
        .filter(|v| uninit.contains(v))
        .filter_map(|v| p.first_def_line(&v).map(|l| (v, l)))
        .collect();
    let guards = count_ifs(&p.stmts);
    assert!(guards <= 20, "too many branches to enumerate");
    (0u64..1 << guards).any(|choice| {
        let mut taint: BTreeMap<String, bool> = firsts
            .iter()
            .filter(|(_, l)| **l == 0)
            .map(|(v, _)| (v.clone(), true))
            .collect();
        let mut next = 0;
        run_taint(&p.stmts, choice, &mut next, &firsts, &mut taint) == Taint::Output
    })
}

#[derive(PartialEq)]
enum Taint {
    Continue,
    Returned,
    Output,
}

fn count_ifs(stmts: &[Stmt]) -> u32 {
    stmts
        .iter()
        .map(|s| match s {
            Stmt::If { body, .. } => 1 + count_ifs(body),
            _ => 0,
        })
        .sum()
}

fn tainted(e: &Expr, taint: &BTreeMap<String, bool>) -> bool {
    e.vars().iter().any(|v| taint.get(*v).copied().unwrap_or(false))
}

fn run_taint(
    stmts: &[Stmt],
    choice: u64,
    next: &mut u32,
    firsts: &BTreeMap<String, u32>,
    taint: &mut BTreeMap<String, bool>,
) -> Taint {
    for s in stmts {
        match s {
            Stmt::Input { .. } => {}
            Stmt::Assign {
                line, target, value, ..
            } => {
                let t = firsts.get(target) == Some(line) || tainted(value, taint);
                taint.insert(target.clone(), t);
            }
            Stmt::Output { value, .. } => {
                if tainted(value, taint) {
                    return Taint::Output;
                }
            }
            Stmt::Return { .. } => return Taint::Returned,
            Stmt::If { body, .. } => {
                let bit = *next;
                *next += count_ifs(body) + 1;
                if choice >> bit & 1 == 1 {
                    let mut inner = *next - count_ifs(body);
                    match run_taint(body, choice, &mut inner, firsts, taint) {
                        Taint::Continue => {}
                        other => return other,
                    }
                }
            }
        }
    }
    Taint::Continue
}
