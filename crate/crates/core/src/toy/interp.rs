use std::collections::BTreeMap;

use serde::Serialize;

use super::ast::{Expr, Stmt, ToyProgram};
use super::ToyError;

/// Values live in {0, 1, 2}.
pub const DOMAIN: i64 = 3;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
/// Smallest salt for which `==` on (0, 2) is nonzero and `foo`/`bar`
/// disagree on 0, so the two sample snippets compute different results.
pub const MIX_SALT: u8 = 3;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Uninterpreted operator semantics: an FNV-1a hash over the salt byte
/// `MIX_SALT`, the operator name, a 0xff separator, and for each argument its position byte and
/// its value as 8 little-endian bytes; then the splitmix64 finalizer,
/// reduced mod 3.
/// Argument positions are hashed, so `mix(op, [a, b])` and
/// `mix(op, [b, a])` generally differ.
pub fn mix(op: &str, args: &[i64]) -> i64 {
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    feed(&[MIX_SALT]);
    feed(op.as_bytes());
    feed(&[0xff]);
    for (i, a) in args.iter().enumerate() {
        feed(&[i as u8]);
        feed(&a.to_le_bytes());
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^= h >> 31;
    (h % DOMAIN as u64) as i64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecState {
    /// Variables in scope at the exit, with their final values.
    pub env: BTreeMap<String, i64>,
    pub outputs: Vec<i64>,
    pub exit_line: u32,
    /// Index of `exit_line` in `ToyProgram::exit_lines`.
    pub exit_ordinal: usize,
}

fn eval(e: &Expr, env: &BTreeMap<String, i64>, line: u32) -> Result<i64, ToyError> {
    match e {
        Expr::Lit(n) => Ok(*n),
        Expr::Var(v) => env.get(v).copied().ok_or_else(|| ToyError::UseBeforeDef {
            var: v.clone(),
            line,
        }),
        Expr::Op { op, args, .. } => {
            let vals = args
                .iter()
                .map(|a| eval(a, env, line))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(mix(op, &vals))
        }
    }
}

struct Machine {
    env: BTreeMap<String, i64>,
    outputs: Vec<i64>,
}

impl Machine {
    /// Runs a block; returns the line of the `return` taken, if any.
    /// Definitions local to a nested block are dropped when it ends.
    fn block(&mut self, stmts: &[Stmt], nested: bool) -> Result<Option<u32>, ToyError> {
        let outer: Vec<String> = self.env.keys().cloned().collect();
        for s in stmts {
            match s {
                Stmt::Input { .. } => {}
                Stmt::Assign {
                    line, target, value, ..
                } => {
                    let v = eval(value, &self.env, *line)?;
                    self.env.insert(target.clone(), v);
                }
                Stmt::Output { line, value } => {
                    let v = eval(value, &self.env, *line)?;
                    self.outputs.push(v);
                }
                Stmt::Return { line } => return Ok(Some(*line)),
                Stmt::If {
                    line,
                    var,
                    negated,
                    body,
                    ..
                } => {
                    let cond = eval(&Expr::Var(var.clone()), &self.env, *line)? != 0;
                    if cond != *negated {
                        if let Some(exit) = self.block(body, true)? {
                            return Ok(Some(exit));
                        }
                    }
                }
            }
        }
        if nested {
            self.env.retain(|k, _| outer.contains(k));
        }
        Ok(None)
    }
}

/// Runs `p` with the given values for its free variables.
pub fn interpret(p: &ToyProgram, inputs: &BTreeMap<String, i64>) -> Result<ExecState, ToyError> {
    let mut env = BTreeMap::new();
    for v in p.free_vars() {
        let value = inputs
            .get(&v)
            .copied()
            .ok_or_else(|| ToyError::MissingInput(v.clone()))?;
        env.insert(v, value);
    }
    let mut m = Machine {
        env,
        outputs: Vec::new(),
    };
    let exit = m.block(&p.stmts, false)?;
    let exit_line = exit.unwrap_or(p.end_line + 1);
    let exit_ordinal = p
        .exit_lines()
        .iter()
        .position(|l| *l == exit_line)
        .expect("exit line is listed");
    Ok(ExecState {
        env: m.env,
        outputs: m.outputs,
        exit_line,
        exit_ordinal,
    })
}
