//! Guard evaluator against the independent oracle.

use std::collections::BTreeMap;

use fsmforge::sim::{eval_expr, EvalError, GuardEnv, Value};
use fsmforge::{parse_guard_expr, GuardAst, SolidityFragment};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

#[derive(Debug, PartialEq, Eq)]
pub enum Verdict {
    Agree,
    /// The oracle overflowed i128; nothing to compare.
    Skip,
}

pub fn bigints(vars: &BTreeMap<String, i128>) -> BTreeMap<String, BigInt> {
    vars.iter().map(|(k, v)| (k.clone(), BigInt::from(*v))).collect()
}

pub fn compare(
    ast: &GuardAst,
    now: u64,
    creation: u64,
    vars: &BTreeMap<String, i128>,
    big: &BTreeMap<String, BigInt>,
) -> Result<Verdict, String> {
    let ours = eval_expr(ast, &GuardEnv { now, creation_time: creation, env: big });
    let theirs = oracle(ast, &OracleEnv { now: now.into(), creation_time: creation.into(), vars });
    let agree = match (&ours, &theirs) {
        (_, Err(OracleError::Overflow)) => return Ok(Verdict::Skip),
        (Ok(Value::Int(a)), Ok(OracleValue::Int(b))) => *a == BigInt::from(*b),
        (Ok(Value::Bool(a)), Ok(OracleValue::Bool(b))) => a == b,
        (Err(EvalError::UnboundVar(a)), Err(OracleError::Unbound(b))) => a == b,
        (Err(EvalError::DivisionByZero), Err(OracleError::DivZero)) => true,
        (Err(EvalError::TypeMismatch(_)), Err(OracleError::Type)) => true,
        (Err(EvalError::MissingOverride), Err(OracleError::Opaque)) => true,
        _ => false,
    };
    if agree {
        Ok(Verdict::Agree)
    } else {
        Err(format!("{ast} with {vars:?}: ours {ours:?}, oracle {theirs:?}"))
    }
}

pub fn reparse(ast: &GuardAst) -> GuardAst {
    parse_guard_expr(&SolidityFragment::expr(ast.to_string()))
}

pub struct Tally {
    pub trees: usize,
    pub cases: usize,
    pub skipped: usize,
    pub mismatches: Vec<String>,
}

/// All trees of depth <= 2 over `a`, `b` and `1`, every valuation of `a`
/// and `b` in -2..=2. Reparsing the printed tree must give it back.
pub fn exhaustive() -> Tally {
    let leaves = [GuardAst::var("a"), GuardAst::var("b"), GuardAst::int(1)];
    let trees = all_trees(&leaves, 2);
    let mut valuations = Vec::new();
    for a in -2..=2 {
        for b in -2..=2 {
            let vars = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b)]);
            let big = bigints(&vars);
            valuations.push((vars, big));
        }
    }
    let mut t = Tally { trees: trees.len(), cases: 0, skipped: 0, mismatches: Vec::new() };
    for ast in &trees {
        if &reparse(ast) != ast {
            t.mismatches.push(format!("{ast} does not reparse"));
        }
        for (vars, big) in &valuations {
            t.cases += 1;
            match compare(ast, 0, 0, vars, big) {
                Ok(Verdict::Agree) => {}
                Ok(Verdict::Skip) => t.skipped += 1,
                Err(m) => t.mismatches.push(m),
            }
        }
    }
    t
}

/// `count` random trees of depth 4 to 7 with a clock and an unbound name.
pub fn random_deep(seed: u64, count: usize) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally { trees: count, cases: 0, skipped: 0, mismatches: Vec::new() };
    for _ in 0..count {
        let depth = rng.gen_range(4..=7);
        let ast = random_tree(&mut rng, depth, &["a", "b", "c"]);
        if reparse(&ast) != ast {
            t.mismatches.push(format!("{ast} does not reparse"));
        }
        let vars = BTreeMap::from([
            ("a".to_string(), rng.gen_range(-50..50)),
            ("b".to_string(), rng.gen_range(-50..50)),
        ]);
        let now = rng.gen_range(0..2_000_000);
        let creation = rng.gen_range(0..=now);
        t.cases += 1;
        match compare(&ast, now, creation, &vars, &bigints(&vars)) {
            Ok(Verdict::Agree) => {}
            Ok(Verdict::Skip) => t.skipped += 1,
            Err(m) => t.mismatches.push(m),
        }
    }
    t
}
