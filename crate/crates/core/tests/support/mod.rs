#![allow(dead_code)]

pub mod guards;
pub mod props;

use std::collections::BTreeMap;

use fsmforge::frontend::{BinaryOp, UnaryOp};
use fsmforge::{
    canonicalize, parse_dsl, ContractModel, GuardAst, Param, PluginConfig, SolidityFragment,
    StateId, StructDef, Tag, TimedTransition, Transition, VariableDecl, Visibility,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub const GOLDEN_FULL: &str = include_str!("../golden/blind_auction_locking_counter.sol");
pub const GOLDEN_STATES: &str = include_str!("../golden/states_definition.sol");
pub const GOLDEN_VARIABLES: &str = include_str!("../golden/variables_definition.sol");
pub const GOLDEN_BID: &str = include_str!("../golden/bid_plain.sol");
pub const GOLDEN_CLOSE: &str = include_str!("../golden/close_plain.sol");

pub fn corpus_model(name: &str) -> ContractModel {
    let text = fsmforge::corpus::get(name).unwrap_or_else(|| panic!("no corpus file {name}"));
    parse_dsl(text).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

const TYPES: &[&str] = &[
    "uint",
    "int8",
    "bool",
    "address",
    "bytes32",
    "uint[]",
    "mapping(address => uint)",
    "mapping(address => uint[])",
];

const GUARDS: &[&str] = &[
    "now >= creationTime + 3 days",
    "v0 > 1",
    "(v0 + 1) * 2 != 7 || !(v1 <= 3)",
    "values.length == secrets.length",
    "isAdmin2[msg.sender]",
    "keccak256(\"a)\") != 0",
    "v1 % 4 == 1\n        && v0 < 10",
];

const STATEMENTS: &[&str] = &[
    "v0 = 1;",
    "v1 += v0;",
    "if (v0 > v1) {\n        v0 = v1;\n    }",
    "// keep this comment\n    v0 -= 1;",
    "bids[msg.sender].push(Bid({\n            blindedBid: 0,\n            deposit: msg.value\n        }));",
    "label = \"}{ ) (\";",
    "/* block } comment */ v1 = 2;",
    "for (uint i = 0; i < 3; i++) {\n        v0 += i;\n    }",
];

fn params(rng: &mut impl Rng, prefix: &str, next: &mut usize, max: usize) -> Vec<Param> {
    (0..rng.gen_range(0..=max))
        .map(|_| {
            *next += 1;
            Param::new(*TYPES.choose(rng).unwrap(), format!("{prefix}{next}"))
        })
        .collect()
}

fn plugins(rng: &mut impl Rng) -> PluginConfig {
    PluginConfig {
        locking: rng.gen(),
        counter: rng.gen(),
        timed: rng.gen(),
        access_control: rng.gen(),
        events: rng.gen(),
    }
}

/// A random model that validates without errors (warnings allowed).
pub fn random_model(rng: &mut impl Rng) -> ContractModel {
    let mut m = ContractModel::new(format!("Gen{}", rng.gen_range(0..1000)));
    m.plugins = plugins(rng);
    let n_states = rng.gen_range(1..=5);
    m.states = (0..n_states)
        .map(|i| StateId::new(format!("S{i}")).unwrap())
        .collect();
    m.initial_state = Some(m.states[rng.gen_range(0..n_states)].clone());
    for i in 0..rng.gen_range(0..=2) {
        let mut next = 0;
        m.structs.push(StructDef {
            name: format!("Rec{i}"),
            members: params(rng, "f", &mut next, 3),
        });
    }
    for i in 0..rng.gen_range(0..=4) {
        m.variables.push(VariableDecl {
            name: format!("v{i}"),
            type_text: TYPES.choose(rng).unwrap().to_string(),
            visibility: if rng.gen() { Visibility::Public } else { Visibility::Private },
        });
    }
    let pick = |rng: &mut dyn rand::RngCore, states: &[StateId]| {
        states[rng.gen_range(0..states.len())].clone()
    };
    for i in 0..rng.gen_range(0..=6) {
        let mut t = Transition::new(format!("t{i}"), pick(rng, &m.states), pick(rng, &m.states));
        let mut next = 0;
        t.inputs = params(rng, "in", &mut next, 2);
        t.outputs = params(rng, "out", &mut next, 2);
        t.locals = params(rng, "loc", &mut next, 1);
        let mut tags = vec![Tag::Payable];
        if m.plugins.access_control {
            tags.push(Tag::Admin);
        }
        if m.plugins.events {
            tags.push(Tag::Event);
        }
        for tag in tags {
            if rng.gen_bool(0.3) {
                t.tags.push(tag);
            }
        }
        t.guards = (0..rng.gen_range(0..=3))
            .map(|_| SolidityFragment::expr(*GUARDS.choose(rng).unwrap()))
            .collect();
        t.statements = (0..rng.gen_range(0..=3))
            .map(|_| SolidityFragment::stmt(*STATEMENTS.choose(rng).unwrap()))
            .collect();
        m.transitions.push(t);
    }
    if m.plugins.timed {
        for i in 0..rng.gen_range(0..=4) {
            let guard = rng
                .gen_bool(0.6)
                .then(|| SolidityFragment::expr(*GUARDS[..3].choose(rng).unwrap()));
            m.timed_transitions.push(TimedTransition {
                name: format!("tt{i}"),
                guard,
                statements: (0..rng.gen_range(0..=2))
                    .map(|_| SolidityFragment::stmt(STATEMENTS[rng.gen_range(0..3)]))
                    .collect(),
                from: pick(rng, &m.states),
                to: pick(rng, &m.states),
                time_offset_seconds: [0, 60, 3600, 86400, 90061, 604800][rng.gen_range(0..6)],
            });
        }
    }
    canonicalize(m)
}

/// A model whose guards all fall inside the evaluable subset, over the
/// integer variables `x` and `y`.
pub fn sim_model(rng: &mut impl Rng, plugins: PluginConfig) -> ContractModel {
    const SIM_GUARDS: &[&str] = &["x > 0", "y <= 2", "x + y != 3", "now >= creationTime + 50", "x % 2 == 0"];
    let mut m = ContractModel::new("Sim");
    m.plugins = plugins;
    let n_states = rng.gen_range(2..=4);
    m.states = (0..n_states)
        .map(|i| StateId::new(format!("S{i}")).unwrap())
        .collect();
    m.initial_state = Some(m.states[0].clone());
    for name in ["x", "y"] {
        m.variables.push(VariableDecl {
            name: name.into(),
            type_text: "int".into(),
            visibility: Visibility::Private,
        });
    }
    for i in 0..rng.gen_range(1..=5) {
        let from = m.states[rng.gen_range(0..n_states)].clone();
        let to = m.states[rng.gen_range(0..n_states)].clone();
        let mut t = Transition::new(format!("t{i}"), from, to);
        if plugins.access_control && rng.gen_bool(0.4) {
            t.tags.push(Tag::Admin);
        }
        if plugins.events && rng.gen_bool(0.4) {
            t.tags.push(Tag::Event);
        }
        for _ in 0..rng.gen_range(0..=2) {
            t.guards.push(SolidityFragment::expr(*SIM_GUARDS.choose(rng).unwrap()));
        }
        if rng.gen_bool(0.2) {
            t.guards.push(SolidityFragment::expr("values.length > 0"));
        }
        m.transitions.push(t);
    }
    if plugins.timed {
        for i in 0..rng.gen_range(0..=3) {
            m.timed_transitions.push(TimedTransition {
                name: format!("tt{i}"),
                guard: rng
                    .gen_bool(0.5)
                    .then(|| SolidityFragment::expr(*SIM_GUARDS[..3].choose(rng).unwrap())),
                statements: Vec::new(),
                from: m.states[rng.gen_range(0..n_states)].clone(),
                to: m.states[rng.gen_range(0..n_states)].clone(),
                time_offset_seconds: rng.gen_range(0..100),
            });
        }
    }
    canonicalize(m)
}

// Independent guard oracle: a direct tree-walker over i128 with its own
// value type. Overflow is reported rather than wrapped.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleValue {
    Int(i128),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    Opaque,
    Unbound(String),
    DivZero,
    Type,
    Overflow,
}

pub struct OracleEnv<'a> {
    pub now: i128,
    pub creation_time: i128,
    pub vars: &'a BTreeMap<String, i128>,
}

pub fn oracle(ast: &GuardAst, env: &OracleEnv<'_>) -> Result<OracleValue, OracleError> {
    use OracleValue::{Bool, Int};
    // operands are evaluated left to right and each is type-checked as soon
    // as it is produced, so the first failure wins
    let int_of = |e: &GuardAst| match oracle(e, env)? {
        Int(v) => Ok(v),
        Bool(_) => Err(OracleError::Type),
    };
    let ints = |l: &GuardAst, r: &GuardAst| -> Result<(i128, i128), OracleError> {
        let a = int_of(l)?;
        Ok((a, int_of(r)?))
    };
    let checked = |v: Option<i128>| v.map(Int).ok_or(OracleError::Overflow);
    match ast {
        GuardAst::IntLit(v) | GuardAst::TimeLit(v) => {
            Ok(Int(v.to_string().parse().map_err(|_| OracleError::Overflow)?))
        }
        GuardAst::Now => Ok(Int(env.now)),
        GuardAst::CreationTime => Ok(Int(env.creation_time)),
        GuardAst::Var(name) => env
            .vars
            .get(name)
            .map(|v| Int(*v))
            .ok_or_else(|| OracleError::Unbound(name.clone())),
        GuardAst::Opaque(_) => Err(OracleError::Opaque),
        GuardAst::Unary(UnaryOp::Not, e) => match oracle(e, env)? {
            Bool(b) => Ok(Bool(!b)),
            Int(_) => Err(OracleError::Type),
        },
        GuardAst::Unary(UnaryOp::Neg, e) => match oracle(e, env)? {
            Int(v) => checked(v.checked_neg()),
            Bool(_) => Err(OracleError::Type),
        },
        GuardAst::Binary(op, l, r) => match op {
            BinaryOp::And | BinaryOp::Or => {
                let Bool(a) = oracle(l, env)? else {
                    return Err(OracleError::Type);
                };
                if a == (*op == BinaryOp::Or) {
                    return Ok(Bool(a));
                }
                match oracle(r, env)? {
                    Bool(b) => Ok(Bool(b)),
                    Int(_) => Err(OracleError::Type),
                }
            }
            BinaryOp::Eq | BinaryOp::Ne => {
                let same = match (oracle(l, env)?, oracle(r, env)?) {
                    (Int(a), Int(b)) => a == b,
                    (Bool(a), Bool(b)) => a == b,
                    _ => return Err(OracleError::Type),
                };
                Ok(Bool(if *op == BinaryOp::Eq { same } else { !same }))
            }
            BinaryOp::Add => {
                let (a, b) = ints(l, r)?;
                checked(a.checked_add(b))
            }
            BinaryOp::Sub => {
                let (a, b) = ints(l, r)?;
                checked(a.checked_sub(b))
            }
            BinaryOp::Mul => {
                let (a, b) = ints(l, r)?;
                checked(a.checked_mul(b))
            }
            BinaryOp::Div | BinaryOp::Rem => {
                let (a, b) = ints(l, r)?;
                if b == 0 {
                    return Err(OracleError::DivZero);
                }
                // i128 division truncates toward zero, as does its remainder.
                checked(if *op == BinaryOp::Div { a.checked_div(b) } else { a.checked_rem(b) })
            }
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                let (a, b) = ints(l, r)?;
                Ok(Bool(match op {
                    BinaryOp::Lt => a < b,
                    BinaryOp::Le => a <= b,
                    BinaryOp::Gt => a > b,
                    _ => a >= b,
                }))
            }
        },
    }
}

/// Every tree of depth at most `depth` over `leaves` (depth 0 = a leaf).
pub fn all_trees(leaves: &[GuardAst], depth: usize) -> Vec<GuardAst> {
    let mut levels: Vec<Vec<GuardAst>> = vec![leaves.to_vec()];
    for d in 1..=depth {
        let smaller: Vec<GuardAst> = levels.iter().flatten().cloned().collect();
        let newest = &levels[d - 1];
        let mut next = Vec::new();
        for e in newest {
            next.push(GuardAst::unary(UnaryOp::Not, e.clone()));
            next.push(GuardAst::unary(UnaryOp::Neg, e.clone()));
        }
        // at least one child from the previous level keeps depths exact
        for op in BinaryOp::ALL {
            for l in &smaller {
                for r in &smaller {
                    let l_new = newest.contains(l);
                    let r_new = newest.contains(r);
                    if l_new || r_new {
                        next.push(GuardAst::binary(op, l.clone(), r.clone()));
                    }
                }
            }
        }
        levels.push(next);
    }
    levels.into_iter().flatten().collect()
}

pub fn random_tree(rng: &mut impl Rng, depth: usize, vars: &[&str]) -> GuardAst {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..5) {
            0 => GuardAst::int(rng.gen_range(0..6)),
            1 if rng.gen() => {
                let unit = ["seconds", "minutes", "hours", "days", "weeks"].choose(rng).unwrap();
                let text = format!("{} {unit}", rng.gen_range(0..4));
                fsmforge::parse_guard_expr(&SolidityFragment::expr(text))
            }
            1 => GuardAst::Now,
            2 => GuardAst::CreationTime,
            _ => GuardAst::var(vars.choose(rng).unwrap()),
        };
    }
    if rng.gen_bool(0.2) {
        let op = if rng.gen() { UnaryOp::Not } else { UnaryOp::Neg };
        return GuardAst::unary(op, random_tree(rng, depth - 1, vars));
    }
    let op = *BinaryOp::ALL.choose(rng).unwrap();
    GuardAst::binary(op, random_tree(rng, depth - 1, vars), random_tree(rng, depth - 1, vars))
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/diagnostics")
}

/// Parse by extension, then validate when parsing succeeds.
pub fn diagnose(path: &std::path::Path) -> Vec<fsmforge::Diagnostic> {
    let text = std::fs::read_to_string(path).unwrap();
    let file = path.display().to_string();
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => fsmforge::frontend::parse_json_in(&text, &file).map(|m| (m, None)),
        _ => fsmforge::parse_dsl_with_sources(&text, &file).map(|(m, s)| (m, Some(s))),
    };
    match parsed {
        Ok((m, sources)) => fsmforge::validate_with_sources(&m, sources.as_ref()),
        Err(diags) => diags,
    }
}

// Simulation driving.

pub const ACTORS: [&str; 3] = ["deployer", "alice", "bob"];

#[derive(Debug, Clone)]
pub enum Op {
    Advance(u64),
    Env(&'static str, i64),
    Call(fsmforge::Invocation),
    Admin(fsmforge::AdminAction, String, String),
}

pub fn fresh_session(m: &ContractModel) -> fsmforge::SimSession {
    let mut s = fsmforge::SimSession::new(fsmforge::weave(m), &fsmforge::SimConfig::default()).unwrap();
    s.set_env("x", 0);
    s.set_env("y", 0);
    s
}

fn random_call(rng: &mut impl Rng, m: &ContractModel, counter: u64) -> fsmforge::Invocation {
    let t = m.transitions.choose(rng).unwrap();
    let mut call = fsmforge::Invocation::new(&t.name, *ACTORS.choose(rng).unwrap());
    if m.plugins.counter {
        let n = match rng.gen_range(0..6) {
            0 => counter + 1,
            1 => counter.saturating_sub(1),
            _ => counter,
        };
        call = call.with_number(n);
    }
    for (k, g) in t.guards.iter().enumerate() {
        if fsmforge::parse_guard_expr(g).is_opaque() && rng.gen_bool(0.9) {
            call = call.with_override(k, rng.gen_bool(0.7));
        }
    }
    call
}

pub fn random_op(rng: &mut impl Rng, m: &ContractModel, session: &fsmforge::SimSession) -> Op {
    match rng.gen_range(0..10) {
        0 | 1 => Op::Advance(session.now() + rng.gen_range(0..40)),
        2 => Op::Env(["x", "y"][rng.gen_range(0..2)], rng.gen_range(-3..=3)),
        3 if m.plugins.access_control => Op::Admin(
            if rng.gen() { fsmforge::AdminAction::Add } else { fsmforge::AdminAction::Remove },
            ACTORS.choose(rng).unwrap().to_string(),
            ACTORS.choose(rng).unwrap().to_string(),
        ),
        _ => {
            let counter = session.transition_counter();
            let mut call = random_call(rng, m, counter);
            if rng.gen_bool(0.3) {
                call = call.with_probe(random_call(rng, m, counter + 1));
            }
            Op::Call(call)
        }
    }
}

/// `Ok(None)` for operations that are not calls.
pub fn apply(
    session: &mut fsmforge::SimSession,
    op: &Op,
) -> Result<Option<fsmforge::Outcome>, fsmforge::SimError> {
    match op {
        Op::Advance(to) => session.advance_time(*to).map(|_| None),
        Op::Env(name, v) => {
            session.set_env(*name, *v);
            Ok(None)
        }
        Op::Call(call) => session.invoke(call).map(Some),
        Op::Admin(action, target, sender) => session.admin_call(*action, target, sender).map(Some),
    }
}

/// The state reached by scanning the timed transitions in ascending order
/// from `state`, with the names of those that fire. Guards go through the
/// independent oracle.
pub fn expected_timed(
    m: &ContractModel,
    state: &fsmforge::sim::SessionState,
) -> (StateId, Vec<String>) {
    let vars: BTreeMap<String, i128> = state
        .env
        .iter()
        .map(|(k, v)| (k.clone(), v.to_string().parse().unwrap()))
        .collect();
    let env = OracleEnv {
        now: state.now.into(),
        creation_time: state.creation_time.into(),
        vars: &vars,
    };
    let mut order: Vec<&TimedTransition> = m.timed_transitions.iter().collect();
    order.sort_by_key(|tt| tt.time_offset_seconds);
    let mut current = state.current_state.clone();
    let mut fired = Vec::new();
    for tt in order {
        if current != tt.from || state.now < state.creation_time + tt.time_offset_seconds {
            continue;
        }
        let holds = match &tt.guard {
            None => true,
            Some(g) => oracle(&fsmforge::parse_guard_expr(g), &env) == Ok(OracleValue::Bool(true)),
        };
        if holds {
            current = tt.to.clone();
            fired.push(tt.name.clone());
        }
    }
    (current, fired)
}

/// A contract with one self-looping transition and no guards, for probing
/// reentrancy.
pub fn drain_model(plugins: PluginConfig) -> ContractModel {
    let mut m = ContractModel::new("Vault");
    m.plugins = plugins;
    m.states = vec![StateId::new("Open").unwrap()];
    m.initial_state = Some(m.states[0].clone());
    let mut t = Transition::new("withdraw", m.states[0].clone(), m.states[0].clone());
    t.locals.push(Param::new("uint", "amount"));
    t.statements.push(SolidityFragment::stmt("msg.sender.transfer(amount);"));
    m.transitions.push(t);
    m
}

/// Lines of each user transition's function in generated text, from its
/// `//Transition` comment to the closing brace, keyed by transition name.
pub fn function_blocks(text: &str) -> Vec<(String, Vec<String>)> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    let mut open = false;
    let start = text.find("\n    //Transitions\n").map_or(text.len(), |i| i + 1);
    for line in text[start..].lines() {
        if let Some(name) = line.trim_start().strip_prefix("//Transition ") {
            out.push((name.trim().to_string(), Vec::new()));
            open = true;
        }
        if open {
            out.last_mut().unwrap().1.push(line.to_string());
            if line == "    }" {
                open = false;
            }
        }
    }
    out
}

/// Per-transition line counts under each plugin choice, for the additivity
/// check.
pub fn block_sizes(m: &ContractModel, plugins: PluginConfig) -> Vec<(String, usize)> {
    let text = fsmforge::generate(&fsmforge::weave(&m.clone().with_plugins(plugins)));
    function_blocks(&text)
        .into_iter()
        .map(|(name, lines)| (name, lines.len()))
        .collect()
}

/// Transitions whose line counts violate additivity of locking and counter.
pub fn additivity_violations(m: &ContractModel) -> Vec<String> {
    let none = block_sizes(m, PluginConfig::none());
    let lock = block_sizes(m, PluginConfig { locking: true, ..PluginConfig::none() });
    let count = block_sizes(m, PluginConfig { counter: true, ..PluginConfig::none() });
    let both = block_sizes(m, PluginConfig { locking: true, counter: true, ..PluginConfig::none() });
    let mut bad = Vec::new();
    for i in 0..none.len() {
        let (n, l, c, b) = (none[i].1 as i64, lock[i].1 as i64, count[i].1 as i64, both[i].1 as i64);
        if b - n != (l - n) + (c - n) || l - n != 1 || c - n != 1 {
            bad.push(none[i].0.clone());
        }
    }
    if none.len() != m.transitions.len() {
        bad.push("<function count>".into());
    }
    bad
}
