//! Simulator properties as plain checks, shared by the property tests and
//! the acceptance run.

use std::collections::BTreeSet;
use std::sync::Arc;

use fsmforge::{
    weave, AdminAction, ContractModel, Invocation, Outcome, OutcomeKind, PluginConfig, RevertReason, SimConfig,
    SimError, SimSession, StateId, Tag, Transition,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub const STEPS: usize = 40;

pub fn plugins_from(bits: u8) -> PluginConfig {
    PluginConfig {
        locking: bits & 1 != 0,
        counter: bits & 2 != 0,
        timed: bits & 4 != 0,
        access_control: bits & 8 != 0,
        events: bits & 16 != 0,
    }
}

type StepCheck<'a> =
    dyn FnMut(&ContractModel, &SimSession, &Op, &Result<Option<Outcome>, SimError>, &SimSession) -> Check + 'a;

/// Run a random walk, handing each step's before/after to `check`.
pub fn walk(seed: u64, plugins: PluginConfig, check: &mut StepCheck<'_>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = sim_model(&mut rng, plugins);
    let mut session = fresh_session(&m);
    for step in 0..STEPS {
        let op = random_op(&mut rng, &m, &session);
        let before = session.clone();
        let result = apply(&mut session, &op);
        check(&m, &before, &op, &result, &session).map_err(|e| format!("seed {seed} step {step} {op:?}: {e}"))?;
    }
    Ok(())
}

pub fn transactional(seed: u64, plugins: PluginConfig) -> Check {
    walk(seed, plugins, &mut |_, before, _, result, after| {
        match result {
            Ok(Some(o)) if !o.is_executed() => {
                ensure!(before.state() == after.state(), "revert changed the session");
                ensure!(before.log().len() == after.log().len(), "revert was logged");
            }
            Ok(Some(_)) => ensure!(before.log().len() + 1 == after.log().len(), "success not logged"),
            Ok(None) => {}
            Err(e) => {
                ensure!(before.state() == after.state(), "error {e} changed the session");
                ensure!(before.log().len() == after.log().len(), "error {e} was logged");
            }
        }
        Ok(())
    })
}

pub fn counter_sequencing(seed: u64, plugins: PluginConfig) -> Check {
    let plugins = PluginConfig { counter: true, ..plugins };
    let mut expected = 0u64;
    walk(seed, plugins, &mut |_, before, op, result, after| {
        ensure!(before.transition_counter() == expected, "counter drifted");
        if let (Op::Call(call), Ok(Some(o))) = (op, result) {
            let n = call.next_transition_number.unwrap();
            if o.is_executed() {
                ensure!(n == expected, "call with n={n} ran at counter {expected}");
                expected += 1;
                if matches!(o.reentry.as_deref(), Some(r) if r.is_executed()) {
                    expected += 1;
                }
            } else if n != expected {
                ensure!(
                    o.kind == OutcomeKind::Reverted(RevertReason::CounterMismatch),
                    "n={n} at counter {expected} gave {}",
                    o.kind
                );
            }
        }
        ensure!(after.transition_counter() == expected, "counter is {}, expected {expected}", after.transition_counter());
        Ok(())
    })
}

pub fn locking_safety(seed: u64, plugins: PluginConfig) -> Check {
    let plugins = PluginConfig { locking: true, ..plugins };
    walk(seed, plugins, &mut |_, _, _, result, after| {
        ensure!(!after.state().locked, "lock left held");
        if let Ok(Some(o)) = result {
            if let Some(probe) = &o.reentry {
                ensure!(
                    probe.kind == OutcomeKind::Reverted(RevertReason::Locked),
                    "probe got {}",
                    probe.kind
                );
            }
        }
        Ok(())
    })
}

/// With locking off, a reentrant call into a self-loop goes through.
pub fn reentry_witness(plugins: PluginConfig, sender: usize) -> Check {
    let plugins = PluginConfig { locking: false, ..plugins };
    let m = drain_model(plugins);
    let mut session = fresh_session(&m);
    let actor = if plugins.access_control { "deployer" } else { ACTORS[sender % ACTORS.len()] };
    let mut call = Invocation::new("withdraw", actor);
    let mut probe = Invocation::new("withdraw", actor);
    if plugins.counter {
        call = call.with_number(0);
        probe = probe.with_number(1);
    }
    let o = session.invoke(&call.with_probe(probe)).map_err(|e| e.to_string())?;
    ensure!(o.is_executed(), "outer call gave {}", o.kind);
    let probe = o.reentry.map(|r| r.kind);
    ensure!(probe == Some(OutcomeKind::Executed), "probe gave {probe:?}");
    ensure!(session.log().len() == 1, "log has {} entries", session.log().len());
    Ok(())
}

pub fn timed_ordering(seed: u64, plugins: PluginConfig) -> Check {
    let plugins = PluginConfig { timed: true, ..plugins };
    walk(seed, plugins, &mut |m, before, op, result, _| {
        let (Op::Call(call), Ok(Some(o))) = (op, result) else { return Ok(()) };
        let t = m.transition(&call.transition).unwrap();
        let (post, fired) = expected_timed(m, before.state());
        let counter_ok = !m.plugins.counter || call.next_transition_number == Some(before.transition_counter());
        let admin_ok = !t.has_tag(&Tag::Admin) || before.is_admin(&call.sender);
        if o.is_executed() {
            ensure!(o.fired_timed == fired, "fired {:?}, expected {fired:?}", o.fired_timed);
            ensure!(post == t.from, "body ran from {post}, needs {}", t.from);
        }
        if counter_ok && admin_ok {
            let wrong = o.kind == OutcomeKind::Reverted(RevertReason::WrongState);
            ensure!(wrong == (post != t.from), "state check saw the wrong state: {}", o.kind);
        }
        let mut seen = BTreeSet::new();
        ensure!(o.fired_timed.iter().all(|n| seen.insert(n)), "a timed transition fired twice");
        Ok(())
    })
}

pub fn admin_floor(seed: u64, ops: &[(bool, usize, usize)]) -> Check {
    let plugins = PluginConfig { access_control: true, ..plugins_from((seed % 32) as u8) };
    let m = sim_model(&mut ChaCha8Rng::seed_from_u64(seed), plugins);
    let mut session = fresh_session(&m);
    for &(add, target, sender) in ops {
        let action = if add { AdminAction::Add } else { AdminAction::Remove };
        let before = session.num_admins();
        let o = session
            .admin_call(action, ACTORS[target % 3], ACTORS[sender % 3])
            .map_err(|e| e.to_string())?;
        ensure!(session.num_admins() >= 1, "no admins left");
        ensure!(session.num_admins() as usize == session.state().is_admin.len(), "admin count out of sync");
        if !o.is_executed() {
            ensure!(session.num_admins() == before, "rejected admin call changed the count");
        }
    }
    Ok(())
}

/// Every assignment of numbers `0..k` to `k` calls, for `k <= 5`, against a
/// counter-only contract. Returns the number of sequences run.
pub fn counter_permutations() -> Result<usize, String> {
    let mut m = drain_model(PluginConfig { counter: true, ..PluginConfig::none() });
    let s = StateId::new("Open").unwrap();
    for i in 1..5 {
        m.transitions.push(Transition::new(format!("t{i}"), s.clone(), s.clone()));
    }
    let woven = Arc::new(weave(&m));
    let names: Vec<String> = m.transitions.iter().map(|t| t.name.clone()).collect();
    let mut runs = 0;
    for k in 1..=5usize {
        for code in 0..k.pow(k as u32) {
            let numbers: Vec<u64> = (0..k).map(|i| ((code / k.pow(i as u32)) % k) as u64).collect();
            let mut session = SimSession::from_arc(woven.clone(), &SimConfig::default()).unwrap();
            let mut counter = 0u64;
            for (i, &n) in numbers.iter().enumerate() {
                let o = session
                    .invoke(&Invocation::new(&names[i], "alice").with_number(n))
                    .map_err(|e| e.to_string())?;
                ensure!(o.is_executed() == (n == counter), "{numbers:?} at call {i}: {}", o.kind);
                if o.is_executed() {
                    counter += 1;
                }
            }
            ensure!(session.transition_counter() == counter, "{numbers:?}: final counter");
            runs += 1;
        }
    }
    Ok(runs)
}
