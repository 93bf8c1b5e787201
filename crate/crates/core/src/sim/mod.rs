//! Abstract execution of a woven contract.
//!
//! Every call runs against a speculative copy of the session state. A failed
//! check discards the copy, so a reverted call leaves the session exactly as
//! it was, including timed transitions that fired earlier in the same call.

mod eval;
mod scenario;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

pub use eval::{eval_expr, eval_guard, EvalError, GuardEnv, Value};
pub use scenario::{
    parse_scenario, parse_step, run_scenario, run_scenario_with, Assertion, Expect,
    ScenarioReport, ScenarioRunner, ScriptLine, Snapshot, Step, StepReport,
};

use crate::frontend::{parse_guard_expr, GuardAst};
use crate::model::{canonical_timed_order, StateId};
use crate::plugins::{WovenContract, COUNTER_MODIFIER};

/// Stands in for an address.
pub type ActorId = String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("{0}")]
    Usage(String),
    #[error("time cannot move backward from {now} to {to}")]
    TimeBackward { now: u64, to: u64 },
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("line {line}: {message}")]
    ScenarioSyntax { line: usize, message: String },
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::Usage(_) => "E_USAGE",
            SimError::TimeBackward { .. } => "E_TIME_BACKWARD",
            SimError::UnboundVar(_) => "E_UNBOUND_VAR",
            SimError::ScenarioSyntax { .. } => "E_SCENARIO_SYNTAX",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub creation_time: u64,
    pub deployer: ActorId,
    pub initial_time: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            creation_time: 0,
            deployer: "deployer".into(),
            initial_time: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RevertReason {
    Locked,
    WrongState,
    GuardFailed,
    CounterMismatch,
    NotAdmin,
    MissingOverride,
    UnknownTransition,
}

impl RevertReason {
    pub const ALL: [RevertReason; 7] = [
        RevertReason::Locked,
        RevertReason::WrongState,
        RevertReason::GuardFailed,
        RevertReason::CounterMismatch,
        RevertReason::NotAdmin,
        RevertReason::MissingOverride,
        RevertReason::UnknownTransition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RevertReason::Locked => "Locked",
            RevertReason::WrongState => "WrongState",
            RevertReason::GuardFailed => "GuardFailed",
            RevertReason::CounterMismatch => "CounterMismatch",
            RevertReason::NotAdmin => "NotAdmin",
            RevertReason::MissingOverride => "MissingOverride",
            RevertReason::UnknownTransition => "UnknownTransition",
        }
    }
}

impl fmt::Display for RevertReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RevertReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RevertReason::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown revert reason `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OutcomeKind {
    Executed,
    Reverted(RevertReason),
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeKind::Executed => f.write_str("ok"),
            OutcomeKind::Reverted(r) => write!(f, "revert:{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    /// Timed transitions that fired and persisted, in firing order.
    pub fired_timed: Vec<String>,
    pub events: Vec<String>,
    /// What happened to the reentry probe, when one was attempted.
    pub reentry: Option<Box<Outcome>>,
}

impl Outcome {
    fn reverted(reason: RevertReason, reentry: Option<Box<Outcome>>) -> Self {
        Self {
            kind: OutcomeKind::Reverted(reason),
            fired_timed: Vec::new(),
            events: Vec::new(),
            reentry,
        }
    }

    pub fn is_executed(&self) -> bool {
        self.kind == OutcomeKind::Executed
    }

    pub fn revert_reason(&self) -> Option<RevertReason> {
        match self.kind {
            OutcomeKind::Reverted(r) => Some(r),
            OutcomeKind::Executed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Invocation {
    pub transition: String,
    pub sender: ActorId,
    pub next_transition_number: Option<u64>,
    /// Values for opaque guards, by guard index.
    pub guard_overrides: BTreeMap<usize, bool>,
    /// Values for opaque timed-transition guards, by timed-transition name.
    pub timed_overrides: BTreeMap<String, bool>,
    /// A reentrant call attempted in the middle of the body.
    pub reentry_probe: Option<Box<Invocation>>,
}

impl Invocation {
    pub fn new(transition: impl Into<String>, sender: impl Into<ActorId>) -> Self {
        Self {
            transition: transition.into(),
            sender: sender.into(),
            ..Self::default()
        }
    }

    pub fn with_number(mut self, n: u64) -> Self {
        self.next_transition_number = Some(n);
        self
    }

    pub fn with_override(mut self, guard: usize, value: bool) -> Self {
        self.guard_overrides.insert(guard, value);
        self
    }

    pub fn with_probe(mut self, probe: Invocation) -> Self {
        self.reentry_probe = Some(Box::new(probe));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AdminAction {
    Add,
    Remove,
}

impl FromStr for AdminAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add" => Ok(AdminAction::Add),
            "remove" => Ok(AdminAction::Remove),
            other => Err(format!("unknown admin action `{other}`")),
        }
    }
}

/// Mutable session fields; cloned for every speculative call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionState {
    pub current_state: StateId,
    pub now: u64,
    pub creation_time: u64,
    pub locked: bool,
    pub transition_counter: u64,
    pub is_admin: BTreeSet<ActorId>,
    pub num_admins: u64,
    pub env: BTreeMap<String, BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvocationRecord {
    pub transition: String,
    pub sender: ActorId,
    pub outcome: Outcome,
}

#[derive(Debug)]
struct CompiledTimed {
    name: String,
    from: StateId,
    to: StateId,
    at: u64,
    guard: Option<GuardAst>,
}

/// One simulated contract instance.
#[derive(Debug, Clone)]
pub struct SimSession {
    woven: Arc<WovenContract>,
    guards: Arc<BTreeMap<String, Vec<GuardAst>>>,
    timed: Arc<Vec<CompiledTimed>>,
    state: SessionState,
    log: Vec<InvocationRecord>,
}

enum Attempt {
    Committed(SessionState, Outcome),
    Reverted(Outcome),
}

impl SimSession {
    pub fn new(woven: WovenContract, config: &SimConfig) -> Result<Self, SimError> {
        Self::from_arc(Arc::new(woven), config)
    }

    pub fn from_arc(woven: Arc<WovenContract>, config: &SimConfig) -> Result<Self, SimError> {
        if config.initial_time < config.creation_time {
            return Err(SimError::Usage(format!(
                "initial time {} is before creation time {}",
                config.initial_time, config.creation_time
            )));
        }
        if config.deployer.is_empty() {
            return Err(SimError::Usage("deployer must be nonempty".into()));
        }
        let model = &woven.base;
        let initial = model
            .initial_state
            .clone()
            .ok_or_else(|| SimError::Usage("the model has no initial state".into()))?;
        let guards = model
            .transitions
            .iter()
            .map(|t| (t.name.clone(), t.guards.iter().map(parse_guard_expr).collect()))
            .collect();
        let timed = canonical_timed_order(model)
            .into_iter()
            .map(|i| {
                let tt = &model.timed_transitions[i];
                CompiledTimed {
                    name: tt.name.clone(),
                    from: tt.from.clone(),
                    to: tt.to.clone(),
                    at: tt.time_offset_seconds,
                    guard: tt.guard.as_ref().map(parse_guard_expr),
                }
            })
            .collect();
        let (is_admin, num_admins) = if model.plugins.access_control {
            (BTreeSet::from([config.deployer.clone()]), 1)
        } else {
            (BTreeSet::new(), 0)
        };
        Ok(Self {
            guards: Arc::new(guards),
            timed: Arc::new(timed),
            state: SessionState {
                current_state: initial,
                now: config.initial_time,
                creation_time: config.creation_time,
                locked: false,
                transition_counter: 0,
                is_admin,
                num_admins,
                env: BTreeMap::new(),
            },
            log: Vec::new(),
            woven,
        })
    }

    pub fn woven(&self) -> &WovenContract {
        &self.woven
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn current_state(&self) -> &StateId {
        &self.state.current_state
    }

    pub fn now(&self) -> u64 {
        self.state.now
    }

    pub fn transition_counter(&self) -> u64 {
        self.state.transition_counter
    }

    pub fn is_admin(&self, actor: &str) -> bool {
        self.state.is_admin.contains(actor)
    }

    pub fn num_admins(&self) -> u64 {
        self.state.num_admins
    }

    pub fn log(&self) -> &[InvocationRecord] {
        &self.log
    }

    pub fn advance_time(&mut self, to: u64) -> Result<(), SimError> {
        if to < self.state.now {
            return Err(SimError::TimeBackward {
                now: self.state.now,
                to,
            });
        }
        self.state.now = to;
        Ok(())
    }

    pub fn set_env(&mut self, name: impl Into<String>, value: impl Into<BigInt>) {
        self.state.env.insert(name.into(), value.into());
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            state: self.state.current_state.to_string(),
            counter: self.state.transition_counter,
            admins: self.state.is_admin.iter().cloned().collect(),
            now: self.state.now,
        }
    }

    /// Run one call. Errors are usage problems and leave the session
    /// untouched; reverts are ordinary outcomes.
    pub fn invoke(&mut self, call: &Invocation) -> Result<Outcome, SimError> {
        match self.attempt(&self.state, call, 0)? {
            Attempt::Committed(next, outcome) => {
                self.state = next;
                self.log.push(InvocationRecord {
                    transition: call.transition.clone(),
                    sender: call.sender.clone(),
                    outcome: outcome.clone(),
                });
                Ok(outcome)
            }
            Attempt::Reverted(outcome) => Ok(outcome),
        }
    }

    fn check_usage(&self, call: &Invocation, depth: usize) -> Result<(), SimError> {
        let Some(t) = self.woven.base.transition(&call.transition) else {
            return Err(SimError::Usage(format!("unknown transition `{}`", call.transition)));
        };
        if call.sender.is_empty() {
            return Err(SimError::Usage("sender must be nonempty".into()));
        }
        if self.woven.base.plugins.counter && call.next_transition_number.is_none() {
            return Err(SimError::Usage(format!(
                "`{}` needs a transition number while the counter plugin is on",
                call.transition
            )));
        }
        if let Some(&k) = call.guard_overrides.keys().find(|&&k| k >= t.guards.len()) {
            return Err(SimError::Usage(format!(
                "`{}` has {} guard(s); no guard {k}",
                call.transition,
                t.guards.len()
            )));
        }
        if let Some(probe) = &call.reentry_probe {
            if depth > 0 {
                return Err(SimError::Usage("reentry probes are one level deep".into()));
            }
            self.check_usage(probe, depth + 1)?;
        }
        Ok(())
    }

    fn attempt(&self, pre: &SessionState, call: &Invocation, depth: usize) -> Result<Attempt, SimError> {
        self.check_usage(call, depth)?;
        let woven = &self.woven;
        let t = woven.base.transition(&call.transition).expect("checked");
        let chain = woven.chain(&t.name).cloned().unwrap_or_default();
        let mut st = pre.clone();
        let mut fired = Vec::new();
        let mut events = Vec::new();
        let mut reentry = None;

        macro_rules! revert {
            ($reason:expr) => {
                return Ok(Attempt::Reverted(Outcome::reverted($reason, reentry)))
            };
        }

        for m in chain.iter() {
            match m {
                "locking" => {
                    if st.locked {
                        revert!(RevertReason::Locked);
                    }
                    st.locked = true;
                }
                "timedTransitions" => {
                    for tt in self.timed.iter() {
                        let due = u128::from(st.creation_time) + u128::from(tt.at);
                        if st.current_state != tt.from || u128::from(st.now) < due {
                            continue;
                        }
                        let holds = match &tt.guard {
                            None => true,
                            Some(g) => match self.guard(g, &st, call.timed_overrides.get(&tt.name).copied())? {
                                Ok(b) => b,
                                Err(reason) => revert!(reason),
                            },
                        };
                        if holds {
                            st.current_state = tt.to.clone();
                            fired.push(tt.name.clone());
                        }
                    }
                }
                COUNTER_MODIFIER => {
                    if call.next_transition_number != Some(st.transition_counter) {
                        revert!(RevertReason::CounterMismatch);
                    }
                    st.transition_counter += 1;
                }
                "onlyAdmin" => {
                    if !st.is_admin.contains(&call.sender) {
                        revert!(RevertReason::NotAdmin);
                    }
                }
                event => {
                    if let Some(name) = event.strip_prefix("event") {
                        events.push(format!("Event{name}"));
                    }
                }
            }
        }

        if st.current_state != t.from {
            revert!(RevertReason::WrongState);
        }
        let guards = &self.guards[&t.name];
        for (k, g) in guards.iter().enumerate() {
            match self.guard(g, &st, call.guard_overrides.get(&k).copied())? {
                Ok(true) => {}
                Ok(false) => revert!(RevertReason::GuardFailed),
                Err(reason) => revert!(reason),
            }
        }

        if let Some(probe) = &call.reentry_probe {
            match self.attempt(&st, probe, depth + 1)? {
                Attempt::Committed(next, outcome) => {
                    st = next;
                    reentry = Some(Box::new(outcome));
                }
                Attempt::Reverted(outcome) => reentry = Some(Box::new(outcome)),
            }
        }

        st.current_state = t.to.clone();
        if chain.contains("locking") {
            st.locked = false;
        }
        Ok(Attempt::Committed(
            st,
            Outcome {
                kind: OutcomeKind::Executed,
                fired_timed: fired,
                events,
                reentry,
            },
        ))
    }

    /// `Ok(Ok(b))` for a decided guard, `Ok(Err(reason))` for a guard that
    /// reverts the call, `Err` for usage problems.
    fn guard(
        &self,
        g: &GuardAst,
        st: &SessionState,
        override_value: Option<bool>,
    ) -> Result<Result<bool, RevertReason>, SimError> {
        let view = GuardEnv {
            now: st.now,
            creation_time: st.creation_time,
            env: &st.env,
        };
        match eval_guard(g, &view, override_value) {
            Ok(b) => Ok(Ok(b)),
            Err(EvalError::MissingOverride) => Ok(Err(RevertReason::MissingOverride)),
            Err(EvalError::DivisionByZero) => Ok(Err(RevertReason::GuardFailed)),
            Err(EvalError::UnboundVar(name)) => Err(SimError::UnboundVar(name)),
            Err(EvalError::TypeMismatch(msg)) => Err(SimError::Usage(format!("guard `{g}`: {msg}"))),
        }
    }

    /// `addAdmin` / `removeAdmin`. These carry only `onlyAdmin`, so no lock
    /// or counter applies.
    pub fn admin_call(
        &mut self,
        action: AdminAction,
        target: &str,
        sender: &str,
    ) -> Result<Outcome, SimError> {
        if !self.woven.base.plugins.access_control {
            return Err(SimError::Usage("the access plugin is disabled".into()));
        }
        let st = &mut self.state;
        if !st.is_admin.contains(sender) {
            return Ok(Outcome::reverted(RevertReason::NotAdmin, None));
        }
        let ok = match action {
            AdminAction::Add if !st.is_admin.contains(target) => {
                st.is_admin.insert(target.to_string());
                st.num_admins += 1;
                true
            }
            AdminAction::Remove if st.is_admin.contains(target) && st.num_admins > 1 => {
                st.is_admin.remove(target);
                st.num_admins -= 1;
                true
            }
            _ => false,
        };
        if !ok {
            return Ok(Outcome::reverted(RevertReason::GuardFailed, None));
        }
        let outcome = Outcome {
            kind: OutcomeKind::Executed,
            fired_timed: Vec::new(),
            events: Vec::new(),
            reentry: None,
        };
        let name = match action {
            AdminAction::Add => "addAdmin",
            AdminAction::Remove => "removeAdmin",
        };
        self.log.push(InvocationRecord {
            transition: name.into(),
            sender: sender.into(),
            outcome: outcome.clone(),
        });
        Ok(outcome)
    }
}
