//! Line-oriented scenario scripts.
//!
//! ```text
//! deployer <actor>                      # optional, before any step
//! time <seconds>
//! env <ident>=<int> ...
//! call <transition> as <actor> [n=<int>] [g<k>=<bool>] [tg:<timed>=<bool>]
//!      [reenter=<transition>] [reenter_n=<int>] [reenter_as=<actor>]
//!      [probe=<ok|revert:Reason>] [expect <ok|revert:Reason>]
//! admin <add|remove> <actor> by <actor> [expect <ok|revert[:Reason]>]
//! assert state=<S> | counter=<n> | admin(<actor>)=<bool> | now=<n>
//! ```

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

use super::{
    ActorId, AdminAction, Invocation, Outcome, OutcomeKind, RevertReason, SimConfig, SimError,
    SimSession,
};
use crate::model::is_identifier;
use crate::plugins::WovenContract;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub state: String,
    pub counter: u64,
    pub admins: Vec<ActorId>,
    pub now: u64,
}

impl fmt::Display for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "state={} counter={} admins=[{}] now={}",
            self.state,
            self.counter,
            self.admins.join(","),
            self.now
        )
    }
}

/// Expected outcome. `Revert(None)` accepts any revert reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Expect {
    Ok,
    Revert(Option<RevertReason>),
}

impl Expect {
    fn matches(self, kind: OutcomeKind) -> bool {
        match (self, kind) {
            (Expect::Ok, OutcomeKind::Executed) => true,
            (Expect::Revert(None), OutcomeKind::Reverted(_)) => true,
            (Expect::Revert(Some(want)), OutcomeKind::Reverted(got)) => want == got,
            _ => false,
        }
    }
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expect::Ok => f.write_str("ok"),
            Expect::Revert(None) => f.write_str("revert"),
            Expect::Revert(Some(r)) => write!(f, "revert:{r}"),
        }
    }
}

fn parse_expect(text: &str) -> Result<Expect, String> {
    match text {
        "ok" => Ok(Expect::Ok),
        "revert" => Ok(Expect::Revert(None)),
        other => match other.strip_prefix("revert:") {
            Some(reason) => Ok(Expect::Revert(Some(reason.parse()?))),
            None => Err(format!("expected `ok` or `revert:<Reason>`, found `{other}`")),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assertion {
    State(String),
    Counter(u64),
    Admin(ActorId, bool),
    Now(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Time(u64),
    Env(Vec<(String, BigInt)>),
    Call {
        invocation: Invocation,
        probe_expect: Option<Expect>,
        expect: Option<Expect>,
    },
    Admin {
        action: AdminAction,
        target: ActorId,
        sender: ActorId,
        expect: Option<Expect>,
    },
    Assert(Vec<Assertion>),
}

/// A parsed script line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    pub line: usize,
    pub text: String,
    pub step: Step,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepReport {
    /// 1-based step number.
    pub index: usize,
    /// 1-based line in the script.
    pub line: usize,
    pub text: String,
    pub ok: bool,
    /// `ok` / `revert:<Reason>` for calls and admin actions.
    pub outcome: Option<String>,
    pub message: Option<String>,
    pub snapshot: Snapshot,
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} (line {}): {} [{}]",
            self.index,
            self.line,
            self.text,
            if self.ok { "pass" } else { "FAIL" }
        )?;
        if let Some(o) = &self.outcome {
            write!(f, " -> {o}")?;
        }
        if let Some(m) = &self.message {
            write!(f, ": {m}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub steps: Vec<StepReport>,
    pub final_snapshot: Snapshot,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &StepReport> {
        self.steps.iter().filter(|s| !s.ok)
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        let failed = self.failures().count();
        writeln!(f, "final {}", self.final_snapshot)?;
        write!(
            f,
            "{} step(s), {} failed",
            self.steps.len(),
            failed
        )
    }
}

fn syntax(line: usize, message: impl Into<String>) -> SimError {
    SimError::ScenarioSyntax {
        line,
        message: message.into(),
    }
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected `true` or `false`, found `{other}`")),
    }
}

fn parse_u64(text: &str) -> Result<u64, String> {
    text.parse()
        .map_err(|_| format!("expected a nonnegative integer, found `{text}`"))
}

fn actor(text: Option<&str>) -> Result<ActorId, String> {
    match text {
        Some(a) if !a.is_empty() => Ok(a.to_string()),
        _ => Err("missing actor".into()),
    }
}

fn parse_call(words: &[&str]) -> Result<Step, String> {
    let [name, as_kw, sender, rest @ ..] = words else {
        return Err("expected `call <transition> as <actor> ...`".into());
    };
    if *as_kw != "as" {
        return Err(format!("expected `as`, found `{as_kw}`"));
    }
    let mut invocation = Invocation::new(*name, actor(Some(sender))?);
    let mut probe: Option<Invocation> = None;
    let mut probe_n = None;
    let mut probe_as = None;
    let mut probe_expect = None;
    let mut expect = None;
    let mut i = 0;
    while i < rest.len() {
        let w = rest[i];
        i += 1;
        if w == "expect" {
            let e = rest.get(i).ok_or("`expect` needs a value")?;
            expect = Some(parse_expect(e)?);
            i += 1;
            continue;
        }
        let (key, value) = w
            .split_once('=')
            .ok_or_else(|| format!("unexpected `{w}`"))?;
        match key {
            "n" => invocation.next_transition_number = Some(parse_u64(value)?),
            "reenter" => probe = Some(Invocation::new(value, String::new())),
            "reenter_n" => probe_n = Some(parse_u64(value)?),
            "reenter_as" => probe_as = Some(actor(Some(value))?),
            "probe" => probe_expect = Some(parse_expect(value)?),
            k if k.starts_with("tg:") => {
                invocation
                    .timed_overrides
                    .insert(k[3..].to_string(), parse_bool(value)?);
            }
            k if k.starts_with('g') && k.len() > 1 && k[1..].bytes().all(|b| b.is_ascii_digit()) => {
                let idx: usize = k[1..].parse().map_err(|_| format!("bad guard index `{k}`"))?;
                invocation.guard_overrides.insert(idx, parse_bool(value)?);
            }
            other => return Err(format!("unknown call option `{other}`")),
        }
    }
    match probe {
        Some(mut p) => {
            p.sender = probe_as.unwrap_or_else(|| invocation.sender.clone());
            p.next_transition_number = probe_n;
            invocation.reentry_probe = Some(Box::new(p));
        }
        None if probe_n.is_some() || probe_as.is_some() || probe_expect.is_some() => {
            return Err("probe options need `reenter=<transition>`".into())
        }
        None => {}
    }
    Ok(Step::Call {
        invocation,
        probe_expect,
        expect,
    })
}

fn parse_assertion(word: &str) -> Result<Assertion, String> {
    let (key, value) = word
        .split_once('=')
        .ok_or_else(|| format!("expected `<what>=<value>`, found `{word}`"))?;
    match key {
        "state" if is_identifier(value) => Ok(Assertion::State(value.to_string())),
        "counter" => Ok(Assertion::Counter(parse_u64(value)?)),
        "now" => Ok(Assertion::Now(parse_u64(value)?)),
        k => match k.strip_prefix("admin(").and_then(|r| r.strip_suffix(')')) {
            Some(a) => Ok(Assertion::Admin(actor(Some(a))?, parse_bool(value)?)),
            None => Err(format!("cannot assert `{word}`")),
        },
    }
}

/// Parse one line. `Ok(None)` for blank and comment lines.
pub fn parse_step(text: &str) -> Result<Option<Step>, String> {
    let code = text.split('#').next().unwrap_or("");
    let words: Vec<&str> = code.split_whitespace().collect();
    let Some((&cmd, args)) = words.split_first() else {
        return Ok(None);
    };
    let step = match cmd {
        "time" => match args {
            [t] => Step::Time(parse_u64(t)?),
            _ => return Err("expected `time <seconds>`".into()),
        },
        "env" => {
            if args.is_empty() {
                return Err("expected `env <ident>=<int> ...`".into());
            }
            let mut binds = Vec::new();
            for a in args {
                let (k, v) = a
                    .split_once('=')
                    .ok_or_else(|| format!("expected `<ident>=<int>`, found `{a}`"))?;
                if !is_identifier(k) {
                    return Err(format!("`{k}` is not an identifier"));
                }
                let v: BigInt = v.parse().map_err(|_| format!("`{v}` is not an integer"))?;
                binds.push((k.to_string(), v));
            }
            Step::Env(binds)
        }
        "call" => parse_call(args)?,
        "admin" => match args {
            [action, target, "by", sender, rest @ ..] => {
                let expect = match rest {
                    [] => None,
                    ["expect", e] => Some(parse_expect(e)?),
                    _ => return Err("expected `expect <ok|revert>`".into()),
                };
                Step::Admin {
                    action: action.parse()?,
                    target: actor(Some(target))?,
                    sender: actor(Some(sender))?,
                    expect,
                }
            }
            _ => return Err("expected `admin <add|remove> <actor> by <actor>`".into()),
        },
        "assert" => {
            if args.is_empty() {
                return Err("`assert` needs at least one condition".into());
            }
            Step::Assert(args.iter().map(|a| parse_assertion(a)).collect::<Result<_, _>>()?)
        }
        other => return Err(format!("unknown command `{other}`")),
    };
    Ok(Some(step))
}

/// Parse a whole script: its session configuration and its steps.
pub fn parse_scenario(text: &str) -> Result<(SimConfig, Vec<ScriptLine>), SimError> {
    let mut config = SimConfig::default();
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let code = raw.split('#').next().unwrap_or("").trim();
        if let Some(rest) = code.strip_prefix("deployer") {
            if rest.starts_with(char::is_whitespace) || rest.is_empty() {
                if !steps.is_empty() {
                    return Err(syntax(line, "`deployer` must come before the first step"));
                }
                let words: Vec<&str> = rest.split_whitespace().collect();
                match words.as_slice() {
                    [a] => config.deployer = a.to_string(),
                    _ => return Err(syntax(line, "expected `deployer <actor>`")),
                }
                continue;
            }
        }
        if let Some(step) = parse_step(raw).map_err(|m| syntax(line, m))? {
            steps.push(ScriptLine {
                line,
                text: code.to_string(),
                step,
            });
        }
    }
    Ok((config, steps))
}

/// Executes steps one at a time against a session; shared by batch runs and
/// the interactive loop.
pub struct ScenarioRunner {
    pub session: SimSession,
    steps_run: usize,
}

impl ScenarioRunner {
    pub fn new(woven: Arc<WovenContract>, config: &SimConfig) -> Result<Self, SimError> {
        Ok(Self {
            session: SimSession::from_arc(woven, config)?,
            steps_run: 0,
        })
    }

    fn outcome_check(
        outcome: &Outcome,
        expect: Option<Expect>,
        probe_expect: Option<Expect>,
    ) -> Option<String> {
        let mut problems = Vec::new();
        if let Some(e) = expect {
            if !e.matches(outcome.kind) {
                problems.push(format!("expected {e}, got {}", outcome.kind));
            }
        }
        if let Some(pe) = probe_expect {
            match &outcome.reentry {
                Some(p) if pe.matches(p.kind) => {}
                Some(p) => problems.push(format!("expected probe {pe}, got {}", p.kind)),
                None => problems.push(format!("expected probe {pe}, but no probe ran")),
            }
        }
        (!problems.is_empty()).then(|| problems.join("; "))
    }

    pub fn exec(&mut self, line: usize, text: &str, step: &Step) -> StepReport {
        self.steps_run += 1;
        let s = &mut self.session;
        let mut outcome_text = None;
        let message: Option<String> = match step {
            Step::Time(t) => s.advance_time(*t).err().map(|e| format!("{}: {e}", e.code())),
            Step::Env(binds) => {
                for (k, v) in binds {
                    s.set_env(k.clone(), v.clone());
                }
                None
            }
            Step::Call {
                invocation,
                probe_expect,
                expect,
            } => {
                let result = if s.woven().base.transition(&invocation.transition).is_none() {
                    Ok(Outcome::reverted(RevertReason::UnknownTransition, None))
                } else {
                    s.invoke(invocation)
                };
                match result {
                    Ok(outcome) => {
                        let mut text = outcome.kind.to_string();
                        if !outcome.fired_timed.is_empty() {
                            text.push_str(&format!(" fired=[{}]", outcome.fired_timed.join(",")));
                        }
                        if !outcome.events.is_empty() {
                            text.push_str(&format!(" events=[{}]", outcome.events.join(",")));
                        }
                        if let Some(p) = &outcome.reentry {
                            text.push_str(&format!(" probe={}", p.kind));
                        }
                        outcome_text = Some(text);
                        Self::outcome_check(&outcome, *expect, *probe_expect)
                    }
                    Err(e) => Some(format!("{}: {e}", e.code())),
                }
            }
            Step::Admin {
                action,
                target,
                sender,
                expect,
            } => match s.admin_call(*action, target, sender) {
                Ok(outcome) => {
                    outcome_text = Some(outcome.kind.to_string());
                    Self::outcome_check(&outcome, *expect, None)
                }
                Err(e) => Some(format!("{}: {e}", e.code())),
            },
            Step::Assert(checks) => {
                let mut problems = Vec::new();
                for c in checks {
                    match c {
                        Assertion::State(want) if s.current_state().as_str() != want => problems
                            .push(format!("state is {}, expected {want}", s.current_state())),
                        Assertion::Counter(want) if s.transition_counter() != *want => problems
                            .push(format!(
                                "counter is {}, expected {want}",
                                s.transition_counter()
                            )),
                        Assertion::Now(want) if s.now() != *want => {
                            problems.push(format!("now is {}, expected {want}", s.now()))
                        }
                        Assertion::Admin(a, want) if s.is_admin(a) != *want => {
                            problems.push(format!("admin({a}) is {}, expected {want}", !want))
                        }
                        _ => {}
                    }
                }
                (!problems.is_empty()).then(|| problems.join("; "))
            }
        };
        StepReport {
            index: self.steps_run,
            line,
            text: text.to_string(),
            ok: message.is_none(),
            outcome: outcome_text,
            message,
            snapshot: self.session.snapshot(),
        }
    }
}

/// Parse and run a script. Syntax errors abort before any step runs;
/// failed expectations are recorded and later steps still run.
pub fn run_scenario_with(
    woven: Arc<WovenContract>,
    script: &str,
) -> Result<ScenarioReport, SimError> {
    let (config, lines) = parse_scenario(script)?;
    let mut runner = ScenarioRunner::new(woven, &config)?;
    let steps = lines
        .iter()
        .map(|l| runner.exec(l.line, &l.text, &l.step))
        .collect();
    Ok(ScenarioReport {
        steps,
        final_snapshot: runner.session.snapshot(),
    })
}

pub fn run_scenario(woven: &WovenContract, script: &str) -> Result<ScenarioReport, SimError> {
    run_scenario_with(Arc::new(woven.clone()), script)
}
