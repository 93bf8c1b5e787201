//! Plugin weaving: contract-level declarations, per-transition modifier
//! chains and injected parameters.

use indexmap::IndexMap;
use serde::Serialize;

use crate::model::{canonical_timed_order, ContractModel, Param, Plugin, Tag, TimedTransition, Transition};

/// Modifier invocations applied to one function, in application order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ModifierChain(pub Vec<String>);

impl ModifierChain {
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, modifier: &str) -> bool {
        self.0.iter().any(|m| m == modifier)
    }
}

/// A block of declarations contributed by one plugin, emitted under `banner`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractFragment {
    pub plugin: Plugin,
    pub banner: &'static str,
    /// Lines relative to the contract body indentation; nested lines carry
    /// their own extra indentation.
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WovenContract {
    pub base: ContractModel,
    pub contract_fragments: Vec<ContractFragment>,
    pub per_transition: IndexMap<String, ModifierChain>,
    pub injected_params: IndexMap<String, Vec<Param>>,
}

impl WovenContract {
    pub fn chain(&self, transition: &str) -> Option<&ModifierChain> {
        self.per_transition.get(transition)
    }

    /// Injected parameters followed by the transition's own inputs.
    pub fn signature_params(&self, t: &Transition) -> Vec<Param> {
        let mut out = self
            .injected_params
            .get(&t.name)
            .cloned()
            .unwrap_or_default();
        out.extend(t.inputs.iter().cloned());
        out
    }

    pub fn fragment(&self, plugin: Plugin) -> Option<&ContractFragment> {
        self.contract_fragments.iter().find(|f| f.plugin == plugin)
    }
}

pub const COUNTER_MODIFIER: &str = "transitionCounting(nextTransitionNumber)";

pub fn banner(plugin: Plugin) -> &'static str {
    match plugin {
        Plugin::Locking => "//Locking",
        Plugin::Counter => "//Transition counter",
        Plugin::Timed => "//Timed transitions",
        Plugin::AccessControl => "//Access control",
        Plugin::Events => "//Events",
    }
}

fn lines(text: &[&str]) -> Vec<String> {
    text.iter().map(|s| s.to_string()).collect()
}

fn locking_lines() -> Vec<String> {
    lines(&[
        "bool private locked = false;",
        "modifier locking {",
        "    require(!locked);",
        "    locked = true;",
        "    _;",
        "    locked = false;",
        "}",
    ])
}

fn counter_lines() -> Vec<String> {
    lines(&[
        "uint private transitionCounter = 0;",
        "modifier transitionCounting(uint nextTransitionNumber) {",
        "    require(nextTransitionNumber == transitionCounter);",
        "    transitionCounter += 1;",
        "    _;",
        "}",
    ])
}

fn timed_block(tt: &TimedTransition, out: &mut Vec<String>) {
    let from = format!("if ((state == States.{})", tt.from);
    let time = format!("&& (now >= creationTime + {})", tt.time_offset_seconds);
    match &tt.guard {
        Some(g) if !g.text.trim().is_empty() => {
            out.push(format!("    {from}"));
            out.push(format!("        {time}"));
            let mut guard = g.dedented_lines();
            let last = guard.len() - 1;
            guard[0] = format!("&& ({}", guard[0]);
            guard[last].push_str(")) {");
            for line in guard {
                out.push(format!("        {line}"));
            }
        }
        _ => {
            out.push(format!("    {from}"));
            out.push(format!("        {time}) {{"));
        }
    }
    for s in &tt.statements {
        for line in s.dedented_lines() {
            out.push(format!("        {line}"));
        }
    }
    out.push(format!("        state = States.{};", tt.to));
    out.push("    }".into());
}

fn timed_lines(model: &ContractModel) -> Vec<String> {
    let mut out = vec!["modifier timedTransitions {".to_string()];
    for i in canonical_timed_order(model) {
        timed_block(&model.timed_transitions[i], &mut out);
    }
    out.push("    _;".into());
    out.push("}".into());
    out
}

fn access_lines(contract: &str) -> Vec<String> {
    let mut out = lines(&[
        "mapping(address => bool) private isAdmin;",
        "uint private numAdmins = 1;",
        "",
    ]);
    out.push(format!("function {contract}() {{"));
    out.extend(lines(&[
        "    isAdmin[msg.sender] = true;",
        "}",
        "",
        "modifier onlyAdmin {",
        "    require(isAdmin[msg.sender]);",
        "    _;",
        "}",
        "",
        "function addAdmin(address admin) onlyAdmin {",
        "    require(!isAdmin[admin]);",
        "    isAdmin[admin] = true;",
        "    numAdmins += 1;",
        "}",
        "",
        "function removeAdmin(address admin) onlyAdmin {",
        "    require(isAdmin[admin]);",
        "    require(numAdmins > 1);",
        "    isAdmin[admin] = false;",
        "    numAdmins -= 1;",
        "}",
    ]));
    out
}

fn event_lines(model: &ContractModel) -> Vec<String> {
    let mut out = Vec::new();
    for t in model.transitions.iter().filter(|t| t.has_tag(&Tag::Event)) {
        out.push(format!("event Event{};", t.name));
        out.push(format!("modifier event{} {{", t.name));
        out.push("    _;".into());
        out.push(format!("    Event{}();", t.name));
        out.push("}".into());
    }
    out
}

/// Apply the enabled plugins. Expects a model that validates clean.
pub fn weave(model: &ContractModel) -> WovenContract {
    let p = model.plugins;
    let mut contract_fragments = Vec::new();
    for plugin in p.enabled() {
        let lines = match plugin {
            Plugin::Locking => locking_lines(),
            Plugin::Counter => counter_lines(),
            Plugin::Timed => timed_lines(model),
            Plugin::AccessControl => access_lines(&model.name),
            Plugin::Events => event_lines(model),
        };
        if !lines.is_empty() {
            contract_fragments.push(ContractFragment {
                plugin,
                banner: banner(plugin),
                lines,
            });
        }
    }

    let mut per_transition = IndexMap::new();
    let mut injected_params = IndexMap::new();
    for t in &model.transitions {
        let mut chain = Vec::new();
        if p.locking {
            chain.push("locking".to_string());
        }
        if p.timed {
            chain.push("timedTransitions".to_string());
        }
        if p.counter {
            chain.push(COUNTER_MODIFIER.to_string());
        }
        if p.access_control && t.has_tag(&Tag::Admin) {
            chain.push("onlyAdmin".to_string());
        }
        if p.events && t.has_tag(&Tag::Event) {
            chain.push(format!("event{}", t.name));
        }
        per_transition.insert(t.name.clone(), ModifierChain(chain));
        let injected = if p.counter {
            vec![Param::new("uint", "nextTransitionNumber")]
        } else {
            Vec::new()
        };
        injected_params.insert(t.name.clone(), injected);
    }

    WovenContract {
        base: model.clone(),
        contract_fragments,
        per_transition,
        injected_params,
    }
}

/// The `require` line for a transition's guards; empty when it has none.
pub fn guard_conjunction(t: &Transition) -> String {
    match t.guards.as_slice() {
        [] => String::new(),
        [g] => format!("require({});", g.text),
        gs => {
            let parts: Vec<String> = gs.iter().map(|g| format!("({})", g.text)).collect();
            format!("require( {} );", parts.join(" && "))
        }
    }
}
