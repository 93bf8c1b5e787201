//! In-memory contract model: states, contract variables, transitions, timed
//! transitions and the plugin selection.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

/// Returns true when `s` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StateId(String);

impl StateId {
    pub fn new(name: impl Into<String>) -> Result<Self, String> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(Self(name))
        } else {
            Err(format!("`{name}` is not a valid state name"))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    Private,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Private => "private",
        }
    }
}

impl FromStr for Visibility {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "public" => Ok(Visibility::Public),
            "private" => Ok(Visibility::Private),
            other => Err(format!("unknown visibility `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VariableDecl {
    pub name: String,
    pub type_text: String,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Param {
    pub name: String,
    pub type_text: String,
}

impl Param {
    pub fn new(type_text: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            type_text: type_text.into(),
        }
    }

    /// `<type> <name>`, as written in a parameter list or declaration.
    pub fn declaration(&self) -> String {
        format!("{} {}", self.type_text, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StructDef {
    pub name: String,
    pub members: Vec<Param>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FragmentKind {
    Expr,
    Stmt,
}

/// Verbatim Solidity source carried through the compiler untouched.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SolidityFragment {
    pub text: String,
    pub kind: FragmentKind,
}

impl SolidityFragment {
    pub fn expr(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            kind: FragmentKind::Expr,
        }
    }

    pub fn stmt(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            kind: FragmentKind::Stmt,
        }
    }

    /// Lines of the fragment with continuation lines dedented by their
    /// common leading whitespace. The first line is already trimmed by the
    /// parsers, so this restores the relative layout of multi-line fragments.
    pub fn dedented_lines(&self) -> Vec<String> {
        let mut lines = self.text.lines();
        let Some(first) = lines.next() else {
            return Vec::new();
        };
        let rest: Vec<&str> = lines.collect();
        let strip = rest
            .iter()
            .filter(|l| !l.trim().is_empty())
            .map(|l| leading_blank(l))
            .min()
            .unwrap_or(0);
        let mut out = vec![first.trim_end().to_string()];
        for line in rest {
            if line.trim().is_empty() {
                out.push(String::new());
            } else {
                let cut = strip.min(leading_blank(line));
                out.push(line[cut..].trim_end().to_string());
            }
        }
        out
    }
}

fn leading_blank(line: &str) -> usize {
    line.len() - line.trim_start_matches([' ', '\t']).len()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Tag {
    Payable,
    Admin,
    Event,
    /// Any tag outside the supported set; reported by validation.
    Other(String),
}

impl Tag {
    pub fn as_str(&self) -> &str {
        match self {
            Tag::Payable => "payable",
            Tag::Admin => "admin",
            Tag::Event => "event",
            Tag::Other(s) => s,
        }
    }
}

impl From<&str> for Tag {
    fn from(s: &str) -> Self {
        match s {
            "payable" => Tag::Payable,
            "admin" => Tag::Admin,
            "event" => Tag::Event,
            other => Tag::Other(other.to_string()),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Transition {
    pub name: String,
    pub guards: Vec<SolidityFragment>,
    pub inputs: Vec<Param>,
    pub outputs: Vec<Param>,
    /// Local declarations emitted at the top of the function body, before the
    /// state check.
    pub locals: Vec<Param>,
    pub statements: Vec<SolidityFragment>,
    pub from: StateId,
    pub to: StateId,
    pub tags: Vec<Tag>,
}

impl Transition {
    pub fn new(name: impl Into<String>, from: StateId, to: StateId) -> Self {
        Self {
            name: name.into(),
            guards: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            locals: Vec::new(),
            statements: Vec::new(),
            from,
            to,
            tags: Vec::new(),
        }
    }

    pub fn has_tag(&self, tag: &Tag) -> bool {
        self.tags.contains(tag)
    }
}

/// A transition fired automatically once `now >= creationTime + time_offset_seconds`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TimedTransition {
    pub name: String,
    pub guard: Option<SolidityFragment>,
    pub statements: Vec<SolidityFragment>,
    pub from: StateId,
    pub to: StateId,
    pub time_offset_seconds: u64,
}

/// The five plugins, in canonical application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Plugin {
    Locking,
    Counter,
    Timed,
    AccessControl,
    Events,
}

impl Plugin {
    pub const ALL: [Plugin; 5] = [
        Plugin::Locking,
        Plugin::Counter,
        Plugin::Timed,
        Plugin::AccessControl,
        Plugin::Events,
    ];

    /// Name used in the DSL `plugins` block and on the command line.
    pub fn as_str(self) -> &'static str {
        match self {
            Plugin::Locking => "locking",
            Plugin::Counter => "counter",
            Plugin::Timed => "timed",
            Plugin::AccessControl => "access",
            Plugin::Events => "events",
        }
    }
}

impl FromStr for Plugin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Plugin::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown plugin `{s}` (expected locking, counter, timed, access or events)"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct PluginConfig {
    pub locking: bool,
    pub counter: bool,
    pub timed: bool,
    pub access_control: bool,
    pub events: bool,
}

impl PluginConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_enabled(&self, plugin: Plugin) -> bool {
        match plugin {
            Plugin::Locking => self.locking,
            Plugin::Counter => self.counter,
            Plugin::Timed => self.timed,
            Plugin::AccessControl => self.access_control,
            Plugin::Events => self.events,
        }
    }

    pub fn set(&mut self, plugin: Plugin, on: bool) {
        match plugin {
            Plugin::Locking => self.locking = on,
            Plugin::Counter => self.counter = on,
            Plugin::Timed => self.timed = on,
            Plugin::AccessControl => self.access_control = on,
            Plugin::Events => self.events = on,
        }
    }

    pub fn enabled(&self) -> impl Iterator<Item = Plugin> + '_ {
        Plugin::ALL.into_iter().filter(|p| self.is_enabled(*p))
    }

    /// Parse a comma-separated plugin list. The empty string selects no plugins.
    pub fn from_list(list: &str) -> Result<Self, String> {
        let mut config = Self::none();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            config.set(name.parse()?, true);
        }
        Ok(config)
    }
}

impl FromIterator<Plugin> for PluginConfig {
    fn from_iter<I: IntoIterator<Item = Plugin>>(iter: I) -> Self {
        let mut config = Self::none();
        for p in iter {
            config.set(p, true);
        }
        config
    }
}

/// A contract FSM with timed transitions and plugin selection.
///
/// `initial_state` is optional so that a model without an initial marker can
/// still be represented and reported by validation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ContractModel {
    pub name: String,
    pub states: Vec<StateId>,
    pub initial_state: Option<StateId>,
    pub variables: Vec<VariableDecl>,
    pub structs: Vec<StructDef>,
    pub transitions: Vec<Transition>,
    pub timed_transitions: Vec<TimedTransition>,
    pub plugins: PluginConfig,
}

impl ContractModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            states: Vec::new(),
            initial_state: None,
            variables: Vec::new(),
            structs: Vec::new(),
            transitions: Vec::new(),
            timed_transitions: Vec::new(),
            plugins: PluginConfig::none(),
        }
    }

    pub fn transition(&self, name: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.name == name)
    }

    pub fn with_plugins(mut self, plugins: PluginConfig) -> Self {
        self.plugins = plugins;
        self
    }
}

/// Stable-sort timed transitions ascending by time offset. Idempotent.
pub fn canonicalize(mut model: ContractModel) -> ContractModel {
    model
        .timed_transitions
        .sort_by_key(|tt| tt.time_offset_seconds);
    model
}

/// Permutation applied by [`canonicalize`]: entry `i` is the original index of
/// the timed transition that ends up at position `i`.
pub(crate) fn canonical_timed_order(model: &ContractModel) -> Vec<usize> {
    let mut order: Vec<usize> = (0..model.timed_transitions.len()).collect();
    order.sort_by_key(|&i| model.timed_transitions[i].time_offset_seconds);
    order
}

/// Structural equality; fragment text is compared verbatim.
pub fn equals(a: &ContractModel, b: &ContractModel) -> bool {
    a == b
}
