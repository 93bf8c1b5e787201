//! Semantic checks on a parsed model. An empty result means the model can be
//! woven and generated.

use std::collections::{BTreeSet, HashSet};

use crate::diag::{Code, Diagnostic};
use crate::frontend::lexer::{check_shape, lex, referenced_identifiers, Origin, Token};
use crate::frontend::SourceMap;
use crate::model::{is_identifier, ContractModel, Param, Plugin, SolidityFragment, Tag};

const BUILTINS: &[&str] = &[
    "now", "msg", "block", "tx", "this", "true", "false", "creationTime", "state", "States",
    "keccak256", "sha3", "sha256", "ripemd160", "ecrecover", "addmod", "mulmod", "require",
    "assert", "revert", "selfdestruct", "address", "bool", "string", "bytes", "var", "length",
    "wei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years",
];

fn is_elementary_type(name: &str) -> bool {
    ["uint", "int", "bytes", "fixed", "ufixed"].iter().any(|prefix| {
        name.strip_prefix(prefix)
            .is_some_and(|rest| rest.bytes().all(|b| b.is_ascii_digit() || b == b'x'))
    })
}

/// Names the generator emits for `model`'s plugin selection.
fn reserved_names(model: &ContractModel) -> HashSet<String> {
    let mut out: HashSet<String> = ["state", "States", "creationTime"]
        .into_iter()
        .map(String::from)
        .collect();
    out.insert(model.name.clone());
    let p = &model.plugins;
    let mut add = |names: &[&str]| out.extend(names.iter().map(|s| s.to_string()));
    if p.is_enabled(Plugin::Locking) {
        add(&["locked", "locking"]);
    }
    if p.is_enabled(Plugin::Counter) {
        add(&["transitionCounter", "nextTransitionNumber", "transitionCounting"]);
    }
    if p.is_enabled(Plugin::Timed) {
        add(&["timedTransitions"]);
    }
    if p.is_enabled(Plugin::AccessControl) {
        add(&["isAdmin", "numAdmins", "addAdmin", "removeAdmin", "onlyAdmin"]);
    }
    if p.is_enabled(Plugin::Events) {
        for t in model.transitions.iter().filter(|t| t.has_tag(&Tag::Event)) {
            out.insert(format!("Event{}", t.name));
            out.insert(format!("event{}", t.name));
        }
    }
    out
}

struct Checker<'a> {
    map: Option<&'a SourceMap>,
    out: Vec<Diagnostic>,
    group: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, code: Code, path: &str, message: String) {
        let span = self.map.and_then(|m| m.lookup(path)).cloned();
        self.group
            .push(Diagnostic::new(code, path, message).with_span(span));
    }

    /// Close the current model node: its findings are ordered by code.
    fn flush(&mut self) {
        self.group.sort_by_key(|d| d.code);
        self.out.append(&mut self.group);
    }

    fn origin(&self, path: &str) -> Origin {
        match self.map.and_then(|m| m.get(path)) {
            Some(span) => Origin::from(span),
            None => Origin::start_of("<fragment>"),
        }
    }

    fn lex_text(&mut self, text: &str, path: &str) -> Option<Vec<Token>> {
        match lex(text, &self.origin(path)) {
            Ok(tokens) => Some(tokens),
            Err(mut d) => {
                d.path = path.to_string();
                if self.map.is_none() {
                    d.span = None;
                }
                self.group.push(d);
                None
            }
        }
    }

    fn fragment(&mut self, fragment: &SolidityFragment, path: &str) -> Option<Vec<Token>> {
        let tokens = self.lex_text(&fragment.text, path)?;
        if let Err(msg) = check_shape(fragment, &tokens) {
            self.push(Code::Syntax, path, msg);
            return None;
        }
        Some(tokens)
    }

    fn identifier(&mut self, name: &str, path: &str) {
        if !is_identifier(name) {
            self.push(Code::Syntax, path, format!("`{name}` is not a valid identifier"));
        }
    }

    fn reserved(&mut self, reserved: &HashSet<String>, name: &str, path: &str) {
        if reserved.contains(name) {
            self.push(
                Code::Reserved,
                path,
                format!("`{name}` collides with a generated name"),
            );
        }
    }

    fn dup(&mut self, seen: &mut HashSet<String>, name: &str, path: &str, what: &str) {
        if !seen.insert(name.to_string()) {
            self.push(Code::DupName, path, format!("duplicate {what} name `{name}`"));
        }
    }
}

pub fn validate(model: &ContractModel) -> Vec<Diagnostic> {
    validate_with_sources(model, None)
}

/// Validate, attaching source spans from `map` when given. Order: model
/// declaration order, then diagnostic code within one node.
pub fn validate_with_sources(model: &ContractModel, map: Option<&SourceMap>) -> Vec<Diagnostic> {
    let mut c = Checker {
        map,
        out: Vec::new(),
        group: Vec::new(),
    };
    let reserved = reserved_names(model);
    let states: HashSet<&str> = model.states.iter().map(|s| s.as_str()).collect();

    c.identifier(&model.name, "name");
    c.flush();

    let mut seen = HashSet::new();
    for (i, s) in model.states.iter().enumerate() {
        c.dup(&mut seen, s.as_str(), &format!("states[{i}]"), "state");
        c.flush();
    }

    match &model.initial_state {
        None => c.push(Code::NoInitial, "initial", "no initial state is declared".into()),
        Some(s) if !states.contains(s.as_str()) => c.push(
            Code::NoInitial,
            "initial",
            format!("initial state `{s}` is not a declared state"),
        ),
        Some(_) => {}
    }
    c.flush();

    let mut seen = HashSet::new();
    for (i, s) in model.structs.iter().enumerate() {
        let path = format!("structs[{i}]");
        c.identifier(&s.name, &path);
        c.dup(&mut seen, &s.name, &path, "struct");
        c.reserved(&reserved, &s.name, &path);
        c.flush();
        let mut members = HashSet::new();
        for (j, m) in s.members.iter().enumerate() {
            let mpath = format!("{path}.members[{j}]");
            c.identifier(&m.name, &mpath);
            c.dup(&mut members, &m.name, &mpath, "member");
            c.lex_text(&m.type_text, &mpath);
            c.flush();
        }
    }

    let mut seen = HashSet::new();
    for (i, v) in model.variables.iter().enumerate() {
        let path = format!("variables[{i}]");
        c.identifier(&v.name, &path);
        c.dup(&mut seen, &v.name, &path, "variable");
        c.reserved(&reserved, &v.name, &path);
        c.lex_text(&v.type_text, &path);
        c.flush();
    }

    let mut known: HashSet<String> = model
        .variables
        .iter()
        .map(|v| v.name.clone())
        .chain(model.structs.iter().map(|s| s.name.clone()))
        .collect();
    known.extend(BUILTINS.iter().map(|s| s.to_string()));

    let mut io_names = BTreeSet::new();
    for t in &model.transitions {
        io_names.extend(t.inputs.iter().chain(&t.outputs).map(|p| p.name.clone()));
    }

    let mut seen = HashSet::new();
    for (i, t) in model.transitions.iter().enumerate() {
        let path = format!("transitions[{i}]");
        c.identifier(&t.name, &path);
        c.dup(&mut seen, &t.name, &path, "transition");
        c.reserved(&reserved, &t.name, &path);
        c.flush();
        for (end, s) in [("from", &t.from), ("to", &t.to)] {
            if !states.contains(s.as_str()) {
                c.push(
                    Code::UnknownState,
                    &format!("{path}.{end}"),
                    format!("`{s}` is not a declared state"),
                );
            }
            c.flush();
        }

        let mut tags = HashSet::new();
        for (k, tag) in t.tags.iter().enumerate() {
            let tpath = format!("{path}.tags[{k}]");
            if !tags.insert(tag.clone()) {
                c.push(Code::BadTag, &tpath, format!("tag `{tag}` is listed twice"));
            }
            match tag {
                Tag::Other(name) => c.push(
                    Code::BadTag,
                    &tpath,
                    format!("unknown tag `{name}`; expected payable, admin or event"),
                ),
                Tag::Admin if !model.plugins.access_control => c.push(
                    Code::TagNeedsPlugin,
                    &tpath,
                    "the `admin` tag needs the `access` plugin".into(),
                ),
                Tag::Event if !model.plugins.events => c.push(
                    Code::TagNeedsPlugin,
                    &tpath,
                    "the `event` tag needs the `events` plugin".into(),
                ),
                _ => {}
            }
            c.flush();
        }

        let mut params = HashSet::new();
        let lists: [(&str, &[Param]); 3] =
            [("inputs", &t.inputs), ("outputs", &t.outputs), ("locals", &t.locals)];
        for (list, items) in lists {
            for (k, p) in items.iter().enumerate() {
                let ppath = format!("{path}.{list}[{k}]");
                c.identifier(&p.name, &ppath);
                c.dup(&mut params, &p.name, &ppath, "parameter");
                c.reserved(&reserved, &p.name, &ppath);
                c.lex_text(&p.type_text, &ppath);
                c.flush();
            }
        }

        let mut scope = known.clone();
        scope.extend(t.inputs.iter().chain(&t.outputs).chain(&t.locals).map(|p| p.name.clone()));
        for (k, g) in t.guards.iter().enumerate() {
            let gpath = format!("{path}.guards[{k}]");
            if let Some(tokens) = c.fragment(g, &gpath) {
                undeclared(&mut c, &tokens, &scope, &HashSet::new(), &gpath);
            }
            c.flush();
        }
        for (k, s) in t.statements.iter().enumerate() {
            c.fragment(s, &format!("{path}.statements[{k}]"));
            c.flush();
        }
    }

    let mut seen = HashSet::new();
    for (i, tt) in model.timed_transitions.iter().enumerate() {
        let path = format!("timed[{i}]");
        c.identifier(&tt.name, &path);
        c.dup(&mut seen, &tt.name, &path, "timed transition");
        if i == 0 && !model.plugins.timed {
            c.push(
                Code::TimedNeedsPlugin,
                &path,
                "timed transitions need the `timed` plugin".into(),
            );
        }
        c.flush();
        for (end, s) in [("from", &tt.from), ("to", &tt.to)] {
            if !states.contains(s.as_str()) {
                c.push(
                    Code::UnknownState,
                    &format!("{path}.{end}"),
                    format!("`{s}` is not a declared state"),
                );
            }
            c.flush();
        }
        if let Some(g) = &tt.guard {
            let gpath = format!("{path}.guard");
            if let Some(tokens) = c.fragment(g, &gpath) {
                let flagged = timed_io(&mut c, &tokens, &io_names, &gpath);
                undeclared(&mut c, &tokens, &known, &flagged, &gpath);
            }
            c.flush();
        }
        for (k, s) in tt.statements.iter().enumerate() {
            let spath = format!("{path}.statements[{k}]");
            if let Some(tokens) = c.fragment(s, &spath) {
                timed_io(&mut c, &tokens, &io_names, &spath);
            }
            c.flush();
        }
    }
    c.out
}

/// Report identifiers that name a transition input or output. Returns the
/// names reported.
fn timed_io(
    c: &mut Checker<'_>,
    tokens: &[Token],
    io_names: &BTreeSet<String>,
    path: &str,
) -> HashSet<String> {
    let mut flagged = HashSet::new();
    for tok in referenced_identifiers(tokens) {
        if io_names.contains(&tok.text) && flagged.insert(tok.text.clone()) {
            let span = c.map.map(|_| tok.span.clone());
            c.group.push(
                Diagnostic::new(
                    Code::TimedIo,
                    path,
                    format!("timed transitions may not use transition input/output `{}`", tok.text),
                )
                .with_span(span),
            );
        }
    }
    flagged
}

fn undeclared(
    c: &mut Checker<'_>,
    tokens: &[Token],
    scope: &HashSet<String>,
    skip: &HashSet<String>,
    path: &str,
) {
    let mut reported = HashSet::new();
    for tok in referenced_identifiers(tokens) {
        let name = tok.text.as_str();
        if scope.contains(name) || skip.contains(name) || is_elementary_type(name) {
            continue;
        }
        if reported.insert(name.to_string()) {
            let span = c.map.map(|_| tok.span.clone());
            c.group.push(
                Diagnostic::new(
                    Code::UndeclaredIdent,
                    path,
                    format!("`{name}` is not a declared variable, parameter or struct"),
                )
                .with_span(span),
            );
        }
    }
}
