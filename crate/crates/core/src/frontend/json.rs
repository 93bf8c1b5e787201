//! Canonical JSON interchange form. Lossless mirror of the DSL model.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::lexer::{check_shape, lex_fragment};
use crate::diag::{Code, Diagnostic, SourceSpan};
use crate::model::{
    canonicalize, is_identifier, ContractModel, Param, PluginConfig, SolidityFragment, StateId,
    StructDef, Tag, TimedTransition, Transition, VariableDecl, Visibility,
};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonParam {
    #[serde(rename = "type")]
    type_text: String,
    name: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonVariable {
    name: String,
    #[serde(rename = "type")]
    type_text: String,
    visibility: JsonVisibility,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum JsonVisibility {
    Public,
    Private,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonStruct {
    name: String,
    members: Vec<JsonParam>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTransition {
    name: String,
    from: String,
    to: String,
    tags: Vec<String>,
    inputs: Vec<JsonParam>,
    outputs: Vec<JsonParam>,
    locals: Vec<JsonParam>,
    guards: Vec<String>,
    statements: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTimed {
    name: String,
    from: String,
    to: String,
    #[serde(rename = "atSeconds")]
    at_seconds: u64,
    // Present-but-null is allowed; a missing key is a shape error.
    #[serde(deserialize_with = "Option::deserialize")]
    guard: Option<String>,
    statements: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonPlugins {
    locking: bool,
    counter: bool,
    timed: bool,
    access: bool,
    events: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonModel {
    name: String,
    states: Vec<String>,
    #[serde(deserialize_with = "Option::deserialize")]
    initial: Option<String>,
    variables: Vec<JsonVariable>,
    structs: Vec<JsonStruct>,
    transitions: Vec<JsonTransition>,
    timed: Vec<JsonTimed>,
    plugins: JsonPlugins,
}

fn to_params(list: &[Param]) -> Vec<JsonParam> {
    list.iter()
        .map(|p| JsonParam {
            type_text: p.type_text.clone(),
            name: p.name.clone(),
        })
        .collect()
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_json(model: &ContractModel) -> String {
    let doc = JsonModel {
        name: model.name.clone(),
        states: model.states.iter().map(|s| s.to_string()).collect(),
        initial: model.initial_state.as_ref().map(|s| s.to_string()),
        variables: model
            .variables
            .iter()
            .map(|v| JsonVariable {
                name: v.name.clone(),
                type_text: v.type_text.clone(),
                visibility: match v.visibility {
                    Visibility::Public => JsonVisibility::Public,
                    Visibility::Private => JsonVisibility::Private,
                },
            })
            .collect(),
        structs: model
            .structs
            .iter()
            .map(|s| JsonStruct {
                name: s.name.clone(),
                members: to_params(&s.members),
            })
            .collect(),
        transitions: model
            .transitions
            .iter()
            .map(|t| JsonTransition {
                name: t.name.clone(),
                from: t.from.to_string(),
                to: t.to.to_string(),
                tags: t.tags.iter().map(|tag| tag.to_string()).collect(),
                inputs: to_params(&t.inputs),
                outputs: to_params(&t.outputs),
                locals: to_params(&t.locals),
                guards: t.guards.iter().map(|g| g.text.clone()).collect(),
                statements: t.statements.iter().map(|s| s.text.clone()).collect(),
            })
            .collect(),
        timed: model
            .timed_transitions
            .iter()
            .map(|tt| JsonTimed {
                name: tt.name.clone(),
                from: tt.from.to_string(),
                to: tt.to.to_string(),
                at_seconds: tt.time_offset_seconds,
                guard: tt.guard.as_ref().map(|g| g.text.clone()),
                statements: tt.statements.iter().map(|s| s.text.clone()).collect(),
            })
            .collect(),
        plugins: JsonPlugins {
            locking: model.plugins.locking,
            counter: model.plugins.counter,
            timed: model.plugins.timed,
            access: model.plugins.access_control,
            events: model.plugins.events,
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
    text.push('\n');
    text
}

struct Convert {
    diags: Vec<Diagnostic>,
}

impl Convert {
    fn ident(&mut self, name: &str, path: &str) -> String {
        if !is_identifier(name) {
            self.diags.push(Diagnostic::new(
                Code::Syntax,
                path,
                format!("`{name}` is not a valid identifier"),
            ));
        }
        name.to_string()
    }

    fn state(&mut self, name: &str, path: &str) -> StateId {
        StateId::new(name).unwrap_or_else(|msg| {
            self.diags.push(Diagnostic::new(Code::Syntax, path, msg));
            StateId::new("_").expect("identifier")
        })
    }

    fn params(&mut self, list: &[JsonParam], path: &str) -> Vec<Param> {
        let mut seen = HashSet::new();
        list.iter()
            .enumerate()
            .map(|(i, p)| {
                let ppath = format!("{path}[{i}]");
                let name = self.ident(&p.name, &ppath);
                if p.type_text.trim().is_empty() {
                    self.diags.push(Diagnostic::new(Code::Syntax, &ppath, "empty type"));
                }
                if !seen.insert(name.clone()) {
                    self.diags.push(Diagnostic::new(
                        Code::DupDecl,
                        &ppath,
                        format!("duplicate name `{name}`"),
                    ));
                }
                Param::new(p.type_text.clone(), name)
            })
            .collect()
    }

    fn fragment(&mut self, fragment: SolidityFragment, path: &str) -> SolidityFragment {
        if let Ok(tokens) = lex_fragment(&fragment) {
            if let Err(msg) = check_shape(&fragment, &tokens) {
                self.diags.push(Diagnostic::new(Code::Syntax, path, msg));
            }
        }
        fragment
    }
}

fn serde_diag(err: &serde_json::Error, file: &str) -> Diagnostic {
    let code = match err.classify() {
        serde_json::error::Category::Data => Code::JsonShape,
        _ => Code::Syntax,
    };
    let span = (err.line() >= 1).then(|| {
        SourceSpan::new(file, err.line() as u32, err.column().max(1) as u32, 1)
    });
    Diagnostic::new(code, "", err.to_string()).with_span(span)
}

pub fn parse_json_in(text: &str, file: &str) -> Result<ContractModel, Vec<Diagnostic>> {
    let doc: JsonModel = serde_json::from_str(text).map_err(|e| vec![serde_diag(&e, file)])?;
    let mut cv = Convert { diags: Vec::new() };
    let mut model = ContractModel::new(cv.ident(&doc.name, "name"));
    model.states = doc
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| cv.state(s, &format!("states[{i}]")))
        .collect();
    model.initial_state = doc.initial.as_deref().map(|s| cv.state(s, "initial"));
    for (i, v) in doc.variables.iter().enumerate() {
        let path = format!("variables[{i}]");
        if v.type_text.trim().is_empty() {
            cv.diags.push(Diagnostic::new(Code::Syntax, &path, "empty type"));
        }
        model.variables.push(VariableDecl {
            name: cv.ident(&v.name, &path),
            type_text: v.type_text.clone(),
            visibility: match v.visibility {
                JsonVisibility::Public => Visibility::Public,
                JsonVisibility::Private => Visibility::Private,
            },
        });
    }
    for (i, s) in doc.structs.iter().enumerate() {
        let path = format!("structs[{i}]");
        model.structs.push(StructDef {
            name: cv.ident(&s.name, &path),
            members: cv.params(&s.members, &format!("{path}.members")),
        });
    }
    for (i, t) in doc.transitions.iter().enumerate() {
        let path = format!("transitions[{i}]");
        let mut tr = Transition::new(
            cv.ident(&t.name, &path),
            cv.state(&t.from, &format!("{path}.from")),
            cv.state(&t.to, &format!("{path}.to")),
        );
        for (k, tag) in t.tags.iter().enumerate() {
            let tag = Tag::from(tag.as_str());
            if tr.tags.contains(&tag) {
                cv.diags.push(Diagnostic::new(
                    Code::DupDecl,
                    format!("{path}.tags[{k}]"),
                    format!("tag `{tag}` listed twice"),
                ));
            }
            tr.tags.push(tag);
        }
        tr.inputs = cv.params(&t.inputs, &format!("{path}.inputs"));
        tr.outputs = cv.params(&t.outputs, &format!("{path}.outputs"));
        tr.locals = cv.params(&t.locals, &format!("{path}.locals"));
        tr.guards = t
            .guards
            .iter()
            .enumerate()
            .map(|(k, g)| cv.fragment(SolidityFragment::expr(g.clone()), &format!("{path}.guards[{k}]")))
            .collect();
        tr.statements = t
            .statements
            .iter()
            .enumerate()
            .map(|(k, s)| {
                cv.fragment(SolidityFragment::stmt(s.clone()), &format!("{path}.statements[{k}]"))
            })
            .collect();
        model.transitions.push(tr);
    }
    for (i, tt) in doc.timed.iter().enumerate() {
        let path = format!("timed[{i}]");
        let guard = tt
            .guard
            .as_ref()
            .map(|g| cv.fragment(SolidityFragment::expr(g.clone()), &format!("{path}.guard")));
        let statements = tt
            .statements
            .iter()
            .enumerate()
            .map(|(k, s)| {
                cv.fragment(SolidityFragment::stmt(s.clone()), &format!("{path}.statements[{k}]"))
            })
            .collect();
        model.timed_transitions.push(TimedTransition {
            name: cv.ident(&tt.name, &path),
            guard,
            statements,
            from: cv.state(&tt.from, &format!("{path}.from")),
            to: cv.state(&tt.to, &format!("{path}.to")),
            time_offset_seconds: tt.at_seconds,
        });
    }
    model.plugins = PluginConfig {
        locking: doc.plugins.locking,
        counter: doc.plugins.counter,
        timed: doc.plugins.timed,
        access_control: doc.plugins.access,
        events: doc.plugins.events,
    };
    if cv.diags.is_empty() {
        Ok(canonicalize(model))
    } else {
        Err(cv.diags)
    }
}

pub fn parse_json(text: &str) -> Result<ContractModel, Vec<Diagnostic>> {
    parse_json_in(text, "<input>")
}
