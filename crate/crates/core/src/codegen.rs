//! Solidity emission from a woven contract, plus the whitespace-insensitive
//! tokenizer used for golden comparisons.

use std::fmt::Write;

use serde::Serialize;

use crate::diag::Diagnostic;
use crate::frontend::lexer::{lex, Origin};
use crate::frontend::TokenKind;
use crate::model::{Param, Tag, Transition};
use crate::plugins::{guard_conjunction, WovenContract};

const INDENT: &str = "    ";

struct Emitter {
    out: String,
}

impl Emitter {
    fn line(&mut self, depth: usize, text: &str) {
        if text.is_empty() {
            self.out.push('\n');
            return;
        }
        for _ in 0..depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn blank(&mut self) {
        self.out.push('\n');
    }
}

fn param_list(params: &[Param]) -> String {
    params
        .iter()
        .map(Param::declaration)
        .collect::<Vec<_>>()
        .join(", ")
}

fn transition(e: &mut Emitter, woven: &WovenContract, t: &Transition) {
    e.line(1, &format!("//Transition {}", t.name));
    e.line(
        1,
        &format!("function {}({})", t.name, param_list(&woven.signature_params(t))),
    );
    if t.has_tag(&Tag::Payable) {
        e.line(2, "payable");
    }
    if let Some(chain) = woven.chain(&t.name) {
        for m in chain.iter() {
            e.line(2, m);
        }
    }
    if !t.outputs.is_empty() {
        e.line(2, &format!("returns ({})", param_list(&t.outputs)));
    }
    e.line(1, "{");
    for local in &t.locals {
        e.line(2, &format!("{};", local.declaration()));
    }
    e.line(2, &format!("require(state == States.{});", t.from));
    if !t.guards.is_empty() {
        e.line(2, "//Guards");
        let guard = guard_conjunction(t);
        for line in guard.lines() {
            e.line(2, line);
        }
    }
    if !t.statements.is_empty() {
        e.line(2, "//Actions");
        for s in &t.statements {
            for line in s.dedented_lines() {
                e.line(2, &line);
            }
        }
    }
    if t.to != t.from {
        e.line(2, "//State change");
        e.line(2, &format!("state = States.{};", t.to));
    }
    e.line(1, "}");
}

/// Emit the contract. Deterministic; LF newlines, four-space indentation,
/// one trailing newline.
pub fn generate(woven: &WovenContract) -> String {
    let m = &woven.base;
    let mut e = Emitter { out: String::new() };
    let _ = writeln!(e.out, "contract {}{{", m.name);

    e.line(1, "//States definition");
    e.line(1, "enum States {");
    for (i, s) in m.states.iter().enumerate() {
        let sep = if i + 1 < m.states.len() { "," } else { "" };
        e.line(2, &format!("{s}{sep}"));
    }
    e.line(1, "}");
    let initial = m.initial_state.as_ref().or(m.states.first());
    if let Some(s0) = initial {
        e.line(1, &format!("States private state = States.{s0};"));
    }
    e.blank();

    e.line(1, "//Variables definition");
    for s in &m.structs {
        e.line(1, &format!("struct {} {{", s.name));
        for member in &s.members {
            e.line(2, &format!("{};", member.declaration()));
        }
        e.line(1, "}");
    }
    for v in &m.variables {
        e.line(
            1,
            &format!("{} {} {};", v.type_text, v.visibility.as_str(), v.name),
        );
    }
    e.line(1, "uint private creationTime = now;");

    for fragment in &woven.contract_fragments {
        e.blank();
        e.line(1, fragment.banner);
        for line in &fragment.lines {
            e.line(1, line);
        }
    }

    e.blank();
    e.line(1, "//Transitions");
    for (i, t) in m.transitions.iter().enumerate() {
        if i > 0 {
            e.blank();
        }
        transition(&mut e, woven, t);
    }
    e.out.push_str("}\n");
    e.out
}

/// One token of a whitespace-normalized Solidity stream. Equality ignores
/// the line number.
#[derive(Debug, Clone, Eq, Serialize)]
pub struct SolToken {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
}

impl PartialEq for SolToken {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.text == other.text
    }
}

fn normalize_comment(text: &str) -> String {
    let body = if let Some(rest) = text.strip_prefix("//") {
        rest
    } else {
        text.strip_prefix("/*")
            .and_then(|r| r.strip_suffix("*/"))
            .unwrap_or(text)
    };
    body.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Tokenize Solidity text for golden comparison. Whitespace is dropped;
/// comments stay as tokens with their markers removed and inner whitespace
/// collapsed, so `// Transition bid` equals `//Transition bid`.
pub fn tokenize_solidity(text: &str) -> Result<Vec<SolToken>, Diagnostic> {
    let tokens = lex(text, &Origin::start_of("<solidity>"))?;
    Ok(tokens
        .into_iter()
        .map(|t| {
            let text = match t.kind {
                TokenKind::Comment => normalize_comment(&t.text),
                TokenKind::NumberWithUnit => {
                    t.text.split_whitespace().collect::<Vec<_>>().join(" ")
                }
                _ => t.text,
            };
            SolToken {
                kind: t.kind,
                text,
                line: t.span.line,
            }
        })
        .collect())
}
