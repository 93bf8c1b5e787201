//! The textual contract DSL.
//!
//! ```text
//! contract      = "contract" IDENT "{" item* "}"
//! item          = statesDecl | pluginsDecl | structDecl | varDecl | transitionDecl | timedDecl
//! statesDecl    = "states" "{" stateItem (";" stateItem)* [";"] "}"
//! stateItem     = ["initial"] IDENT
//! pluginsDecl   = "plugins" "{" IDENT (";" IDENT)* [";"] "}"
//! structDecl    = "struct" IDENT "{" (TYPETEXT IDENT ";")* "}"
//! varDecl       = "var" ("public"|"private") TYPETEXT IDENT ";"
//! transitionDecl= "transition" IDENT "from" IDENT "to" IDENT ["tags" "(" IDENT ("," IDENT)* ")"]
//!                 "{" [input] [output] [locals] guard* action* "}"
//! input         = "input"  "(" [param ("," param)*] ")" ";"
//! output        = "output" "(" [param ("," param)*] ")" ";"
//! locals        = "locals" "(" [param ("," param)*] ")" ";"
//! param         = TYPETEXT IDENT
//! guard         = "guard"  "{" FRAGMENT "}"
//! action        = "action" "{" FRAGMENT "}"
//! timedDecl     = "timed" IDENT "from" IDENT "to" IDENT "at" DURATION "{" [guard] action* "}"
//! DURATION      = NUMBER ["seconds"|"minutes"|"hours"|"days"|"weeks"]
//! ```
//!
//! `#` starts a line comment outside fragments. Fragment text is kept
//! verbatim apart from trimming surrounding blanks.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use super::lexer::{self, unit_seconds, Origin, TIME_UNITS};
use crate::diag::{Code, Diagnostic, SourceSpan};
use crate::model::{
    canonical_timed_order, is_identifier, ContractModel, FragmentKind, Param, Plugin,
    SolidityFragment, StateId, StructDef, Tag, TimedTransition, Transition, VariableDecl,
    Visibility,
};

/// Model path → source location, for attaching spans to diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    spans: BTreeMap<String, SourceSpan>,
}

impl SourceMap {
    pub fn get(&self, path: &str) -> Option<&SourceSpan> {
        self.spans.get(path)
    }

    /// The span of `path`, or of its nearest recorded ancestor.
    pub fn lookup(&self, path: &str) -> Option<&SourceSpan> {
        let mut p = path;
        loop {
            if let Some(span) = self.spans.get(p) {
                return Some(span);
            }
            let cut = p.rfind(['.', '['])?;
            p = &p[..cut];
        }
    }

    pub fn insert(&mut self, path: impl Into<String>, span: SourceSpan) {
        self.spans.insert(path.into(), span);
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    fn remap_timed(&mut self, order: &[usize]) {
        let mut new_index = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let spans = std::mem::take(&mut self.spans);
        for (path, span) in spans {
            let path = match path.strip_prefix("timed[") {
                Some(rest) => {
                    let close = rest.find(']').expect("timed path");
                    let old: usize = rest[..close].parse().expect("timed index");
                    format!("timed[{}]{}", new_index[old], &rest[close + 1..])
                }
                None => path,
            };
            self.spans.insert(path, span);
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
    file: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn span(&self, length: u32) -> SourceSpan {
        SourceSpan::new(self.file, self.line, self.column, length)
    }

    /// A run of `[A-Za-z0-9_]` at the cursor (after trivia).
    fn word(&mut self) -> Option<(&'a str, SourceSpan)> {
        self.skip_trivia();
        let start = self.pos;
        let span_start = self.span(0);
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        if self.pos == start {
            return None;
        }
        let text = &self.src[start..self.pos];
        Some((
            text,
            SourceSpan {
                length: text.len() as u32,
                ..span_start
            },
        ))
    }

    /// Description of the lexeme at the cursor, for error messages.
    fn found(&self) -> String {
        let rest = &self.src[self.pos..];
        match rest.chars().next() {
            None => "end of input".into(),
            Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
                let end = rest
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(rest.len());
                format!("`{}`", &rest[..end])
            }
            Some(c) => format!("`{}`", c.escape_debug()),
        }
    }
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    cur: Cursor<'a>,
    diags: Vec<Diagnostic>,
    map: SourceMap,
}

fn syntax(span: SourceSpan, path: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(Code::Syntax, path, message).with_span(Some(span))
}

impl<'a> Parser<'a> {
    fn error_here(&mut self, path: &str, expected: &str) -> Diagnostic {
        self.cur.skip_trivia();
        let found = self.cur.found();
        let len = if self.cur.peek().is_some() { 1 } else { 0 };
        syntax(self.cur.span(len), path, format!("expected {expected}, found {found}"))
    }

    fn at(&mut self, c: char) -> bool {
        self.cur.skip_trivia();
        self.cur.peek() == Some(c)
    }

    fn expect(&mut self, c: char, path: &str) -> PResult<()> {
        if self.at(c) {
            self.cur.bump();
            Ok(())
        } else {
            Err(self.error_here(path, &format!("`{c}`")))
        }
    }

    fn peek_word(&mut self) -> Option<&'a str> {
        self.cur.skip_trivia();
        let rest = &self.cur.src[self.cur.pos..];
        let end = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        (end > 0).then(|| &rest[..end])
    }

    fn keyword(&mut self, kw: &str, path: &str) -> PResult<SourceSpan> {
        if self.peek_word() == Some(kw) {
            Ok(self.cur.word().expect("peeked").1)
        } else {
            Err(self.error_here(path, &format!("`{kw}`")))
        }
    }

    fn ident(&mut self, path: &str, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek_word() {
            Some(w) if is_identifier(w) => {
                let (w, span) = self.cur.word().expect("peeked");
                Ok((w.to_string(), span))
            }
            _ => Err(self.error_here(path, what)),
        }
    }

    fn state_ref(&mut self, path: &str) -> PResult<StateId> {
        let (name, span) = self.ident(path, "a state name")?;
        self.map.insert(path, span);
        Ok(StateId::new(name).expect("identifier"))
    }

    fn contract(&mut self) -> PResult<ContractModel> {
        self.keyword("contract", "name")?;
        let (name, span) = self.ident("name", "a contract name")?;
        self.map.insert("name", span);
        let mut model = ContractModel::new(name);
        self.expect('{', "name")?;
        let mut seen_states: Option<SourceSpan> = None;
        let mut seen_plugins: Option<SourceSpan> = None;
        loop {
            if self.at('}') {
                self.cur.bump();
                break;
            }
            let item = self.peek_word();
            match item {
                Some("states") => {
                    let span = self.cur.word().expect("peeked").1;
                    if seen_states.replace(span.clone()).is_some() {
                        self.diags.push(
                            Diagnostic::new(Code::DupDecl, "states", "second `states` block")
                                .with_span(Some(span.clone())),
                        );
                    }
                    self.states(&mut model)?;
                    self.map.insert("states", span.clone());
                    if self.map.get("initial").is_none() {
                        self.map.insert("initial", span);
                    }
                }
                Some("plugins") => {
                    let span = self.cur.word().expect("peeked").1;
                    if seen_plugins.replace(span.clone()).is_some() {
                        self.diags.push(
                            Diagnostic::new(Code::DupDecl, "plugins", "second `plugins` block")
                                .with_span(Some(span.clone())),
                        );
                    }
                    self.map.insert("plugins", span);
                    self.plugins(&mut model)?;
                }
                Some("struct") => {
                    let path = format!("structs[{}]", model.structs.len());
                    self.cur.word();
                    let s = self.struct_def(&path)?;
                    model.structs.push(s);
                }
                Some("var") => {
                    let path = format!("variables[{}]", model.variables.len());
                    self.cur.word();
                    let v = self.var_decl(&path)?;
                    model.variables.push(v);
                }
                Some("transition") => {
                    let path = format!("transitions[{}]", model.transitions.len());
                    self.cur.word();
                    let t = self.transition(&path)?;
                    model.transitions.push(t);
                }
                Some("timed") => {
                    let path = format!("timed[{}]", model.timed_transitions.len());
                    self.cur.word();
                    let t = self.timed(&path)?;
                    model.timed_transitions.push(t);
                }
                _ => {
                    return Err(self.error_here(
                        "",
                        "`states`, `plugins`, `struct`, `var`, `transition`, `timed` or `}`",
                    ))
                }
            }
        }
        self.cur.skip_trivia();
        if self.cur.peek().is_some() {
            return Err(self.error_here("", "end of input"));
        }
        Ok(model)
    }

    fn states(&mut self, model: &mut ContractModel) -> PResult<()> {
        self.expect('{', "states")?;
        loop {
            if self.at('}') {
                self.cur.bump();
                return Ok(());
            }
            let path = format!("states[{}]", model.states.len());
            let mut initial = None;
            if self.peek_word() == Some("initial") {
                let (_, span) = self.cur.word().expect("peeked");
                self.cur.skip_trivia();
                if matches!(self.cur.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
                    initial = Some(span);
                } else {
                    // a state literally named `initial`
                    model.states.push(StateId::new("initial").expect("identifier"));
                    self.map.insert(path, span);
                    self.state_separator()?;
                    continue;
                }
            }
            let (name, span) = self.ident(&path, "a state name")?;
            let id = StateId::new(name).expect("identifier");
            if let Some(marker) = initial {
                if model.initial_state.is_some() {
                    self.diags.push(
                        Diagnostic::new(Code::DupDecl, "initial", "more than one initial state")
                            .with_span(Some(marker)),
                    );
                } else {
                    model.initial_state = Some(id.clone());
                    self.map.insert("initial", span.clone());
                }
            }
            self.map.insert(path, span);
            model.states.push(id);
            self.state_separator()?;
        }
    }

    fn state_separator(&mut self) -> PResult<()> {
        if self.at(';') {
            self.cur.bump();
            Ok(())
        } else if self.at('}') {
            Ok(())
        } else {
            Err(self.error_here("states", "`;` or `}`"))
        }
    }

    fn plugins(&mut self, model: &mut ContractModel) -> PResult<()> {
        self.expect('{', "plugins")?;
        let mut seen = HashSet::new();
        loop {
            if self.at('}') {
                self.cur.bump();
                return Ok(());
            }
            let (name, span) = self.ident("plugins", "a plugin name")?;
            match name.parse::<Plugin>() {
                Ok(p) => {
                    if !seen.insert(p) {
                        self.diags.push(
                            Diagnostic::new(Code::DupDecl, "plugins", format!("plugin `{name}` listed twice"))
                                .with_span(Some(span)),
                        );
                    }
                    model.plugins.set(p, true);
                }
                Err(msg) => self.diags.push(syntax(span, "plugins", msg)),
            }
            if self.at(';') {
                self.cur.bump();
            } else if !self.at('}') {
                return Err(self.error_here("plugins", "`;` or `}`"));
            }
        }
    }

    /// Scan `TYPETEXT IDENT` up to one of `terms` at bracket depth zero.
    /// Returns `None` when nothing but blanks precede the terminator.
    fn typed_name(&mut self, terms: &[char], path: &str) -> PResult<Option<(Param, SourceSpan)>> {
        self.cur.skip_trivia();
        let start = self.cur.pos;
        let start_span = self.cur.span(0);
        let mut depth = 0u32;
        loop {
            match self.cur.peek() {
                None => return Err(self.error_here(path, "a type and a name")),
                Some(c) if depth == 0 && terms.contains(&c) => break,
                Some('{' | '}' | '#') => {
                    let what = if depth == 0 { "a type and a name" } else { "a closing bracket" };
                    return Err(self.error_here(path, what));
                }
                Some('(' | '[') => depth += 1,
                Some(')' | ']') => {
                    if depth == 0 {
                        return Err(self.error_here(path, "a type and a name"));
                    }
                    depth -= 1;
                }
                Some(_) => {}
            }
            self.cur.bump();
        }
        let segment = self.cur.src[start..self.cur.pos].trim_end();
        if segment.is_empty() {
            return Ok(None);
        }
        let name_start = segment
            .char_indices()
            .rev()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(0, |(i, c)| i + c.len_utf8());
        let name = &segment[name_start..];
        let type_text = segment[..name_start].trim_end();
        if type_text.is_empty() || !is_identifier(name) {
            return Err(syntax(
                SourceSpan {
                    length: segment.chars().count() as u32,
                    ..start_span
                },
                path,
                format!("expected `<type> <name>`, found `{segment}`"),
            ));
        }
        let span = SourceSpan {
            length: segment.chars().count() as u32,
            ..start_span
        };
        Ok(Some((Param::new(type_text, name), span)))
    }

    fn struct_def(&mut self, path: &str) -> PResult<StructDef> {
        let (name, span) = self.ident(path, "a struct name")?;
        self.map.insert(path, span);
        self.expect('{', path)?;
        let mut members = Vec::new();
        let mut seen = HashSet::new();
        loop {
            if self.at('}') {
                self.cur.bump();
                break;
            }
            let mpath = format!("{path}.members[{}]", members.len());
            let Some((param, span)) = self.typed_name(&[';'], &mpath)? else {
                return Err(self.error_here(&mpath, "a struct member"));
            };
            self.expect(';', &mpath)?;
            if !seen.insert(param.name.clone()) {
                self.diags.push(
                    Diagnostic::new(Code::DupDecl, &mpath, format!("duplicate member `{}`", param.name))
                        .with_span(Some(span.clone())),
                );
            }
            self.map.insert(mpath, span);
            members.push(param);
        }
        Ok(StructDef { name, members })
    }

    fn var_decl(&mut self, path: &str) -> PResult<VariableDecl> {
        let visibility = match self.peek_word() {
            Some(w @ ("public" | "private")) => {
                self.cur.word();
                w.parse::<Visibility>().expect("checked")
            }
            _ => return Err(self.error_here(path, "`public` or `private`")),
        };
        let Some((param, span)) = self.typed_name(&[';'], path)? else {
            return Err(self.error_here(path, "a type and a name"));
        };
        self.expect(';', path)?;
        self.map.insert(path, span);
        Ok(VariableDecl {
            name: param.name,
            type_text: param.type_text,
            visibility,
        })
    }

    fn param_list(&mut self, path: &str) -> PResult<Vec<Param>> {
        self.expect('(', path)?;
        let mut params = Vec::new();
        let mut seen = HashSet::new();
        if self.at(')') {
            self.cur.bump();
        } else {
            loop {
                let ppath = format!("{path}[{}]", params.len());
                let Some((param, span)) = self.typed_name(&[',', ')'], &ppath)? else {
                    return Err(self.error_here(&ppath, "a parameter"));
                };
                if !seen.insert(param.name.clone()) {
                    self.diags.push(
                        Diagnostic::new(Code::DupDecl, &ppath, format!("duplicate parameter `{}`", param.name))
                            .with_span(Some(span.clone())),
                    );
                }
                self.map.insert(ppath, span);
                params.push(param);
                if self.at(',') {
                    self.cur.bump();
                } else {
                    self.expect(')', path)?;
                    break;
                }
            }
        }
        self.expect(';', path)?;
        Ok(params)
    }

    /// `{ FRAGMENT }`: balanced text up to the matching close brace, skipping
    /// braces inside strings and comments.
    fn fragment(&mut self, kind: FragmentKind, path: &str) -> PResult<SolidityFragment> {
        self.cur.skip_trivia();
        let open = self.cur.span(1);
        self.expect('{', path)?;
        let start = self.cur.pos;
        let mut first: Option<SourceSpan> = None;
        let mut depth = 1u32;
        let end;
        loop {
            let Some(c) = self.cur.peek() else {
                return Err(syntax(open, path, "unterminated fragment: no matching `}`"));
            };
            if first.is_none() && !c.is_whitespace() && !(c == '}' && depth == 1) {
                first = Some(self.cur.span(0));
            }
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = self.cur.pos;
                        self.cur.bump();
                        break;
                    }
                }
                '"' | '\'' => {
                    self.cur.bump();
                    while let Some(s) = self.cur.peek() {
                        if s == '\n' {
                            break;
                        }
                        self.cur.bump();
                        if s == '\\' {
                            self.cur.bump();
                        } else if s == c {
                            break;
                        }
                    }
                    continue;
                }
                '/' if self.cur.peek_at(1) == Some('/') => {
                    while matches!(self.cur.peek(), Some(c) if c != '\n') {
                        self.cur.bump();
                    }
                    continue;
                }
                '/' if self.cur.peek_at(1) == Some('*') => {
                    self.cur.bump();
                    self.cur.bump();
                    loop {
                        match self.cur.peek() {
                            None => break,
                            Some('*') if self.cur.peek_at(1) == Some('/') => {
                                self.cur.bump();
                                self.cur.bump();
                                break;
                            }
                            Some(_) => {
                                self.cur.bump();
                            }
                        }
                    }
                    continue;
                }
                _ => {}
            }
            self.cur.bump();
        }
        let text = self.cur.src[start..end].trim();
        let Some(mut span) = first else {
            return Err(syntax(open, path, "empty fragment"));
        };
        span.length = text.chars().count() as u32;
        let fragment = SolidityFragment {
            text: text.to_string(),
            kind,
        };
        // Lexical errors are left to validation; shape errors are syntax.
        if let Ok(tokens) = lexer::lex(text, &Origin::from(&span)) {
            if let Err(msg) = lexer::check_shape(&fragment, &tokens) {
                self.diags.push(syntax(span.clone(), path, msg));
            }
        }
        self.map.insert(path, span);
        Ok(fragment)
    }

    fn endpoints(&mut self, path: &str) -> PResult<(StateId, StateId)> {
        self.keyword("from", path)?;
        let from = self.state_ref(&format!("{path}.from"))?;
        self.keyword("to", path)?;
        let to = self.state_ref(&format!("{path}.to"))?;
        Ok((from, to))
    }

    fn transition(&mut self, path: &str) -> PResult<Transition> {
        let (name, span) = self.ident(path, "a transition name")?;
        self.map.insert(path, span);
        let (from, to) = self.endpoints(path)?;
        let mut t = Transition::new(name, from, to);
        if self.peek_word() == Some("tags") {
            self.cur.word();
            self.expect('(', path)?;
            loop {
                let tpath = format!("{path}.tags[{}]", t.tags.len());
                let (tag, span) = self.ident(&tpath, "a tag")?;
                let tag = Tag::from(tag.as_str());
                if t.tags.contains(&tag) {
                    self.diags.push(
                        Diagnostic::new(Code::DupDecl, &tpath, format!("tag `{tag}` listed twice"))
                            .with_span(Some(span.clone())),
                    );
                }
                self.map.insert(tpath, span);
                t.tags.push(tag);
                if self.at(',') {
                    self.cur.bump();
                } else {
                    self.expect(')', path)?;
                    break;
                }
            }
        }
        self.expect('{', path)?;
        // Sections must appear in this order; guards and actions repeat.
        const ORDER: [&str; 5] = ["input", "output", "locals", "guard", "action"];
        let mut stage = 0usize;
        loop {
            if self.at('}') {
                self.cur.bump();
                return Ok(t);
            }
            let word = self.peek_word();
            let Some(idx) = word.and_then(|w| ORDER.iter().position(|k| *k == w)) else {
                return Err(self.error_here(path, "`input`, `output`, `locals`, `guard`, `action` or `}`"));
            };
            let repeatable = idx >= 3;
            let limit = if repeatable { idx + 1 } else { idx };
            if stage > limit {
                let (w, span) = self.cur.word().expect("peeked");
                return Err(syntax(span, path, format!("`{w}` is out of order or repeated")));
            }
            self.cur.word();
            stage = idx + 1;
            match idx {
                0 => t.inputs = self.param_list(&format!("{path}.inputs"))?,
                1 => t.outputs = self.param_list(&format!("{path}.outputs"))?,
                2 => t.locals = self.param_list(&format!("{path}.locals"))?,
                3 => {
                    let gpath = format!("{path}.guards[{}]", t.guards.len());
                    let g = self.fragment(FragmentKind::Expr, &gpath)?;
                    t.guards.push(g);
                }
                _ => {
                    let spath = format!("{path}.statements[{}]", t.statements.len());
                    let s = self.fragment(FragmentKind::Stmt, &spath)?;
                    t.statements.push(s);
                }
            }
        }
    }

    fn duration(&mut self, path: &str) -> PResult<u64> {
        let (digits, span) = match self.peek_word() {
            Some(w) if w.bytes().all(|b| b.is_ascii_digit()) => self.cur.word().expect("peeked"),
            _ => return Err(self.error_here(path, "a duration")),
        };
        let value: u64 = digits
            .parse()
            .map_err(|_| syntax(span.clone(), path, format!("duration `{digits}` is too large")))?;
        let mut factor = 1;
        if let Some(unit) = self.peek_word() {
            let (_, uspan) = self.cur.word().expect("peeked");
            match unit_seconds(unit) {
                Some(f) => factor = f,
                None => {
                    let units: Vec<_> = TIME_UNITS.iter().map(|(u, _)| *u).collect();
                    self.diags.push(
                        Diagnostic::new(
                            Code::BadUnit,
                            path,
                            format!("unknown time unit `{unit}` (expected one of {})", units.join(", ")),
                        )
                        .with_span(Some(uspan)),
                    );
                }
            }
        }
        value
            .checked_mul(factor)
            .ok_or_else(|| syntax(span, path, "duration overflows"))
    }

    fn timed(&mut self, path: &str) -> PResult<TimedTransition> {
        let (name, span) = self.ident(path, "a timed transition name")?;
        self.map.insert(path, span);
        let (from, to) = self.endpoints(path)?;
        self.keyword("at", path)?;
        let time_offset_seconds = self.duration(path)?;
        self.expect('{', path)?;
        let mut tt = TimedTransition {
            name,
            guard: None,
            statements: Vec::new(),
            from,
            to,
            time_offset_seconds,
        };
        loop {
            if self.at('}') {
                self.cur.bump();
                return Ok(tt);
            }
            match self.peek_word() {
                Some("guard") if tt.guard.is_none() && tt.statements.is_empty() => {
                    self.cur.word();
                    tt.guard = Some(self.fragment(FragmentKind::Expr, &format!("{path}.guard"))?);
                }
                Some("action") => {
                    self.cur.word();
                    let spath = format!("{path}.statements[{}]", tt.statements.len());
                    tt.statements.push(self.fragment(FragmentKind::Stmt, &spath)?);
                }
                Some("guard") => {
                    let (_, span) = self.cur.word().expect("peeked");
                    return Err(syntax(span, path, "a timed transition takes at most one guard, before its actions"));
                }
                _ => return Err(self.error_here(path, "`guard`, `action` or `}`")),
            }
        }
    }
}

/// Parse DSL text into a canonicalized model plus a path → span map.
pub fn parse_dsl_with_sources(text: &str, file: &str) -> Result<(ContractModel, SourceMap), Vec<Diagnostic>> {
    let mut parser = Parser {
        cur: Cursor {
            src: text,
            pos: 0,
            line: 1,
            column: 1,
            file,
        },
        diags: Vec::new(),
        map: SourceMap::default(),
    };
    match parser.contract() {
        Err(fatal) => {
            parser.diags.push(fatal);
            Err(parser.diags)
        }
        Ok(_) if !parser.diags.is_empty() => Err(parser.diags),
        Ok(model) => {
            let order = canonical_timed_order(&model);
            let mut map = parser.map;
            map.remap_timed(&order);
            Ok((crate::model::canonicalize(model), map))
        }
    }
}

pub fn parse_dsl(text: &str) -> Result<ContractModel, Vec<Diagnostic>> {
    parse_dsl_with_sources(text, "<input>").map(|(m, _)| m)
}

fn params(list: &[Param]) -> String {
    list.iter()
        .map(Param::declaration)
        .collect::<Vec<_>>()
        .join(", ")
}

fn duration_text(seconds: u64) -> String {
    for (unit, factor) in TIME_UNITS.iter().rev() {
        if seconds != 0 && seconds % factor == 0 {
            return format!("{} {unit}", seconds / factor);
        }
    }
    format!("{seconds} seconds")
}

fn emit_fragment(out: &mut String, keyword: &str, fragment: &SolidityFragment, indent: &str) {
    if fragment.text.contains('\n') || fragment.text.contains("//") {
        let _ = writeln!(out, "{indent}{keyword} {{");
        let _ = writeln!(out, "{indent}    {}", fragment.text);
        let _ = writeln!(out, "{indent}}}");
    } else {
        let _ = writeln!(out, "{indent}{keyword} {{ {} }}", fragment.text);
    }
}

/// Deterministic DSL rendering; `parse_dsl(&emit_dsl(m)) == m` for valid `m`.
pub fn emit_dsl(model: &ContractModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "contract {} {{", model.name);
    let states: Vec<String> = model
        .states
        .iter()
        .map(|s| {
            if Some(s) == model.initial_state.as_ref() {
                format!("initial {s};")
            } else {
                format!("{s};")
            }
        })
        .collect();
    if states.is_empty() {
        out.push_str("    states { }\n");
    } else {
        let _ = writeln!(out, "    states {{ {} }}", states.join(" "));
    }
    let plugins: Vec<&str> = model.plugins.enabled().map(Plugin::as_str).collect();
    if !plugins.is_empty() {
        let _ = writeln!(out, "    plugins {{ {}; }}", plugins.join("; "));
    }
    for s in &model.structs {
        let _ = writeln!(out, "    struct {} {{", s.name);
        for m in &s.members {
            let _ = writeln!(out, "        {};", m.declaration());
        }
        out.push_str("    }\n");
    }
    for v in &model.variables {
        let _ = writeln!(out, "    var {} {} {};", v.visibility.as_str(), v.type_text, v.name);
    }
    for t in &model.transitions {
        let _ = write!(out, "    transition {} from {} to {}", t.name, t.from, t.to);
        if !t.tags.is_empty() {
            let tags: Vec<&str> = t.tags.iter().map(Tag::as_str).collect();
            let _ = write!(out, " tags({})", tags.join(", "));
        }
        let empty = t.inputs.is_empty()
            && t.outputs.is_empty()
            && t.locals.is_empty()
            && t.guards.is_empty()
            && t.statements.is_empty();
        if empty {
            out.push_str(" {}\n");
            continue;
        }
        out.push_str(" {\n");
        for (kw, list) in [("input", &t.inputs), ("output", &t.outputs), ("locals", &t.locals)] {
            if !list.is_empty() {
                let _ = writeln!(out, "        {kw}({});", params(list));
            }
        }
        for g in &t.guards {
            emit_fragment(&mut out, "guard", g, "        ");
        }
        for s in &t.statements {
            emit_fragment(&mut out, "action", s, "        ");
        }
        out.push_str("    }\n");
    }
    for tt in &model.timed_transitions {
        let _ = write!(
            out,
            "    timed {} from {} to {} at {}",
            tt.name,
            tt.from,
            tt.to,
            duration_text(tt.time_offset_seconds)
        );
        if tt.guard.is_none() && tt.statements.is_empty() {
            out.push_str(" {}\n");
            continue;
        }
        out.push_str(" {\n");
        if let Some(g) = &tt.guard {
            emit_fragment(&mut out, "guard", g, "        ");
        }
        for s in &tt.statements {
            emit_fragment(&mut out, "action", s, "        ");
        }
        out.push_str("    }\n");
    }
    out.push_str("}\n");
    out
}
