//! Fragment-level Solidity lexer.
//!
//! This is not a Solidity parser: it splits text into tokens, checks that
//! strings and block comments terminate and that `() [] {}` balance, and
//! exposes identifiers for the cross-checks in validation.

use std::fmt;

use serde::Serialize;

use crate::diag::{Code, Diagnostic, SourceSpan};
use crate::model::{FragmentKind, SolidityFragment};

pub const TIME_UNITS: [(&str, u64); 5] = [
    ("seconds", 1),
    ("minutes", 60),
    ("hours", 3600),
    ("days", 86400),
    ("weeks", 604800),
];

pub fn unit_seconds(unit: &str) -> Option<u64> {
    TIME_UNITS
        .iter()
        .find(|(name, _)| *name == unit)
        .map(|(_, s)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TokenKind {
    Identifier,
    Number,
    NumberWithUnit,
    String,
    Operator,
    Delimiter,
    Comment,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::Identifier => "identifier",
            TokenKind::Number => "number",
            TokenKind::NumberWithUnit => "number-with-unit",
            TokenKind::String => "string",
            TokenKind::Operator => "operator",
            TokenKind::Delimiter => "delimiter",
            TokenKind::Comment => "comment",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    /// For number-with-unit tokens: the numeric part and the unit.
    pub fn number_and_unit(&self) -> Option<(&str, &str)> {
        if self.kind != TokenKind::NumberWithUnit {
            return None;
        }
        let mut parts = self.text.split_whitespace();
        Some((parts.next()?, parts.next()?))
    }
}

// Longest match first.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "**", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=",
    "-=", "*=", "/=", "%=", "|=", "&=", "^=", "=>", "->", "<<", ">>", ":=", "+", "-", "*", "/",
    "%", "<", ">", "=", "!", "&", "|", "^", "~", "?", ":", ".",
];

/// Where the lexed text starts in its file.
#[derive(Debug, Clone)]
pub struct Origin {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

impl Origin {
    pub fn start_of(file: impl Into<String>) -> Self {
        Self {
            file: file.into(),
            line: 1,
            column: 1,
        }
    }
}

impl From<&SourceSpan> for Origin {
    fn from(span: &SourceSpan) -> Self {
        Self {
            file: span.file.clone(),
            line: span.line,
            column: span.column,
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
    file: &'a str,
}

impl<'a> Lexer<'a> {
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

    fn span_from(&self, line: u32, column: u32, start: usize) -> SourceSpan {
        let length = self.src[start..self.pos].chars().count() as u32;
        SourceSpan::new(self.file, line, column, length)
    }

    fn error(&self, code: Code, line: u32, column: u32, message: String) -> Diagnostic {
        Diagnostic::new(code, "", message).with_span(Some(SourceSpan::new(self.file, line, column, 1)))
    }

    fn eat_ident_chars(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '$') {
            self.bump();
        }
    }

    fn lex_number(&mut self) {
        if self.peek() == Some('0') && matches!(self.peek_at(1), Some('x' | 'X')) {
            self.bump();
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit() || c == '_') {
                self.bump();
            }
            return;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '_') {
            self.bump();
        }
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '_') {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let digit_at = if self.peek_at(1) == Some('-') { 2 } else { 1 };
            if matches!(self.peek_at(digit_at), Some(c) if c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    self.bump();
                }
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
    }

    /// If a time unit follows (after optional blanks), consume it.
    fn try_unit(&mut self) -> bool {
        let rest = &self.src[self.pos..];
        let blanks = rest.len() - rest.trim_start().len();
        let after = &rest[blanks..];
        let word_len = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '$'))
            .unwrap_or(after.len());
        if word_len == 0 || unit_seconds(&after[..word_len]).is_none() {
            return false;
        }
        for _ in rest[..blanks + word_len].chars() {
            self.bump();
        }
        true
    }

    fn next_token(&mut self) -> Option<Result<Token, Diagnostic>> {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
        let c = self.peek()?;
        let (line, column, start) = (self.line, self.column, self.pos);
        let kind = match c {
            '/' if self.peek_at(1) == Some('/') => {
                while matches!(self.peek(), Some(c) if c != '\n') {
                    self.bump();
                }
                TokenKind::Comment
            }
            '/' if self.peek_at(1) == Some('*') => {
                self.bump();
                self.bump();
                loop {
                    match self.peek() {
                        None => {
                            return Some(Err(self.error(
                                Code::BadToken,
                                line,
                                column,
                                "unterminated block comment".into(),
                            )))
                        }
                        Some('*') if self.peek_at(1) == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            self.bump();
                        }
                    }
                }
                TokenKind::Comment
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '$' => {
                self.eat_ident_chars();
                TokenKind::Identifier
            }
            c if c.is_ascii_digit() || (c == '.' && matches!(self.peek_at(1), Some(d) if d.is_ascii_digit())) => {
                self.lex_number();
                if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
                    let (l, col) = (self.line, self.column);
                    return Some(Err(self.error(
                        Code::BadToken,
                        l,
                        col,
                        "malformed number literal".into(),
                    )));
                }
                if self.try_unit() {
                    TokenKind::NumberWithUnit
                } else {
                    TokenKind::Number
                }
            }
            '"' | '\'' => {
                let quote = c;
                self.bump();
                loop {
                    match self.bump() {
                        None | Some('\n') => {
                            return Some(Err(self.error(
                                Code::BadToken,
                                line,
                                column,
                                "unterminated string literal".into(),
                            )))
                        }
                        Some('\\') => {
                            if matches!(self.peek(), None | Some('\n')) {
                                continue;
                            }
                            self.bump();
                        }
                        Some(q) if q == quote => break,
                        Some(_) => {}
                    }
                }
                TokenKind::String
            }
            '(' | ')' | '[' | ']' | '{' | '}' | ',' | ';' => {
                self.bump();
                TokenKind::Delimiter
            }
            _ => {
                let rest = &self.src[self.pos..];
                match OPERATORS.iter().find(|op| rest.starts_with(**op)) {
                    Some(op) => {
                        for _ in 0..op.len() {
                            self.bump();
                        }
                        TokenKind::Operator
                    }
                    None => {
                        return Some(Err(self.error(
                            Code::BadToken,
                            line,
                            column,
                            format!("unexpected character `{}`", c.escape_debug()),
                        )))
                    }
                }
            }
        };
        let mut text = self.src[start..self.pos].to_string();
        if kind == TokenKind::Comment {
            text.truncate(text.trim_end().len());
        }
        Some(Ok(Token {
            kind,
            text,
            span: self.span_from(line, column, start),
        }))
    }
}

/// Lex `src`, which begins at `origin`. Checks token validity and delimiter
/// balance.
pub fn lex(src: &str, origin: &Origin) -> Result<Vec<Token>, Diagnostic> {
    let mut lexer = Lexer {
        src,
        pos: 0,
        line: origin.line,
        column: origin.column,
        file: &origin.file,
    };
    let mut tokens = Vec::new();
    let mut open: Vec<&Token> = Vec::new();
    while let Some(tok) = lexer.next_token() {
        tokens.push(tok?);
    }
    for tok in &tokens {
        if tok.kind != TokenKind::Delimiter {
            continue;
        }
        let closer = match tok.text.as_str() {
            "(" | "[" | "{" => {
                open.push(tok);
                continue;
            }
            ")" => "(",
            "]" => "[",
            "}" => "{",
            _ => continue,
        };
        match open.pop() {
            Some(o) if o.text == closer => {}
            Some(o) => {
                return Err(Diagnostic::new(
                    Code::Unbalanced,
                    "",
                    format!(
                        "`{}` does not close `{}` opened at {}:{}",
                        tok.text, o.text, o.span.line, o.span.column
                    ),
                )
                .with_span(Some(tok.span.clone())))
            }
            None => {
                return Err(Diagnostic::new(
                    Code::Unbalanced,
                    "",
                    format!("unmatched `{}`", tok.text),
                )
                .with_span(Some(tok.span.clone())))
            }
        }
    }
    if let Some(o) = open.pop() {
        return Err(
            Diagnostic::new(Code::Unbalanced, "", format!("`{}` is never closed", o.text))
                .with_span(Some(o.span.clone())),
        );
    }
    Ok(tokens)
}

/// Lex a fragment as if it started at line 1, column 1 of `<fragment>`.
pub fn lex_fragment(fragment: &SolidityFragment) -> Result<Vec<Token>, Diagnostic> {
    lex(&fragment.text, &Origin::start_of("<fragment>"))
}

/// Identifiers referenced by a token stream. Member names (an identifier
/// directly after `.`) are skipped; they do not name declarations.
pub fn referenced_identifiers(tokens: &[Token]) -> Vec<&Token> {
    let mut out = Vec::new();
    let mut after_dot = false;
    for tok in tokens {
        if tok.kind == TokenKind::Comment {
            continue;
        }
        if tok.kind == TokenKind::Identifier && !after_dot {
            out.push(tok);
        }
        after_dot = tok.is(TokenKind::Operator, ".");
    }
    out
}

/// Shape rules that keep a fragment safe to splice into generated code:
/// expressions carry no top-level `;` and no line comment, statements end in
/// `;` or `}`.
pub fn check_shape(fragment: &SolidityFragment, tokens: &[Token]) -> Result<(), String> {
    let code: Vec<&Token> = tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect();
    if code.is_empty() {
        return Err("fragment is empty".into());
    }
    match fragment.kind {
        FragmentKind::Expr => {
            let mut depth = 0i32;
            for t in tokens {
                match (t.kind, t.text.as_str()) {
                    (TokenKind::Comment, text) if text.starts_with("//") => {
                        return Err("line comment inside an expression".into())
                    }
                    (TokenKind::Delimiter, "(" | "[" | "{") => depth += 1,
                    (TokenKind::Delimiter, ")" | "]" | "}") => depth -= 1,
                    (TokenKind::Delimiter, ";") if depth == 0 => {
                        return Err("expression contains a top-level `;`".into())
                    }
                    _ => {}
                }
            }
            Ok(())
        }
        FragmentKind::Stmt => {
            let last = code.last().expect("nonempty");
            if last.is(TokenKind::Delimiter, ";") || last.is(TokenKind::Delimiter, "}") {
                Ok(())
            } else {
                Err("statement must end in `;` or `}`".into())
            }
        }
    }
}
