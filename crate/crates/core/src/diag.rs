use std::fmt;

use serde::Serialize;

/// A location in a source file. Lines and columns are 1-based; columns count
/// characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, line: u32, column: u32, length: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        Self {
            file: file.into(),
            line,
            column,
            length,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Closed list of diagnostic codes.
///
/// The first group is produced by the parsers and the fragment lexer, the
/// second by [`crate::validate`]. Ordering of the variants is the tie-break
/// order used when several diagnostics attach to the same model node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Code {
    Syntax,
    DupDecl,
    BadUnit,
    JsonShape,
    NoInitial,
    UnknownState,
    DupName,
    BadTag,
    TagNeedsPlugin,
    TimedNeedsPlugin,
    TimedIo,
    Reserved,
    Unbalanced,
    BadToken,
    UndeclaredIdent,
}

impl Code {
    pub const ALL: [Code; 15] = [
        Code::Syntax,
        Code::DupDecl,
        Code::BadUnit,
        Code::JsonShape,
        Code::NoInitial,
        Code::UnknownState,
        Code::DupName,
        Code::BadTag,
        Code::TagNeedsPlugin,
        Code::TimedNeedsPlugin,
        Code::TimedIo,
        Code::Reserved,
        Code::Unbalanced,
        Code::BadToken,
        Code::UndeclaredIdent,
    ];

    pub const VALIDATION: [Code; 11] = [
        Code::NoInitial,
        Code::UnknownState,
        Code::DupName,
        Code::BadTag,
        Code::TagNeedsPlugin,
        Code::TimedNeedsPlugin,
        Code::TimedIo,
        Code::Reserved,
        Code::Unbalanced,
        Code::BadToken,
        Code::UndeclaredIdent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Code::Syntax => "E_SYNTAX",
            Code::DupDecl => "E_DUP_DECL",
            Code::BadUnit => "E_BAD_UNIT",
            Code::JsonShape => "E_JSON_SHAPE",
            Code::NoInitial => "E_NO_INITIAL",
            Code::UnknownState => "E_UNKNOWN_STATE",
            Code::DupName => "E_DUP_NAME",
            Code::BadTag => "E_BAD_TAG",
            Code::TagNeedsPlugin => "E_TAG_NEEDS_PLUGIN",
            Code::TimedNeedsPlugin => "E_TIMED_NEEDS_PLUGIN",
            Code::TimedIo => "E_TIMED_IO",
            Code::Reserved => "E_RESERVED",
            Code::Unbalanced => "E_UNBALANCED",
            Code::BadToken => "E_BAD_TOKEN",
            Code::UndeclaredIdent => "W_UNDECLARED_IDENT",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Code::UndeclaredIdent => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One finding from parsing or validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    /// Model path of the offending node, e.g. `transitions[3].guards[0]`.
    pub path: String,
    pub span: Option<SourceSpan>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            severity: code.severity(),
            path: path.into(),
            span: None,
            message: message.into(),
        }
    }

    pub fn with_span(mut self, span: Option<SourceSpan>) -> Self {
        self.span = span;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Render as `<severity> <code> at <file>:<line>:<col> (<path>): <message>`.
    ///
    /// Diagnostics without a span (JSON input, in-memory models) are rendered
    /// against `file` at `0:0`.
    pub fn render(&self, file: &str) -> String {
        let location = match &self.span {
            Some(span) => format!("{}:{}:{}", span.file, span.line, span.column),
            None => format!("{file}:0:0"),
        };
        format!(
            "{} {} at {} ({}): {}",
            self.severity, self.code, location, self.path, self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = self.span.as_ref().map_or("<input>", |s| s.file.as_str());
        f.write_str(&self.render(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_format() {
        let d = Diagnostic::new(Code::NoInitial, "states", "no initial state")
            .with_span(Some(SourceSpan::new("a.fsm", 3, 5, 6)));
        assert_eq!(
            d.render("ignored"),
            "error E_NO_INITIAL at a.fsm:3:5 (states): no initial state"
        );
        let w = Diagnostic::new(Code::UndeclaredIdent, "transitions[0].guards[0]", "x");
        assert_eq!(
            w.render("m.json"),
            "warning W_UNDECLARED_IDENT at m.json:0:0 (transitions[0].guards[0]): x"
        );
    }
}
