//! Parser for the guard subset the simulator can evaluate: integer and time
//! literals, `now`, `creationTime`, bare identifiers, and arithmetic,
//! comparison and boolean operators. Anything else becomes
//! [`GuardAst::Opaque`].

use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use super::lexer::{lex_fragment, unit_seconds, Token, TokenKind};
use crate::model::SolidityFragment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 13] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Rem,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::And,
        BinaryOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        BinaryOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    /// Binding strength; higher binds tighter.
    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge
            | BinaryOp::Eq
            | BinaryOp::Ne => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum GuardAst {
    IntLit(BigInt),
    /// A `<n> <unit>` literal, already converted to seconds.
    TimeLit(BigInt),
    Var(String),
    Now,
    CreationTime,
    Unary(UnaryOp, Box<GuardAst>),
    Binary(BinaryOp, Box<GuardAst>, Box<GuardAst>),
    /// Outside the evaluable subset; carries the fragment text verbatim.
    Opaque(String),
}

impl GuardAst {
    pub fn int(v: i64) -> Self {
        GuardAst::IntLit(v.into())
    }

    pub fn var(name: &str) -> Self {
        GuardAst::Var(name.to_string())
    }

    pub fn unary(op: UnaryOp, e: GuardAst) -> Self {
        GuardAst::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: GuardAst, r: GuardAst) -> Self {
        GuardAst::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, GuardAst::Opaque(_))
    }
}

/// Fully parenthesized rendering; re-parses to the same tree.
impl fmt::Display for GuardAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardAst::IntLit(v) => write!(f, "{v}"),
            GuardAst::TimeLit(v) => write!(f, "{v} seconds"),
            GuardAst::Var(name) => f.write_str(name),
            GuardAst::Now => f.write_str("now"),
            GuardAst::CreationTime => f.write_str("creationTime"),
            GuardAst::Unary(UnaryOp::Not, e) => write!(f, "!({e})"),
            GuardAst::Unary(UnaryOp::Neg, e) => write!(f, "-({e})"),
            GuardAst::Binary(op, l, r) => write!(f, "({l}) {} ({r})", op.symbol()),
            GuardAst::Opaque(text) => f.write_str(text),
        }
    }
}

struct OutsideSubset;

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_binary(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        BinaryOp::from_symbol(&t.text)
    }

    fn expr(&mut self, min_prec: u8) -> Result<GuardAst, OutsideSubset> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binary() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(prec + 1)?;
            lhs = GuardAst::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<GuardAst, OutsideSubset> {
        let tok = self.peek().ok_or(OutsideSubset)?;
        let op = match (tok.kind, tok.text.as_str()) {
            (TokenKind::Operator, "!") => Some(UnaryOp::Not),
            (TokenKind::Operator, "-") => Some(UnaryOp::Neg),
            _ => None,
        };
        match op {
            Some(op) => {
                self.pos += 1;
                Ok(GuardAst::unary(op, self.unary()?))
            }
            None => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<GuardAst, OutsideSubset> {
        let tok = self.peek().ok_or(OutsideSubset)?;
        self.pos += 1;
        let node = match tok.kind {
            TokenKind::Number => GuardAst::IntLit(decimal(&tok.text)?),
            TokenKind::NumberWithUnit => {
                let (n, unit) = tok.number_and_unit().ok_or(OutsideSubset)?;
                let secs = unit_seconds(unit).ok_or(OutsideSubset)?;
                GuardAst::TimeLit(decimal(n)? * secs)
            }
            TokenKind::Identifier => match tok.text.as_str() {
                "now" => GuardAst::Now,
                "creationTime" => GuardAst::CreationTime,
                "true" | "false" => return Err(OutsideSubset),
                name => GuardAst::Var(name.to_string()),
            },
            TokenKind::Delimiter if tok.text == "(" => {
                let inner = self.expr(0)?;
                match self.peek() {
                    Some(t) if t.is(TokenKind::Delimiter, ")") => self.pos += 1,
                    _ => return Err(OutsideSubset),
                }
                inner
            }
            _ => return Err(OutsideSubset),
        };
        Ok(node)
    }
}

fn decimal(text: &str) -> Result<BigInt, OutsideSubset> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(OutsideSubset);
    }
    text.parse().map_err(|_| OutsideSubset)
}

/// Parse a guard expression. Never fails: fragments that do not lex, or that
/// use member access, indexing, calls, literals other than decimal integers,
/// or any other construct outside the subset, yield `Opaque(text)`.
pub fn parse_guard_expr(fragment: &SolidityFragment) -> GuardAst {
    let opaque = || GuardAst::Opaque(fragment.text.clone());
    let Ok(tokens) = lex_fragment(fragment) else {
        return opaque();
    };
    if tokens.iter().any(|t| t.kind == TokenKind::Comment) {
        return opaque();
    }
    let mut parser = Parser {
        toks: &tokens,
        pos: 0,
    };
    match parser.expr(0) {
        Ok(ast) if parser.pos == tokens.len() => ast,
        _ => opaque(),
    }
}
