//! Guard evaluation over unbounded integers.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::frontend::{BinaryOp, GuardAst, UnaryOp};

/// What a guard can see: the clock and the scenario-supplied bindings.
#[derive(Debug, Clone, Copy)]
pub struct GuardEnv<'a> {
    pub now: u64,
    pub creation_time: u64,
    pub env: &'a BTreeMap<String, BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("opaque guard needs an override")]
    MissingOverride,
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

fn int(v: Value, what: &str) -> Result<BigInt, EvalError> {
    match v {
        Value::Int(i) => Ok(i),
        Value::Bool(_) => Err(EvalError::TypeMismatch(format!("{what} needs an integer"))),
    }
}

fn boolean(v: Value, what: &str) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        Value::Int(_) => Err(EvalError::TypeMismatch(format!("{what} needs a boolean"))),
    }
}

/// Evaluate an expression. `&&` and `||` short-circuit; division and
/// remainder truncate toward zero.
pub fn eval_expr(ast: &GuardAst, view: &GuardEnv<'_>) -> Result<Value, EvalError> {
    Ok(match ast {
        GuardAst::IntLit(v) | GuardAst::TimeLit(v) => Value::Int(v.clone()),
        GuardAst::Now => Value::Int(view.now.into()),
        GuardAst::CreationTime => Value::Int(view.creation_time.into()),
        GuardAst::Var(name) => Value::Int(
            view.env
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVar(name.clone()))?,
        ),
        GuardAst::Opaque(_) => return Err(EvalError::MissingOverride),
        GuardAst::Unary(UnaryOp::Not, e) => Value::Bool(!boolean(eval_expr(e, view)?, "`!`")?),
        GuardAst::Unary(UnaryOp::Neg, e) => Value::Int(-int(eval_expr(e, view)?, "unary `-`")?),
        GuardAst::Binary(BinaryOp::And, l, r) => {
            let l = boolean(eval_expr(l, view)?, "`&&`")?;
            Value::Bool(l && boolean(eval_expr(r, view)?, "`&&`")?)
        }
        GuardAst::Binary(BinaryOp::Or, l, r) => {
            let l = boolean(eval_expr(l, view)?, "`||`")?;
            Value::Bool(l || boolean(eval_expr(r, view)?, "`||`")?)
        }
        GuardAst::Binary(op @ (BinaryOp::Eq | BinaryOp::Ne), l, r) => {
            let equal = match (eval_expr(l, view)?, eval_expr(r, view)?) {
                (Value::Int(a), Value::Int(b)) => a == b,
                (Value::Bool(a), Value::Bool(b)) => a == b,
                _ => {
                    return Err(EvalError::TypeMismatch(format!(
                        "`{}` compares an integer with a boolean",
                        op.symbol()
                    )))
                }
            };
            Value::Bool(equal == (*op == BinaryOp::Eq))
        }
        GuardAst::Binary(op, l, r) => {
            let sym = op.symbol();
            let a = int(eval_expr(l, view)?, sym)?;
            let b = int(eval_expr(r, view)?, sym)?;
            match op {
                BinaryOp::Add => Value::Int(a + b),
                BinaryOp::Sub => Value::Int(a - b),
                BinaryOp::Mul => Value::Int(a * b),
                BinaryOp::Div | BinaryOp::Rem if b.is_zero() => {
                    return Err(EvalError::DivisionByZero)
                }
                BinaryOp::Div => Value::Int(a / b),
                BinaryOp::Rem => Value::Int(a % b),
                BinaryOp::Lt => Value::Bool(a < b),
                BinaryOp::Le => Value::Bool(a <= b),
                BinaryOp::Gt => Value::Bool(a > b),
                BinaryOp::Ge => Value::Bool(a >= b),
                BinaryOp::And | BinaryOp::Or | BinaryOp::Eq | BinaryOp::Ne => {
                    unreachable!("handled above")
                }
            }
        }
    })
}

/// Evaluate a guard to a boolean. An opaque guard yields `override_value`,
/// or `MissingOverride` when there is none.
pub fn eval_guard(
    ast: &GuardAst,
    view: &GuardEnv<'_>,
    override_value: Option<bool>,
) -> Result<bool, EvalError> {
    if ast.is_opaque() {
        return override_value.ok_or(EvalError::MissingOverride);
    }
    boolean(eval_expr(ast, view)?, "a guard")
}
