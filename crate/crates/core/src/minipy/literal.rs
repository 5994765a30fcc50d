//! `ast.literal_eval` for MiniPy: constants and container displays only.

use thiserror::Error;

use super::ast::*;
use super::{parse_expr, ParseError};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiteralError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("not a literal: {0}")]
    NotLiteral(String),
}

pub fn literal_eval(text: &str) -> Result<Value, LiteralError> {
    let e = parse_expr(text.trim())?;
    eval(&e)
}

/// Evaluates an already parsed literal expression.
pub fn eval(e: &Expr) -> Result<Value, LiteralError> {
    let not_lit = || LiteralError::NotLiteral(super::unparse_expr(e));
    Ok(match &e.kind {
        ExprKind::Constant(c) => match c {
            Constant::None => Value::None,
            Constant::Bool(b) => Value::Bool(*b),
            Constant::Int(i) => Value::Int(i.clone()),
            Constant::Float(f) => Value::Float(*f),
            Constant::Str(s) => Value::Str(s.clone()),
        },
        ExprKind::UnaryOp { op: op @ (UnaryOp::Neg | UnaryOp::Pos), operand } => {
            match (op, eval(operand)?) {
                (UnaryOp::Neg, Value::Int(i)) => Value::Int(-i),
                (UnaryOp::Neg, Value::Float(f)) => Value::Float(-f),
                (UnaryOp::Pos, v @ (Value::Int(_) | Value::Float(_))) => v,
                _ => return Err(not_lit()),
            }
        }
        ExprKind::List(items) => Value::List(items.iter().map(eval).collect::<Result<_, _>>()?),
        ExprKind::Tuple(items) => Value::Tuple(items.iter().map(eval).collect::<Result<_, _>>()?),
        ExprKind::Set(items) => {
            let mut out: Vec<Value> = Vec::new();
            for i in items {
                let v = eval(i)?;
                if !out.iter().any(|o| o.py_eq(&v)) {
                    out.push(v);
                }
            }
            Value::Set(out)
        }
        ExprKind::Map(entries) => {
            let mut out: Vec<(Value, Value)> = Vec::new();
            for en in entries {
                let MapEntry::Pair(k, v) = en else { return Err(not_lit()) };
                let (k, v) = (eval(k)?, eval(v)?);
                match out.iter_mut().find(|(ok, _)| ok.py_eq(&k)) {
                    Some(slot) => slot.1 = v,
                    None => out.push((k, v)),
                }
            }
            Value::Map(out)
        }
        // `set()` is the only way to write an empty set.
        ExprKind::Call { func, args } if args.is_empty() && matches!(&func.kind, ExprKind::Name(n) if n == "set") => {
            Value::Set(Vec::new())
        }
        _ => return Err(not_lit()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_displays() {
        assert_eq!(literal_eval("6").unwrap(), Value::int(6));
        assert_eq!(literal_eval("-2.5").unwrap(), Value::Float(-2.5));
        assert_eq!(literal_eval("'QgJuCy'").unwrap(), Value::str("QgJuCy"));
        assert_eq!(
            literal_eval("(4, 5, [2], {'a': None})").unwrap().repr(),
            "(4, 5, [2], {'a': None})"
        );
        assert_eq!(literal_eval("set()").unwrap(), Value::Set(vec![]));
        assert_eq!(literal_eval("{1, 1, 2}").unwrap().repr(), "{1, 2}");
    }

    #[test]
    fn rejects_code() {
        assert!(matches!(literal_eval("f(1)"), Err(LiteralError::NotLiteral(_))));
        assert!(matches!(literal_eval("x"), Err(LiteralError::NotLiteral(_))));
        assert!(matches!(literal_eval("1 +"), Err(LiteralError::Parse(_))));
    }
}
