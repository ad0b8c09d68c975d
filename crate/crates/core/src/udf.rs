// Copyright 2026 The Laby Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! User-defined functions: closed single-parameter expression trees and their evaluator.

use std::cmp::Ordering;
use std::fmt;

use crate::frontend::ast::{BinOp, Expr, ExprKind, UnOp};
use crate::frontend::pretty::print_literal;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum UExpr {
    Param,
    Lit(Value),
    Unary(UnOp, Box<UExpr>),
    Binary(BinOp, Box<UExpr>, Box<UExpr>),
    Tuple(Vec<UExpr>),
    Field(Box<UExpr>, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Udf {
    pub param: String,
    pub body: UExpr,
}

impl Udf {
    pub fn new(param: &str, body: UExpr) -> Udf {
        Udf {
            param: param.to_string(),
            body,
        }
    }

    /// Converts a type-checked lambda expression.
    pub fn from_lambda(e: &Expr) -> Udf {
        let ExprKind::Lambda { param, body } = &e.kind else {
            panic!("expected a lambda, found {:?}", e.kind);
        };
        Udf::new(param, UExpr::from_expr(body, param))
    }

    pub fn apply(&self, v: &Value) -> Result<Value, String> {
        self.body.eval(v)
    }
}

impl UExpr {
    fn from_expr(e: &Expr, param: &str) -> UExpr {
        match &e.kind {
            ExprKind::Lit(v) => UExpr::Lit(v.clone()),
            ExprKind::Var(n) => {
                assert_eq!(n, param, "lambda bodies reference only their parameter");
                UExpr::Param
            }
            ExprKind::Unary(op, a) => UExpr::Unary(*op, Box::new(UExpr::from_expr(a, param))),
            ExprKind::Binary(op, a, b) => UExpr::Binary(
                *op,
                Box::new(UExpr::from_expr(a, param)),
                Box::new(UExpr::from_expr(b, param)),
            ),
            ExprKind::Tuple(items) => {
                UExpr::Tuple(items.iter().map(|i| UExpr::from_expr(i, param)).collect())
            }
            ExprKind::Field(a, i) => UExpr::Field(Box::new(UExpr::from_expr(a, param)), *i),
            other => panic!("not allowed in a lambda: {other:?}"),
        }
    }

    pub fn field(self, i: usize) -> UExpr {
        UExpr::Field(Box::new(self), i)
    }

    pub fn binary(op: BinOp, a: UExpr, b: UExpr) -> UExpr {
        UExpr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn eval(&self, param: &Value) -> Result<Value, String> {
        match self {
            UExpr::Param => Ok(param.clone()),
            UExpr::Lit(v) => Ok(v.clone()),
            UExpr::Unary(op, a) => eval_unary(*op, &a.eval(param)?),
            UExpr::Binary(op, a, b) => eval_binary(*op, &a.eval(param)?, &b.eval(param)?),
            UExpr::Tuple(items) => Ok(Value::tuple(
                items
                    .iter()
                    .map(|i| i.eval(param))
                    .collect::<Result<Vec<_>, _>>()?,
            )),
            UExpr::Field(a, i) => match a.eval(param)? {
                Value::Tuple(items) => items
                    .get(*i)
                    .cloned()
                    .ok_or_else(|| format!("field {i} out of range")),
                other => Err(format!("field access on non-tuple {other}")),
            },
        }
    }

    fn prec(&self) -> u8 {
        match self {
            UExpr::Binary(op, ..) => binop_prec(*op),
            UExpr::Unary(op, _) if op.call_name().is_none() => 6,
            _ => 7,
        }
    }
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
    }
}

struct Printer<'a> {
    e: &'a UExpr,
    param: &'a str,
}

impl Printer<'_> {
    fn child<'b>(&self, e: &'b UExpr) -> Printer<'b>
    where
        Self: 'b,
    {
        Printer {
            e,
            param: self.param,
        }
    }

    fn wrapped(&self, f: &mut fmt::Formatter<'_>, e: &UExpr, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({})", self.child(e))
        } else {
            write!(f, "{}", self.child(e))
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.e {
            UExpr::Param => f.write_str(self.param),
            UExpr::Lit(v) => {
                let s = print_literal(v);
                if s.starts_with('-') {
                    write!(f, "({s})")
                } else {
                    f.write_str(&s)
                }
            }
            UExpr::Unary(op, a) => match op.call_name() {
                Some(name) => write!(f, "{name}({})", self.child(a)),
                None => {
                    f.write_str(if *op == UnOp::Neg { "-" } else { "!" })?;
                    self.wrapped(f, a, a.prec() < 6 || matches!(**a, UExpr::Lit(_)))
                }
            },
            UExpr::Binary(op, a, b) => {
                let p = binop_prec(*op);
                let chain = p != 3;
                self.wrapped(f, a, a.prec() < p || (!chain && a.prec() == p))?;
                write!(f, " {} ", op.symbol())?;
                self.wrapped(f, b, b.prec() <= p)
            }
            UExpr::Tuple(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", self.child(it))?;
                }
                f.write_str(")")
            }
            UExpr::Field(a, i) => {
                self.wrapped(f, a, a.prec() < 7 || matches!(**a, UExpr::Lit(_)))?;
                write!(f, ".{i}")
            }
        }
    }
}

impl fmt::Display for Udf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} => {}",
            self.param,
            Printer {
                e: &self.body,
                param: &self.param
            }
        )
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(x) => Some(*x),
        _ => None,
    }
}

pub fn eval_unary(op: UnOp, v: &Value) -> Result<Value, String> {
    match (op, v) {
        (UnOp::Neg, Value::Int(i)) => i
            .checked_neg()
            .map(Value::Int)
            .ok_or_else(|| "integer overflow in negation".to_string()),
        (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Abs, Value::Int(i)) => i
            .checked_abs()
            .map(Value::Int)
            .ok_or_else(|| "integer overflow in abs".to_string()),
        (UnOp::Abs, Value::Float(x)) => Ok(Value::Float(x.abs())),
        (UnOp::ToFloat, Value::Int(i)) => Ok(Value::Float(*i as f64)),
        (UnOp::ToFloat, Value::Float(x)) => Ok(Value::Float(*x)),
        (UnOp::ToInt, Value::Int(i)) => Ok(Value::Int(*i)),
        (UnOp::ToInt, Value::Float(x)) => {
            if x.is_finite() && x.abs() < 9.2e18 {
                Ok(Value::Int(x.trunc() as i64))
            } else {
                Err(format!("cannot convert {x} to an integer"))
            }
        }
        (op, v) => Err(format!("cannot apply {op:?} to {v}")),
    }
}

pub fn eval_binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, String> {
    use BinOp::*;
    match op {
        Add if matches!(a, Value::Str(_)) || matches!(b, Value::Str(_)) => {
            Ok(Value::str(&format!("{}{}", a.to_line(), b.to_line())))
        }
        Add | Sub | Mul | Div | Mod => match (a, b) {
            (Value::Int(x), Value::Int(y)) => {
                let r = match op {
                    Add => x.checked_add(*y),
                    Sub => x.checked_sub(*y),
                    Mul => x.checked_mul(*y),
                    Div | Mod if *y == 0 => return Err("integer division by zero".into()),
                    Div => x.checked_div(*y),
                    _ => x.checked_rem(*y),
                };
                r.map(Value::Int)
                    .ok_or_else(|| format!("integer overflow in {x} {} {y}", op.symbol()))
            }
            _ => {
                let (Some(x), Some(y)) = (as_f64(a), as_f64(b)) else {
                    return Err(format!("operator `{}` on {a} and {b}", op.symbol()));
                };
                Ok(Value::Float(match op {
                    Add => x + y,
                    Sub => x - y,
                    Mul => x * y,
                    Div => x / y,
                    _ => x % y,
                }))
            }
        },
        Eq | Ne | Lt | Le | Gt | Ge => {
            let ord = match (a, b) {
                (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
                _ => match (as_f64(a), as_f64(b)) {
                    (Some(x), Some(y)) => x.partial_cmp(&y),
                    _ => Some(a.cmp(b)),
                },
            };
            let r = match ord {
                None => op == Ne,
                Some(o) => match op {
                    Eq => o == Ordering::Equal,
                    Ne => o != Ordering::Equal,
                    Lt => o == Ordering::Less,
                    Le => o != Ordering::Greater,
                    Gt => o == Ordering::Greater,
                    _ => o != Ordering::Less,
                },
            };
            Ok(Value::Bool(r))
        }
        And | Or => match (a, b) {
            (Value::Bool(x), Value::Bool(y)) => {
                Ok(Value::Bool(if op == And { *x && *y } else { *x || *y }))
            }
            _ => Err(format!("operator `{}` on {a} and {b}", op.symbol())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse_expr;

    fn udf(src: &str) -> Udf {
        Udf::from_lambda(&parse_expr(src).unwrap())
    }

    #[test]
    fn evaluates_and_prints() {
        let f = udf("x => x + 1");
        assert_eq!(f.apply(&Value::Int(41)).unwrap(), Value::Int(42));
        assert_eq!(f.to_string(), "x => x + 1");
        let g = udf("p => (p.0, (p.1 - 2) * 3)");
        assert_eq!(g.to_string(), "p => (p.0, (p.1 - 2) * 3)");
        let v = Value::tuple(vec![Value::Int(1), Value::Int(5)]);
        assert_eq!(
            g.apply(&v).unwrap(),
            Value::tuple(vec![Value::Int(1), Value::Int(9)])
        );
    }

    #[test]
    fn string_concatenation() {
        let f = udf("d => \"pageVisitLog\" + d");
        assert_eq!(
            f.apply(&Value::Int(3)).unwrap(),
            Value::str("pageVisitLog3")
        );
    }

    #[test]
    fn checked_arithmetic() {
        assert!(eval_binary(BinOp::Div, &Value::Int(1), &Value::Int(0)).is_err());
        assert!(eval_binary(BinOp::Add, &Value::Int(i64::MAX), &Value::Int(1)).is_err());
        assert_eq!(
            eval_binary(BinOp::Lt, &Value::Int(1), &Value::Float(1.5)).unwrap(),
            Value::Bool(true)
        );
    }

    #[test]
    fn printing_reparses_to_same_tree() {
        for src in [
            "x => -(x - 1)",
            "x => (x < 2) == (x > 5)",
            "x => x - (1 - 2)",
            "x => !(x.0 && x.1) || x.2",
            "x => abs(x) % 7",
            "x => x * (-3)",
        ] {
            let f = udf(src);
            let g = udf(&f.to_string());
            assert_eq!(f, g, "{src} printed as {f}");
        }
    }
}
