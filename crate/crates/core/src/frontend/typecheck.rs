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

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frontend::ast::*;
use crate::value::ValueType;

/// Annotates every expression with its type and checks definite assignment.
pub fn typecheck(program: &Program) -> Result<Program> {
    let mut out = program.clone();
    let mut env = Env::default();
    check_block(&mut out.stmts, &mut env)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Defined(ValueType),
    /// Assigned with different types on different paths.
    Poisoned,
}

#[derive(Debug, Clone, Default)]
struct Env {
    vars: BTreeMap<String, Slot>,
}

impl Env {
    /// State after a control-flow merge: only variables assigned on both sides survive.
    fn merge(a: &Env, b: &Env) -> Env {
        let mut vars = BTreeMap::new();
        for (name, sa) in &a.vars {
            if let Some(sb) = b.vars.get(name) {
                let slot = if sa == sb { sa.clone() } else { Slot::Poisoned };
                vars.insert(name.clone(), slot);
            }
        }
        Env { vars }
    }
}

fn check_block(stmts: &mut [Stmt], env: &mut Env) -> Result<()> {
    for s in stmts {
        check_stmt(s, env)?;
    }
    Ok(())
}

fn check_cond(cond: &mut Expr, env: &Env) -> Result<()> {
    let t = check_expr(cond, env, Ctx::Top)?;
    if t != ValueType::Bool {
        return Err(Error::type_error(
            cond.span,
            format!("condition must be boolean, found {t}"),
        ));
    }
    Ok(())
}

/// Loop-carried variables must keep their type from one iteration to the next.
fn check_loop_stable(before: &Env, after: &Env, span: Span) -> Result<()> {
    for (name, slot) in &before.vars {
        if let (Slot::Defined(t), Some(after_slot)) = (slot, after.vars.get(name)) {
            if after_slot != slot {
                let found = match after_slot {
                    Slot::Defined(u) => u.to_string(),
                    Slot::Poisoned => "conflicting types".into(),
                };
                return Err(Error::type_error(
                    span,
                    format!("type of `{name}` changes across loop iterations ({t} vs {found})"),
                ));
            }
        }
    }
    Ok(())
}

fn check_stmt(s: &mut Stmt, env: &mut Env) -> Result<()> {
    match &mut s.kind {
        StmtKind::Assign { name, value } => {
            let t = check_expr(value, env, Ctx::Top)?;
            env.vars.insert(name.clone(), Slot::Defined(t));
        }
        StmtKind::Expr(e) => {
            check_expr(e, env, Ctx::Statement)?;
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            check_cond(cond, env)?;
            let mut then_env = env.clone();
            check_block(then_branch, &mut then_env)?;
            let mut else_env = env.clone();
            if let Some(els) = else_branch {
                check_block(els, &mut else_env)?;
            }
            *env = Env::merge(&then_env, &else_env);
        }
        StmtKind::DoWhile { body, cond } => {
            let before = env.clone();
            check_block(body, env)?;
            check_cond(cond, env)?;
            check_loop_stable(&before, env, s.span)?;
        }
        StmtKind::While { cond, body } => {
            check_cond(cond, env)?;
            let before = env.clone();
            let mut body_env = env.clone();
            check_block(body, &mut body_env)?;
            check_loop_stable(&before, &body_env, s.span)?;
            let mut recheck = cond.clone();
            check_cond(&mut recheck, &body_env)?;
            *env = Env::merge(&before, &body_env);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ctx {
    /// Ordinary expression position.
    Top,
    /// Top of an expression statement: `writeFile` allowed.
    Statement,
}

fn expect_type(e: &Expr, got: &ValueType, want: &ValueType, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::type_error(
            e.span,
            format!("{what} must be {want}, found {got}"),
        ));
    }
    Ok(())
}

fn bag_elem(e: &Expr, t: &ValueType, what: &str) -> Result<ValueType> {
    match t {
        ValueType::Bag(el) => Ok((**el).clone()),
        other => Err(Error::type_error(
            e.span,
            format!("{what} must be a bag, found {other}"),
        )),
    }
}

fn check_expr(e: &mut Expr, env: &Env, ctx: Ctx) -> Result<ValueType> {
    let span = e.span;
    let t = match &mut e.kind {
        ExprKind::Lit(v) => v.value_type(),
        ExprKind::Var(name) => match env.vars.get(name.as_str()) {
            Some(Slot::Defined(t)) => t.clone(),
            Some(Slot::Poisoned) => {
                return Err(Error::type_error(
                    span,
                    format!("`{name}` has different types on different control paths"),
                ))
            }
            None => {
                return Err(Error::type_error(
                    span,
                    format!("`{name}` may be used before it is assigned"),
                ))
            }
        },
        ExprKind::Unary(op, a) => {
            let at = check_expr(a, env, Ctx::Top)?;
            unary_type(*op, &at)
                .ok_or_else(|| Error::type_error(span, format!("cannot apply {op:?} to {at}")))?
        }
        ExprKind::Binary(op, a, b) => {
            let at = check_expr(a, env, Ctx::Top)?;
            let bt = check_expr(b, env, Ctx::Top)?;
            binary_type(*op, &at, &bt).ok_or_else(|| {
                Error::type_error(
                    span,
                    format!("operator `{}` cannot combine {at} and {bt}", op.symbol()),
                )
            })?
        }
        ExprKind::Tuple(_) | ExprKind::Field(..) => {
            return Err(Error::type_error(
                span,
                "tuples can only be built and inspected inside lambdas",
            ))
        }
        ExprKind::Lambda { .. } => {
            return Err(Error::type_error(
                span,
                "lambdas can only appear as operator arguments",
            ))
        }
        ExprKind::Builtin {
            func,
            type_arg,
            args,
        } => {
            let func = *func;
            match func {
                Builtin::ReadFile => {
                    arity(span, func.name(), args, 1)?;
                    let nt = check_expr(&mut args[0], env, Ctx::Top)?;
                    expect_type(&args[0], &nt, &ValueType::Str, "file name")?;
                    let el = type_arg.get_or_insert(ValueType::Int).clone();
                    ValueType::bag(el)
                }
                Builtin::EmptyBag => {
                    arity(span, func.name(), args, 0)?;
                    ValueType::bag(type_arg.get_or_insert(ValueType::Int).clone())
                }
                Builtin::SingletonBag => {
                    arity(span, func.name(), args, 1)?;
                    if type_arg.is_some() {
                        return Err(Error::type_error(
                            span,
                            "singletonBag takes no type argument",
                        ));
                    }
                    let at = check_expr(&mut args[0], env, Ctx::Top)?;
                    if at.is_bag() {
                        return Err(Error::type_error(span, "bags cannot be nested"));
                    }
                    ValueType::bag(at)
                }
            }
        }
        ExprKind::Method { recv, method, args } => {
            let method = *method;
            let rt = check_expr(recv, env, Ctx::Top)?;
            let el = bag_elem(recv, &rt, &format!("receiver of `{}`", method.name()))?;
            match method {
                Method::Map => {
                    arity(span, method.name(), args, 1)?;
                    let r = check_lambda(&mut args[0], &el)?;
                    if r.is_bag() {
                        return Err(Error::type_error(span, "bags cannot be nested"));
                    }
                    ValueType::bag(r)
                }
                Method::Filter => {
                    arity(span, method.name(), args, 1)?;
                    let r = check_lambda(&mut args[0], &el)?;
                    expect_type(&args[0], &r, &ValueType::Bool, "filter predicate")?;
                    rt.clone()
                }
                Method::Join => {
                    arity(span, method.name(), args, 1)?;
                    let ot = check_expr(&mut args[0], env, Ctx::Top)?;
                    let oel = bag_elem(&args[0], &ot, "join operand")?;
                    let (k1, k2) = (el.key_type(), oel.key_type());
                    if k1 != k2 {
                        return Err(Error::type_error(
                            span,
                            format!("join keys differ: {k1} vs {k2}"),
                        ));
                    }
                    let mut cols = el.columns();
                    cols.extend(oel.columns().into_iter().skip(1));
                    ValueType::bag(ValueType::from_columns(cols))
                }
                Method::Cross => {
                    arity(span, method.name(), args, 1)?;
                    let ot = check_expr(&mut args[0], env, Ctx::Top)?;
                    let oel = bag_elem(&args[0], &ot, "cross operand")?;
                    let mut cols = el.columns();
                    cols.extend(oel.columns());
                    ValueType::bag(ValueType::from_columns(cols))
                }
                Method::ReduceByKey => {
                    arity(span, method.name(), args, 1)?;
                    let cols = el.columns();
                    if cols.len() != 2 {
                        return Err(Error::type_error(
                            span,
                            format!("reduceByKey needs a bag of (key, value) pairs, found {el}"),
                        ));
                    }
                    let v = cols[1].clone();
                    let pair = ValueType::Tuple(vec![v.clone(), v.clone()]);
                    let r = check_lambda(&mut args[0], &pair)?;
                    expect_type(&args[0], &r, &v, "reduceByKey result")?;
                    rt.clone()
                }
                Method::Reduce => {
                    arity(span, method.name(), args, 1)?;
                    if !el.is_scalar() {
                        return Err(Error::type_error(
                            span,
                            format!("reduce needs a bag of scalars, found {el}"),
                        ));
                    }
                    let pair = ValueType::Tuple(vec![el.clone(), el.clone()]);
                    let r = check_lambda(&mut args[0], &pair)?;
                    expect_type(&args[0], &r, &el, "reduce result")?;
                    rt.clone()
                }
                Method::Count => {
                    arity(span, method.name(), args, 0)?;
                    ValueType::Int
                }
                Method::WriteFile => {
                    arity(span, method.name(), args, 1)?;
                    if ctx != Ctx::Statement {
                        return Err(Error::type_error(
                            span,
                            "writeFile can only be used as a statement",
                        ));
                    }
                    let nt = check_expr(&mut args[0], env, Ctx::Top)?;
                    expect_type(&args[0], &nt, &ValueType::Str, "file name")?;
                    rt.clone()
                }
            }
        }
    };
    e.ty = Some(t.clone());
    Ok(t)
}

fn arity(span: Span, name: &str, args: &[Expr], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::type_error(
            span,
            format!("`{name}` takes {n} argument(s), found {}", args.len()),
        ));
    }
    Ok(())
}

/// Checks a lambda argument against its parameter type and returns the body type.
fn check_lambda(e: &mut Expr, param_ty: &ValueType) -> Result<ValueType> {
    let span = e.span;
    let ExprKind::Lambda { param, body } = &mut e.kind else {
        return Err(Error::type_error(
            span,
            "expected a lambda such as `x => x + 1`",
        ));
    };
    let t = check_lambda_body(body, param, param_ty)?;
    e.ty = Some(t.clone());
    Ok(t)
}

fn check_lambda_body(e: &mut Expr, param: &str, param_ty: &ValueType) -> Result<ValueType> {
    let span = e.span;
    let t = match &mut e.kind {
        ExprKind::Lit(v) => v.value_type(),
        ExprKind::Var(name) => {
            if name != param {
                return Err(Error::type_error(
                    span,
                    format!("lambdas may only reference their parameter, found `{name}`"),
                ));
            }
            param_ty.clone()
        }
        ExprKind::Unary(op, a) => {
            let at = check_lambda_body(a, param, param_ty)?;
            unary_type(*op, &at)
                .ok_or_else(|| Error::type_error(span, format!("cannot apply {op:?} to {at}")))?
        }
        ExprKind::Binary(op, a, b) => {
            let at = check_lambda_body(a, param, param_ty)?;
            let bt = check_lambda_body(b, param, param_ty)?;
            binary_type(*op, &at, &bt).ok_or_else(|| {
                Error::type_error(
                    span,
                    format!("operator `{}` cannot combine {at} and {bt}", op.symbol()),
                )
            })?
        }
        ExprKind::Tuple(items) => {
            let mut cols = Vec::new();
            for it in items.iter_mut() {
                let t = check_lambda_body(it, param, param_ty)?;
                if !t.is_scalar() {
                    return Err(Error::type_error(it.span, "tuple fields must be scalars"));
                }
                cols.push(t);
            }
            ValueType::Tuple(cols)
        }
        ExprKind::Field(a, idx) => {
            let at = check_lambda_body(a, param, param_ty)?;
            match &at {
                ValueType::Tuple(cols) if *idx < cols.len() => cols[*idx].clone(),
                ValueType::Tuple(cols) => {
                    return Err(Error::type_error(
                        span,
                        format!("field {idx} out of range for a {}-tuple", cols.len()),
                    ))
                }
                other => {
                    return Err(Error::type_error(
                        span,
                        format!("field access on non-tuple type {other}"),
                    ))
                }
            }
        }
        ExprKind::Method { .. } | ExprKind::Builtin { .. } | ExprKind::Lambda { .. } => {
            return Err(Error::type_error(
                span,
                "bag operations are not allowed inside lambdas",
            ))
        }
    };
    e.ty = Some(t.clone());
    Ok(t)
}

pub fn unary_type(op: UnOp, a: &ValueType) -> Option<ValueType> {
    match op {
        UnOp::Neg | UnOp::Abs if a.is_numeric() => Some(a.clone()),
        UnOp::Not if *a == ValueType::Bool => Some(ValueType::Bool),
        UnOp::ToFloat if a.is_numeric() => Some(ValueType::Float),
        UnOp::ToInt if a.is_numeric() => Some(ValueType::Int),
        _ => None,
    }
}

pub fn binary_type(op: BinOp, a: &ValueType, b: &ValueType) -> Option<ValueType> {
    let numeric = || {
        if !(a.is_numeric() && b.is_numeric()) {
            None
        } else if *a == ValueType::Int && *b == ValueType::Int {
            Some(ValueType::Int)
        } else {
            Some(ValueType::Float)
        }
    };
    match op {
        BinOp::Add => {
            if (*a == ValueType::Str && b.is_scalar()) || (*b == ValueType::Str && a.is_scalar()) {
                Some(ValueType::Str)
            } else {
                numeric()
            }
        }
        BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => numeric(),
        BinOp::Eq | BinOp::Ne => {
            let ok = (a.is_numeric() && b.is_numeric()) || (a == b && !a.is_bag());
            ok.then_some(ValueType::Bool)
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ok = (a.is_numeric() && b.is_numeric())
                || (a == b && matches!(a, ValueType::Str | ValueType::Bool));
            ok.then_some(ValueType::Bool)
        }
        BinOp::And | BinOp::Or => {
            (*a == ValueType::Bool && *b == ValueType::Bool).then_some(ValueType::Bool)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse;

    fn check(src: &str) -> Result<Program> {
        typecheck(&parse(src).unwrap())
    }

    fn assigned_type(p: &Program, idx: usize) -> ValueType {
        match &p.stmts[idx].kind {
            StmtKind::Assign { value, .. } => value.ty.clone().unwrap(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn map_over_read_file() {
        let p = check("b = readFile(\"f\"); c = b.map(x => x + 1)").unwrap();
        assert_eq!(assigned_type(&p, 1), ValueType::bag(ValueType::Int));
    }

    #[test]
    fn condition_must_be_boolean() {
        let err = check("if (5) { x = 1 }").unwrap_err();
        assert!(
            err.to_string().contains("condition must be boolean"),
            "{err}"
        );
    }

    #[test]
    fn use_before_assignment_on_one_path() {
        let err = check("c = true; if (c) { x = 1 }; y = x").unwrap_err();
        assert!(err.to_string().contains("before it is assigned"), "{err}");
        assert!(check("c = true; if (c) { x = 1 } else { x = 2 }; y = x").is_ok());
    }

    #[test]
    fn join_columns() {
        let p = check(
            "a = readFile<(Int, String)>(\"a\"); b = readFile<(Int, Float)>(\"b\"); c = a.join(b)",
        )
        .unwrap();
        assert_eq!(
            assigned_type(&p, 2),
            ValueType::bag(ValueType::Tuple(vec![
                ValueType::Int,
                ValueType::Str,
                ValueType::Float
            ]))
        );
    }

    #[test]
    fn no_bag_nesting() {
        let err = check("b = emptyBag<Int>(); c = singletonBag(b)").unwrap_err();
        assert!(err.to_string().contains("nested"), "{err}");
    }

    #[test]
    fn lambdas_are_closed() {
        let err = check("k = 1; b = emptyBag<Int>(); c = b.map(x => x + k)").unwrap_err();
        assert!(
            err.to_string().contains("only reference their parameter"),
            "{err}"
        );
    }

    #[test]
    fn loop_types_are_stable() {
        let err = check("x = 1; do { x = \"s\"; c = false } while (c)").unwrap_err();
        assert!(
            err.to_string().contains("changes across loop iterations"),
            "{err}"
        );
    }

    #[test]
    fn string_concatenation_formats_ints() {
        let p = check("d = 3; f = \"log\" + d").unwrap();
        assert_eq!(assigned_type(&p, 1), ValueType::Str);
    }
}
