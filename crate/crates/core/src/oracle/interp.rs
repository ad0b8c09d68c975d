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

//! Direct interpreter for type-checked source programs.
//!
//! Works on the syntax tree without normalization, SSA or dataflow operators, with
//! its own nested-loop join and cross. Used to cross-check the sequential trace.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frontend::ast::{Builtin, Expr, ExprKind, Method, Program, Stmt, StmtKind};
use crate::ssa::{Rhs, SsaProgram};
use crate::transform::IoEnv;
use crate::udf::{eval_binary, eval_unary, Udf};
use crate::value::{Bag, Value};

use super::{condition_value, ExecutionTrace};

/// Every value assigned to each source variable, in execution order, plus the files
/// written. Scalars appear as one-element bags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments {
    pub vars: BTreeMap<String, Vec<Bag>>,
    pub effects: BTreeMap<String, Bag>,
}

impl Assignments {
    /// Reads the assignment sequence back out of a sequential trace of `ssa`.
    pub fn from_trace(trace: &ExecutionTrace, ssa: &SsaProgram) -> Assignments {
        let mut order: Vec<(usize, usize, &str, &Bag)> = Vec::new();
        for ((name, len), bag) in &trace.bags {
            let Some(v) = ssa.var_named(name) else {
                continue;
            };
            let var = ssa.var(v);
            if var.is_temp() || matches!(ssa.def(v).rhs, Rhs::Phi(_)) {
                continue;
            }
            order.push((*len, ssa.def_index(v), &var.base, bag));
        }
        order.sort_by_key(|&(l, i, _, _)| (l, i));
        let mut vars: BTreeMap<String, Vec<Bag>> = BTreeMap::new();
        for (_, _, base, bag) in order {
            vars.entry(base.to_string()).or_default().push(bag.clone());
        }
        Assignments {
            vars,
            effects: trace.effects.clone(),
        }
    }

    /// Differences from `other`, with float tolerance.
    pub fn diff(&self, other: &Assignments) -> Vec<String> {
        let tol = super::trace::FLOAT_TOLERANCE;
        let mut out = Vec::new();
        let names: std::collections::BTreeSet<&String> =
            self.vars.keys().chain(other.vars.keys()).collect();
        for n in names {
            let (a, b) = (self.vars.get(n), other.vars.get(n));
            let (a, b) = (
                a.map_or(&[][..], Vec::as_slice),
                b.map_or(&[][..], Vec::as_slice),
            );
            if a.len() != b.len() {
                out.push(format!("{n}: {} assignments vs {}", a.len(), b.len()));
            } else if let Some(i) = (0..a.len()).find(|&i| !a[i].approx_eq(&b[i], tol)) {
                out.push(format!("{n}: assignment {} is {} vs {}", i + 1, a[i], b[i]));
            }
        }
        let files: std::collections::BTreeSet<&String> =
            self.effects.keys().chain(other.effects.keys()).collect();
        for f in files {
            match (self.effects.get(f), other.effects.get(f)) {
                (Some(a), Some(b)) if a.approx_eq(b, tol) => {}
                (a, b) => out.push(format!("file {f:?}: {a:?} vs {b:?}")),
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum DVal {
    Scalar(Option<Value>),
    Bag(Vec<Value>),
}

impl DVal {
    fn to_bag(&self) -> Bag {
        match self {
            DVal::Scalar(v) => v.iter().cloned().collect(),
            DVal::Bag(b) => Bag::from_vec(b.clone()),
        }
    }

    fn bag(self) -> Result<Vec<Value>> {
        match self {
            DVal::Bag(b) => Ok(b),
            DVal::Scalar(_) => Err(Error::Internal("bag operation on a scalar".into())),
        }
    }

    fn len(&self) -> usize {
        match self {
            DVal::Scalar(_) => 1,
            DVal::Bag(b) => b.len(),
        }
    }
}

struct Interp<'a> {
    io: &'a IoEnv,
    env: BTreeMap<String, DVal>,
    out: Assignments,
    elements: usize,
    budget: usize,
}

/// Runs `program` (type-checked) against `io`, which receives the writes.
pub fn interpret(program: &Program, io: &IoEnv, budget: usize) -> Result<Assignments> {
    let mut it = Interp {
        io,
        env: BTreeMap::new(),
        out: Assignments::default(),
        elements: 0,
        budget,
    };
    it.block(&program.stmts)?;
    it.out.effects = io.outputs();
    Ok(it.out)
}

fn rt<T>(r: std::result::Result<T, String>) -> Result<T> {
    r.map_err(Error::Runtime)
}

impl Interp<'_> {
    fn block(&mut self, stmts: &[Stmt]) -> Result<()> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn cond(&mut self, e: &Expr) -> Result<bool> {
        let v = self.expr(e)?;
        let name = e.as_var().unwrap_or("condition");
        condition_value(name, v.to_bag().elements())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<()> {
        match &s.kind {
            StmtKind::Assign { name, value } => {
                let v = self.expr(value)?;
                self.elements += v.len();
                if self.elements > self.budget {
                    return Err(Error::TraceBudget {
                        budget: self.budget,
                    });
                }
                self.out
                    .vars
                    .entry(name.clone())
                    .or_default()
                    .push(v.to_bag());
                self.env.insert(name.clone(), v);
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.cond(cond)? {
                    self.block(then_branch)?;
                } else if let Some(e) = else_branch {
                    self.block(e)?;
                }
            }
            StmtKind::While { cond, body } => {
                while self.cond(cond)? {
                    self.block(body)?;
                }
            }
            StmtKind::DoWhile { body, cond } => loop {
                self.block(body)?;
                if !self.cond(cond)? {
                    break;
                }
            },
        }
        Ok(())
    }

    fn scalar(&mut self, e: &Expr) -> Result<Option<Value>> {
        match self.expr(e)? {
            DVal::Scalar(v) => Ok(v),
            DVal::Bag(_) => Err(Error::Internal("scalar operation on a bag".into())),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<DVal> {
        Ok(match &e.kind {
            ExprKind::Lit(v) => DVal::Scalar(Some(v.clone())),
            ExprKind::Var(n) => self
                .env
                .get(n)
                .cloned()
                .ok_or_else(|| Error::Internal(format!("`{n}` is unbound")))?,
            ExprKind::Unary(op, a) => match self.scalar(a)? {
                None => DVal::Scalar(None),
                Some(v) => DVal::Scalar(Some(rt(eval_unary(*op, &v))?)),
            },
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (self.scalar(a)?, self.scalar(b)?);
                match (a, b) {
                    (Some(a), Some(b)) => DVal::Scalar(Some(rt(eval_binary(*op, &a, &b))?)),
                    _ => DVal::Scalar(None),
                }
            }
            ExprKind::Tuple(items) => {
                let mut vals = Vec::new();
                for i in items {
                    match self.scalar(i)? {
                        Some(v) => vals.push(v),
                        None => return Ok(DVal::Scalar(None)),
                    }
                }
                DVal::Scalar(Some(Value::tuple(vals)))
            }
            ExprKind::Field(a, i) => match self.scalar(a)? {
                None => DVal::Scalar(None),
                Some(Value::Tuple(items)) => DVal::Scalar(Some(
                    items
                        .get(*i)
                        .cloned()
                        .ok_or_else(|| Error::Runtime(format!("field {i} out of range")))?,
                )),
                Some(v) => return Err(Error::Runtime(format!("field access on non-tuple {v}"))),
            },
            ExprKind::Method { recv, method, args } => self.method(recv, *method, args)?,
            ExprKind::Builtin {
                func,
                type_arg,
                args,
            } => match func {
                Builtin::EmptyBag => DVal::Bag(Vec::new()),
                Builtin::SingletonBag => DVal::Bag(self.scalar(&args[0])?.into_iter().collect()),
                Builtin::ReadFile => {
                    let ty = type_arg
                        .clone()
                        .ok_or_else(|| Error::Internal("readFile without element type".into()))?;
                    match self.scalar(&args[0])? {
                        None => DVal::Bag(Vec::new()),
                        Some(Value::Str(name)) => DVal::Bag(self.io.read_shard(&name, &ty, 0, 1)?),
                        Some(v) => {
                            return Err(Error::Runtime(format!("file name {v} is not a string")))
                        }
                    }
                }
            },
            ExprKind::Lambda { .. } => {
                return Err(Error::Internal("lambda outside a bag operator".into()))
            }
        })
    }

    fn method(&mut self, recv: &Expr, method: Method, args: &[Expr]) -> Result<DVal> {
        let data = self.expr(recv)?.bag()?;
        Ok(match method {
            Method::Map => {
                let f = Udf::from_lambda(&args[0]);
                DVal::Bag(data.iter().map(|v| rt(f.apply(v))).collect::<Result<_>>()?)
            }
            Method::Filter => {
                let f = Udf::from_lambda(&args[0]);
                let mut out = Vec::new();
                for v in data {
                    match rt(f.apply(&v))? {
                        Value::Bool(true) => out.push(v),
                        Value::Bool(false) => {}
                        other => {
                            return Err(Error::Runtime(format!(
                                "filter predicate returned {other}"
                            )))
                        }
                    }
                }
                DVal::Bag(out)
            }
            Method::Join => {
                let other = self.expr(&args[0])?.bag()?;
                let mut out = Vec::new();
                for a in &data {
                    for b in &other {
                        if a.key() == b.key() {
                            let mut row = a.columns();
                            row.extend(b.columns().into_iter().skip(1));
                            out.push(Value::from_columns(row));
                        }
                    }
                }
                DVal::Bag(out)
            }
            Method::Cross => {
                let other = self.expr(&args[0])?.bag()?;
                let mut out = Vec::new();
                for a in &data {
                    for b in &other {
                        let mut row = a.columns();
                        row.extend(b.columns());
                        out.push(Value::from_columns(row));
                    }
                }
                DVal::Bag(out)
            }
            Method::ReduceByKey => {
                let f = Udf::from_lambda(&args[0]);
                let mut groups: Vec<(Value, Value)> = Vec::new();
                for v in data {
                    let mut cols = v.columns();
                    let k = cols.remove(0);
                    let val = Value::from_columns(cols);
                    match groups.iter_mut().find(|(g, _)| *g == k) {
                        Some((_, acc)) => {
                            *acc = rt(f.apply(&Value::tuple(vec![acc.clone(), val])))?
                        }
                        None => groups.push((k, val)),
                    }
                }
                DVal::Bag(
                    groups
                        .into_iter()
                        .map(|(k, acc)| {
                            let mut row = vec![k];
                            row.extend(acc.columns());
                            Value::from_columns(row)
                        })
                        .collect(),
                )
            }
            Method::Reduce => {
                let f = Udf::from_lambda(&args[0]);
                let mut acc: Option<Value> = None;
                for v in data {
                    acc = Some(match acc {
                        None => v,
                        Some(a) => rt(f.apply(&Value::tuple(vec![a, v])))?,
                    });
                }
                DVal::Bag(acc.into_iter().collect())
            }
            Method::Count => DVal::Scalar(Some(Value::Int(data.len() as i64))),
            Method::WriteFile => {
                match self.scalar(&args[0])? {
                    None => {}
                    Some(Value::Str(name)) => self.io.write_part(&name, 0, data)?,
                    Some(v) => {
                        return Err(Error::Runtime(format!("file name {v} is not a string")))
                    }
                }
                DVal::Bag(Vec::new())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{run_sequential, DEFAULT_BUDGET};
    use crate::programs;
    use crate::ssa::compile_source;

    fn both(src: &str, io: &IoEnv) -> (Assignments, Assignments) {
        let c = compile_source(src).unwrap();
        let t = run_sequential(&c.lifted, io, DEFAULT_BUDGET).unwrap();
        let a = interpret(&c.typed, &io.fresh(), DEFAULT_BUDGET).unwrap();
        (a, Assignments::from_trace(&t, &c.lifted))
    }

    #[test]
    fn agrees_on_renaming_example() {
        let (a, b) = both(programs::SSA_STRAIGHT, &IoEnv::in_memory());
        assert_eq!(a.vars["a"].len(), 2);
        assert!(a.diff(&b).is_empty(), "{:?}", a.diff(&b));
    }

    #[test]
    fn agrees_on_visit_count() {
        let mut io = IoEnv::in_memory();
        io.add_file("pageAttributes", "1,0\n2,0\n3,1\n");
        for d in 1..=4 {
            io.add_file(
                &format!("pageVisitLog{d}"),
                format!("1\n2\n{}\n3\n", d % 3 + 1),
            );
        }
        let (a, b) = both(&programs::visit_count(4), &io);
        assert_eq!(a.effects.len(), 3);
        assert!(a.diff(&b).is_empty(), "{:?}", a.diff(&b));
    }
}
