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

//! SSA construction for structured programs.
//!
//! Φs are placed at the two merge shapes the language has: if-joins and do-while heads.
//! A loop head gets a Φ for every variable that is assigned in the body and already
//! defined before the loop.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Assign, Operand, PhiInput, PrimOp, Rhs, SsaProgram, SsaVar, VarId};
use crate::frontend::ast::{Builtin, Expr, ExprKind, Method, Stmt, StmtKind};
use crate::frontend::cfg::{lower, LoweringSink};
use crate::frontend::BlockId;
use crate::udf::Udf;
use crate::value::ValueType;

/// Converts a normalized program to SSA form.
pub fn to_ssa(normalized: &crate::frontend::Program) -> SsaProgram {
    let mut sink = SsaSink {
        next_temp: max_temp(&normalized.stmts) + 1,
        ..SsaSink::default()
    };
    let cfg = lower(&normalized.stmts, &mut sink);
    let n = cfg.len();
    sink.blocks.resize(n, Vec::new());
    sink.cond_vars.resize(n, None);
    SsaProgram {
        vars: sink.vars,
        cfg,
        blocks: sink.blocks,
        cond_vars: sink.cond_vars,
        lifted: false,
    }
}

fn max_temp(stmts: &[Stmt]) -> usize {
    let mut m = 0;
    for s in stmts {
        match &s.kind {
            StmtKind::Assign { name, .. } => {
                if let Some(n) = name.strip_prefix('$').and_then(|d| d.parse::<usize>().ok()) {
                    m = m.max(n);
                }
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                m = m.max(max_temp(then_branch));
                m = m.max(else_branch.as_deref().map_or(0, max_temp));
            }
            StmtKind::DoWhile { body, .. } | StmtKind::While { body, .. } => {
                m = m.max(max_temp(body));
            }
            StmtKind::Expr(_) => {}
        }
    }
    m
}

fn assigned_names(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Assign { name, .. } => {
                out.insert(name.clone());
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                assigned_names(then_branch, out);
                if let Some(e) = else_branch {
                    assigned_names(e, out);
                }
            }
            StmtKind::DoWhile { body, .. } | StmtKind::While { body, .. } => {
                assigned_names(body, out)
            }
            StmtKind::Expr(_) => {}
        }
    }
}

type Env = BTreeMap<String, VarId>;

#[derive(Default)]
struct SsaSink {
    vars: Vec<SsaVar>,
    blocks: Vec<Vec<Assign>>,
    cond_vars: Vec<Option<BlockId>>,
    versions: HashMap<String, u32>,
    /// Order in which source names were first assigned; orders Φs.
    first_def: HashMap<String, usize>,
    env: Env,
    pending_loops: Vec<(BlockId, Vec<(String, VarId)>)>,
    next_temp: usize,
}

impl SsaSink {
    fn ensure(&mut self, b: BlockId) {
        if self.blocks.len() < b {
            self.blocks.resize(b, Vec::new());
            self.cond_vars.resize(b, None);
        }
    }

    fn new_var(&mut self, base: &str, ty: ValueType, block: BlockId) -> VarId {
        let n = self.first_def.len();
        self.first_def.entry(base.to_string()).or_insert(n);
        let (name, version) = if base.starts_with('$') {
            (base.to_string(), 0)
        } else {
            let v = self.versions.entry(base.to_string()).or_insert(0);
            *v += 1;
            (format!("{base}_{v}"), *v)
        };
        self.vars.push(SsaVar {
            name,
            base: base.to_string(),
            version,
            orig_ty: ty.clone(),
            ty,
            block,
        });
        self.vars.len() - 1
    }

    fn push(&mut self, block: BlockId, target: VarId, rhs: Rhs) {
        self.ensure(block);
        self.blocks[block - 1].push(Assign { target, rhs });
    }

    fn operand(&self, e: &Expr) -> Operand {
        match &e.kind {
            ExprKind::Var(n) => Operand::Var(self.lookup(n)),
            ExprKind::Lit(v) => Operand::Lit(v.clone()),
            other => panic!("operand is not an atom after normalization: {other:?}"),
        }
    }

    fn lookup(&self, name: &str) -> VarId {
        *self
            .env
            .get(name)
            .unwrap_or_else(|| panic!("`{name}` has no reaching definition"))
    }

    fn rhs(&self, e: &Expr) -> Rhs {
        let prim = |op: PrimOp, args: Vec<Operand>| Rhs::Prim { op, args };
        match &e.kind {
            ExprKind::Lit(v) => Rhs::Constant(v.clone()),
            ExprKind::Var(_) => prim(PrimOp::Copy, vec![self.operand(e)]),
            ExprKind::Unary(op, a) => prim(PrimOp::Unary(*op), vec![self.operand(a)]),
            ExprKind::Binary(op, a, b) => {
                prim(PrimOp::Binary(*op), vec![self.operand(a), self.operand(b)])
            }
            ExprKind::Method { recv, method, args } => {
                let r = self.operand(recv);
                match method {
                    Method::Map => prim(PrimOp::Map(Udf::from_lambda(&args[0])), vec![r]),
                    Method::Filter => prim(PrimOp::Filter(Udf::from_lambda(&args[0])), vec![r]),
                    Method::ReduceByKey => {
                        prim(PrimOp::ReduceByKey(Udf::from_lambda(&args[0])), vec![r])
                    }
                    Method::Reduce => prim(PrimOp::Reduce(Udf::from_lambda(&args[0])), vec![r]),
                    Method::Count => prim(PrimOp::Count, vec![r]),
                    Method::Join => prim(PrimOp::Join, vec![r, self.operand(&args[0])]),
                    Method::Cross => prim(PrimOp::Cross, vec![r, self.operand(&args[0])]),
                    Method::WriteFile => prim(PrimOp::WriteFile, vec![r, self.operand(&args[0])]),
                }
            }
            ExprKind::Builtin {
                func,
                type_arg,
                args,
            } => {
                let elem = type_arg.clone().unwrap_or(ValueType::Int);
                match func {
                    Builtin::ReadFile => prim(PrimOp::ReadFile(elem), vec![self.operand(&args[0])]),
                    Builtin::EmptyBag => prim(PrimOp::EmptyBag(elem), vec![]),
                    Builtin::SingletonBag => {
                        prim(PrimOp::SingletonBag, vec![self.operand(&args[0])])
                    }
                }
            }
            other => panic!("unexpected expression after normalization: {other:?}"),
        }
    }

    fn phi_order(&self, names: &mut [String]) {
        names.sort_by_key(|n| self.first_def.get(n).copied().unwrap_or(usize::MAX));
    }
}

impl LoweringSink for SsaSink {
    type Env = Env;

    fn env(&self) -> Env {
        self.env.clone()
    }

    fn set_env(&mut self, env: Env) {
        self.env = env;
    }

    fn stmt(&mut self, block: BlockId, stmt: &Stmt) {
        let StmtKind::Assign { name, value } = &stmt.kind else {
            panic!("expression statements are assigned to temporaries during normalization");
        };
        let rhs = self.rhs(value);
        let ty = value.ty.clone().expect("typed expression");
        let v = self.new_var(name, ty, block);
        self.push(block, v, rhs);
        self.env.insert(name.clone(), v);
    }

    fn branch(&mut self, block: BlockId, cond: &Expr) {
        let name = cond.as_var().expect("normalized condition");
        let mut v = self.lookup(name);
        if self.vars[v].block != block {
            // The condition node must live in the block whose branch it decides.
            let t = format!("${}", self.next_temp);
            self.next_temp += 1;
            let c = self.new_var(&t, self.vars[v].ty.clone(), block);
            self.push(
                block,
                c,
                Rhs::Prim {
                    op: PrimOp::Copy,
                    args: vec![Operand::Var(v)],
                },
            );
            v = c;
        }
        self.ensure(block);
        self.cond_vars[block - 1] = Some(v);
    }

    fn if_join(&mut self, join: BlockId, then_in: (BlockId, Env), else_in: (BlockId, Env)) {
        let (tb, tenv) = then_in;
        let (eb, eenv) = else_in;
        let mut merged = Env::new();
        let mut need_phi = Vec::new();
        for (name, &tv) in &tenv {
            if let Some(&ev) = eenv.get(name) {
                if tv == ev {
                    merged.insert(name.clone(), tv);
                } else if self.vars[tv].ty == self.vars[ev].ty {
                    need_phi.push(name.clone());
                }
            }
        }
        self.phi_order(&mut need_phi);
        for name in need_phi {
            let (tv, ev) = (tenv[&name], eenv[&name]);
            let phi = self.new_var(&name, self.vars[tv].ty.clone(), join);
            self.push(
                join,
                phi,
                Rhs::Phi(vec![
                    PhiInput { var: tv, pred: tb },
                    PhiInput { var: ev, pred: eb },
                ]),
            );
            merged.insert(name, phi);
        }
        self.env = merged;
    }

    fn loop_enter(&mut self, head: BlockId, entry_pred: Option<BlockId>, body: &[Stmt]) {
        let mut assigned = BTreeSet::new();
        assigned_names(body, &mut assigned);
        let mut carried: Vec<String> = assigned
            .into_iter()
            .filter(|n| self.env.contains_key(n))
            .collect();
        self.phi_order(&mut carried);
        let mut phis = Vec::new();
        for name in carried {
            let init = self.env[&name];
            let pred = entry_pred.expect("loop-carried variables imply a loop entry edge");
            let phi = self.new_var(&name, self.vars[init].ty.clone(), head);
            self.push(head, phi, Rhs::Phi(vec![PhiInput { var: init, pred }]));
            self.env.insert(name.clone(), phi);
            phis.push((name, phi));
        }
        self.pending_loops.push((head, phis));
    }

    fn loop_back(&mut self, head: BlockId, back_pred: BlockId) {
        let (h, phis) = self.pending_loops.pop().expect("balanced loops");
        assert_eq!(h, head);
        for (name, phi) in phis {
            let back = self.lookup(&name);
            let block = &mut self.blocks[head - 1];
            let a = block
                .iter_mut()
                .find(|a| a.target == phi)
                .expect("phi exists");
            if let Rhs::Phi(ins) = &mut a.rhs {
                ins.push(PhiInput {
                    var: back,
                    pred: back_pred,
                });
            }
        }
    }

    fn has_phis(&self, block: BlockId) -> bool {
        self.blocks
            .get(block - 1)
            .is_some_and(|b| b.iter().any(|a| a.rhs.is_phi()))
    }

    fn remove_block(&mut self, block: BlockId) {
        self.ensure(block);
        self.blocks.truncate(block - 1);
        self.cond_vars.truncate(block - 1);
    }
}
