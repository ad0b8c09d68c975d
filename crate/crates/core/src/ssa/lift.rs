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

//! Lifting of scalar variables into one-element bags.
//!
//! Scalar constants become singleton-bag constants, unary scalar operations become
//! maps, and binary operations become maps when one side is a literal and a cross
//! followed by a map otherwise.

use super::{Assign, Operand, PrimOp, Rhs, SsaProgram, SsaVar};
use crate::udf::{eval_binary, eval_unary, UExpr, Udf};
use crate::value::ValueType;

pub fn lift_scalars(ssa: &SsaProgram) -> SsaProgram {
    let mut next_temp = ssa
        .vars
        .iter()
        .filter_map(|v| {
            v.name
                .strip_prefix('$')
                .and_then(|d| d.parse::<usize>().ok())
        })
        .max()
        .unwrap_or(0)
        + 1;
    let mut vars = ssa.vars.clone();
    for v in &mut vars {
        v.ty = lift_type(&v.ty);
    }
    let mut blocks = Vec::with_capacity(ssa.blocks.len());
    for (i, block) in ssa.blocks.iter().enumerate() {
        let b = i + 1;
        let mut out = Vec::with_capacity(block.len());
        for a in block {
            let mut temp = |vars: &mut Vec<SsaVar>, ty: ValueType, orig: ValueType| {
                let name = format!("${next_temp}");
                next_temp += 1;
                vars.push(SsaVar {
                    name: name.clone(),
                    base: name,
                    version: 0,
                    ty,
                    orig_ty: orig,
                    block: b,
                });
                vars.len() - 1
            };
            let rhs = match &a.rhs {
                Rhs::Constant(_) | Rhs::Phi(_) => a.rhs.clone(),
                Rhs::Prim { op, args } => match (op, args.as_slice()) {
                    (PrimOp::Unary(u), [Operand::Var(x)]) => Rhs::Prim {
                        op: PrimOp::Map(Udf::new(
                            &param_for(&vars[*x]),
                            UExpr::Unary(*u, Box::new(UExpr::Param)),
                        )),
                        args: vec![Operand::Var(*x)],
                    },
                    (PrimOp::Unary(u), [Operand::Lit(l)]) => match eval_unary(*u, l) {
                        Ok(v) => Rhs::Constant(v),
                        Err(_) => {
                            let c = temp(&mut vars, ValueType::bag(l.value_type()), l.value_type());
                            out.push(Assign {
                                target: c,
                                rhs: Rhs::Constant(l.clone()),
                            });
                            Rhs::Prim {
                                op: PrimOp::Map(Udf::new(
                                    "x",
                                    UExpr::Unary(*u, Box::new(UExpr::Param)),
                                )),
                                args: vec![Operand::Var(c)],
                            }
                        }
                    },
                    (PrimOp::Binary(op), [Operand::Var(x), Operand::Lit(l)]) => Rhs::Prim {
                        op: PrimOp::Map(Udf::new(
                            &param_for(&vars[*x]),
                            UExpr::binary(*op, UExpr::Param, UExpr::Lit(l.clone())),
                        )),
                        args: vec![Operand::Var(*x)],
                    },
                    (PrimOp::Binary(op), [Operand::Lit(l), Operand::Var(x)]) => Rhs::Prim {
                        op: PrimOp::Map(Udf::new(
                            &param_for(&vars[*x]),
                            UExpr::binary(*op, UExpr::Lit(l.clone()), UExpr::Param),
                        )),
                        args: vec![Operand::Var(*x)],
                    },
                    (PrimOp::Binary(op), [Operand::Var(x), Operand::Var(y)]) => {
                        let (tx, ty) = (ssa.vars[*x].ty.clone(), ssa.vars[*y].ty.clone());
                        let pair = ValueType::Tuple(vec![tx, ty]);
                        let c = temp(&mut vars, ValueType::bag(pair.clone()), pair);
                        out.push(Assign {
                            target: c,
                            rhs: Rhs::Prim {
                                op: PrimOp::Cross,
                                args: vec![Operand::Var(*x), Operand::Var(*y)],
                            },
                        });
                        Rhs::Prim {
                            op: PrimOp::Map(Udf::new(
                                "p",
                                UExpr::binary(*op, UExpr::Param.field(0), UExpr::Param.field(1)),
                            )),
                            args: vec![Operand::Var(c)],
                        }
                    }
                    (PrimOp::Binary(op), [Operand::Lit(l), Operand::Lit(r)]) => {
                        match eval_binary(*op, l, r) {
                            Ok(v) => Rhs::Constant(v),
                            Err(_) => {
                                let c =
                                    temp(&mut vars, ValueType::bag(l.value_type()), l.value_type());
                                out.push(Assign {
                                    target: c,
                                    rhs: Rhs::Constant(l.clone()),
                                });
                                Rhs::Prim {
                                    op: PrimOp::Map(Udf::new(
                                        "x",
                                        UExpr::binary(*op, UExpr::Param, UExpr::Lit(r.clone())),
                                    )),
                                    args: vec![Operand::Var(c)],
                                }
                            }
                        }
                    }
                    (PrimOp::SingletonBag, [Operand::Var(x)]) => Rhs::Prim {
                        op: PrimOp::Copy,
                        args: vec![Operand::Var(*x)],
                    },
                    (PrimOp::SingletonBag, [Operand::Lit(l)]) => Rhs::Constant(l.clone()),
                    (PrimOp::Copy, [Operand::Lit(l)]) => Rhs::Constant(l.clone()),
                    _ => {
                        // Bag operations: literal arguments become their own constant nodes.
                        let mut new_args = Vec::with_capacity(args.len());
                        for arg in args {
                            match arg {
                                Operand::Var(_) => new_args.push(arg.clone()),
                                Operand::Lit(l) => {
                                    let c = temp(
                                        &mut vars,
                                        ValueType::bag(l.value_type()),
                                        l.value_type(),
                                    );
                                    out.push(Assign {
                                        target: c,
                                        rhs: Rhs::Constant(l.clone()),
                                    });
                                    new_args.push(Operand::Var(c));
                                }
                            }
                        }
                        Rhs::Prim {
                            op: op.clone(),
                            args: new_args,
                        }
                    }
                },
            };
            out.push(Assign {
                target: a.target,
                rhs,
            });
        }
        blocks.push(out);
    }
    SsaProgram {
        vars,
        cfg: ssa.cfg.clone(),
        blocks,
        cond_vars: ssa.cond_vars.clone(),
        lifted: true,
    }
}

fn lift_type(t: &ValueType) -> ValueType {
    if t.is_bag() {
        t.clone()
    } else {
        ValueType::bag(t.clone())
    }
}

/// Lambda parameter named after the first letter of the variable it maps over.
fn param_for(v: &SsaVar) -> String {
    v.base
        .chars()
        .next()
        .filter(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_lowercase().to_string())
        .unwrap_or_else(|| "x".to_string())
}
