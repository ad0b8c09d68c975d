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

//! Stable textual form of SSA programs.

use std::fmt::Write;

use super::{Operand, PrimOp, Rhs, SsaProgram};
use crate::frontend::ast::UnOp;
use crate::frontend::pretty::print_literal;
use crate::frontend::Terminator;

/// One assignment per line, blocks delimited by `block N:` headers, each block
/// ending with its terminator.
pub fn dump_ssa(p: &SsaProgram) -> String {
    let mut out = String::new();
    for b in p.cfg.blocks() {
        writeln!(out, "block {b}:").unwrap();
        for a in p.block(b) {
            let v = p.var(a.target);
            writeln!(out, "  {}: {} = {}", v.name, v.ty, rhs_text(p, &a.rhs)).unwrap();
        }
        match p.cfg.term(b) {
            Terminator::Goto(t) => match t.block() {
                Some(x) => writeln!(out, "  goto {x}").unwrap(),
                None => writeln!(out, "  exit").unwrap(),
            },
            Terminator::Branch(t, f) => {
                let c = p.cond_var(b).map_or("?", |c| p.var(c).name.as_str());
                writeln!(out, "  branch {c} ? {t} : {f}").unwrap();
            }
        }
    }
    out
}

fn operand(p: &SsaProgram, o: &Operand) -> String {
    match o {
        Operand::Var(v) => p.var(*v).name.clone(),
        Operand::Lit(l) => print_literal(l),
    }
}

pub(crate) fn rhs_text(p: &SsaProgram, rhs: &Rhs) -> String {
    match rhs {
        Rhs::Constant(v) if p.lifted => format!("singletonBag({})", print_literal(v)),
        Rhs::Constant(v) => print_literal(v),
        Rhs::Phi(ins) => {
            let parts: Vec<String> = ins
                .iter()
                .map(|i| format!("{} @{}", p.var(i.var).name, i.pred))
                .collect();
            format!("phi({})", parts.join(", "))
        }
        Rhs::Prim { op, args } => {
            let a: Vec<String> = args.iter().map(|o| operand(p, o)).collect();
            let arg = |i: usize| a.get(i).cloned().unwrap_or_default();
            match op {
                PrimOp::Copy => arg(0),
                PrimOp::Unary(UnOp::Neg) => format!("-{}", arg(0)),
                PrimOp::Unary(UnOp::Not) => format!("!{}", arg(0)),
                PrimOp::Unary(u) => format!("{}({})", u.call_name().unwrap_or("?"), arg(0)),
                PrimOp::Binary(b) => format!("{} {} {}", arg(0), b.symbol(), arg(1)),
                PrimOp::Map(f) => format!("{}.map({f})", arg(0)),
                PrimOp::Filter(f) => format!("{}.filter({f})", arg(0)),
                PrimOp::ReduceByKey(f) => format!("{}.reduceByKey({f})", arg(0)),
                PrimOp::Reduce(f) => format!("{}.reduce({f})", arg(0)),
                PrimOp::Count => format!("{}.count()", arg(0)),
                PrimOp::Join => format!("{}.join({})", arg(0), arg(1)),
                PrimOp::Cross => format!("{}.cross({})", arg(0), arg(1)),
                PrimOp::WriteFile => format!("{}.writeFile({})", arg(0), arg(1)),
                PrimOp::ReadFile(t) => format!("readFile<{t}>({})", arg(0)),
                PrimOp::SingletonBag => format!("singletonBag({})", arg(0)),
                PrimOp::EmptyBag(t) => format!("emptyBag<{t}>()"),
            }
        }
    }
}
