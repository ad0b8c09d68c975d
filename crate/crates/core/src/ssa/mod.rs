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

//! Static single assignment form.

mod construct;
mod dump;
mod lift;
mod normalize;
mod verify;

pub use construct::to_ssa;
pub use dump::dump_ssa;
pub use lift::lift_scalars;
pub use normalize::normalize;
pub use verify::verify;

use crate::error::Result;
use crate::frontend::ast::{BinOp, UnOp};
use crate::frontend::{parse, typecheck, BlockId, CfgShape};
use crate::udf::Udf;
use crate::value::{Value, ValueType};

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct SsaVar {
    /// Display name: `base_version` for source variables, the temporary's name otherwise.
    pub name: String,
    pub base: String,
    /// 0 for temporaries.
    pub version: u32,
    pub ty: ValueType,
    /// Type before scalar lifting.
    pub orig_ty: ValueType,
    pub block: BlockId,
}

impl SsaVar {
    pub fn is_temp(&self) -> bool {
        self.base.starts_with('$')
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Var(VarId),
    Lit(Value),
}

impl Operand {
    pub fn var(&self) -> Option<VarId> {
        match self {
            Operand::Var(v) => Some(*v),
            Operand::Lit(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrimOp {
    Copy,
    Unary(UnOp),
    Binary(BinOp),
    Map(Udf),
    Filter(Udf),
    Join,
    Cross,
    ReduceByKey(Udf),
    Reduce(Udf),
    Count,
    /// Element type of the file.
    ReadFile(ValueType),
    WriteFile,
    SingletonBag,
    EmptyBag(ValueType),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiInput {
    pub var: VarId,
    /// Predecessor block the value flows in from.
    pub pred: BlockId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    Constant(Value),
    Phi(Vec<PhiInput>),
    Prim { op: PrimOp, args: Vec<Operand> },
}

impl Rhs {
    /// Variables referenced, in argument order.
    pub fn uses(&self) -> Vec<VarId> {
        match self {
            Rhs::Constant(_) => Vec::new(),
            Rhs::Phi(ins) => ins.iter().map(|i| i.var).collect(),
            Rhs::Prim { args, .. } => args.iter().filter_map(Operand::var).collect(),
        }
    }

    pub fn is_phi(&self) -> bool {
        matches!(self, Rhs::Phi(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assign {
    pub target: VarId,
    pub rhs: Rhs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaProgram {
    pub vars: Vec<SsaVar>,
    pub cfg: CfgShape,
    /// Assignments of each block (index `id - 1`).
    pub blocks: Vec<Vec<Assign>>,
    /// Variable governing the branch at the end of each block.
    pub cond_vars: Vec<Option<VarId>>,
    pub lifted: bool,
}

impl SsaProgram {
    pub fn var(&self, v: VarId) -> &SsaVar {
        &self.vars[v]
    }

    pub fn block(&self, b: BlockId) -> &[Assign] {
        &self.blocks[b - 1]
    }

    pub fn cond_var(&self, b: BlockId) -> Option<VarId> {
        self.cond_vars[b - 1]
    }

    pub fn var_named(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// All assignments in block order.
    pub fn assigns(&self) -> impl Iterator<Item = (BlockId, &Assign)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.iter().map(move |a| (i + 1, a)))
    }

    /// The assignment defining `v`.
    pub fn def(&self, v: VarId) -> &Assign {
        let b = self.vars[v].block;
        self.block(b)
            .iter()
            .find(|a| a.target == v)
            .expect("every variable has a definition")
    }

    /// Index of `v`'s definition within its block.
    pub fn def_index(&self, v: VarId) -> usize {
        let b = self.vars[v].block;
        self.block(b)
            .iter()
            .position(|a| a.target == v)
            .expect("every variable has a definition")
    }
}

/// Result of compiling source text through all front-end and SSA stages.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub typed: crate::frontend::Program,
    /// SSA before lifting, as used for golden dumps of the classic examples.
    pub ssa: SsaProgram,
    pub lifted: SsaProgram,
}

/// Parses, type checks, normalizes, converts to SSA and lifts scalars.
pub fn compile_source(src: &str) -> Result<Compiled> {
    let ast = parse(src)?;
    let typed = typecheck(&ast)?;
    let normalized = normalize(&typed);
    let ssa = to_ssa(&normalized);
    let lifted = lift_scalars(&ssa);
    Ok(Compiled { typed, ssa, lifted })
}
