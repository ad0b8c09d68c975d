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

//! Structural checks of SSA programs.

use std::collections::BTreeSet;

use super::{Rhs, SsaProgram};
use crate::error::{Error, Result};

/// Checks single assignment, Φ placement, dominance of definitions over uses,
/// condition variables, and (for lifted programs) that every type is a bag.
pub fn verify(p: &SsaProgram) -> Result<()> {
    let mut problems = Vec::new();
    let mut defs = vec![0usize; p.vars.len()];
    for (b, a) in p.assigns() {
        defs[a.target] += 1;
        if p.var(a.target).block != b {
            problems.push(format!(
                "{} recorded in block {} but defined in {b}",
                p.var(a.target).name,
                p.var(a.target).block
            ));
        }
    }
    for (v, n) in defs.iter().enumerate() {
        if *n != 1 {
            problems.push(format!("{} has {n} definitions", p.var(v).name));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Internal(problems.join("; ")));
    }

    let idoms = p.cfg.idoms();
    let merges: BTreeSet<_> = p.cfg.merge_points().into_iter().collect();
    for b in p.cfg.blocks() {
        let preds: BTreeSet<_> = p.cfg.preds(b).into_iter().collect();
        let mut in_head = true;
        for (i, a) in p.block(b).iter().enumerate() {
            let name = &p.var(a.target).name;
            if p.lifted && !p.var(a.target).ty.is_bag() {
                problems.push(format!("{name} is not bag-typed after lifting"));
            }
            match &a.rhs {
                Rhs::Phi(ins) => {
                    if !in_head {
                        problems.push(format!("phi {name} is not at the head of block {b}"));
                    }
                    if !merges.contains(&b) {
                        problems.push(format!(
                            "phi {name} in block {b}, which is not a merge point"
                        ));
                    }
                    if ins.len() != preds.len() {
                        problems.push(format!(
                            "phi {name} has {} inputs, block {b} has {} predecessors",
                            ins.len(),
                            preds.len()
                        ));
                    }
                    let tags: BTreeSet<_> = ins.iter().map(|i| i.pred).collect();
                    if tags != preds {
                        problems.push(format!(
                            "phi {name} input tags {tags:?} differ from predecessors {preds:?}"
                        ));
                    }
                    for inp in ins {
                        let d = p.var(inp.var).block;
                        if !p.cfg.dominates(&idoms, d, inp.pred) {
                            problems.push(format!(
                                "phi {name}: {} does not reach from block {}",
                                p.var(inp.var).name,
                                inp.pred
                            ));
                        }
                    }
                }
                rhs => {
                    in_head = false;
                    for u in rhs.uses() {
                        let d = p.var(u).block;
                        let ok = if d == b {
                            p.def_index(u) < i
                        } else {
                            p.cfg.dominates(&idoms, d, b)
                        };
                        if !ok {
                            problems.push(format!(
                                "use of {} in {name} is not dominated by its definition",
                                p.var(u).name
                            ));
                        }
                    }
                }
            }
        }
        match (p.cfg.is_branch(b), p.cond_var(b)) {
            (true, None) => {
                problems.push(format!("block {b} branches without a condition variable"))
            }
            (true, Some(c)) if p.var(c).block != b => problems.push(format!(
                "condition {} of block {b} lives in block {}",
                p.var(c).name,
                p.var(c).block
            )),
            (false, Some(_)) => {
                problems.push(format!("block {b} has a condition but does not branch"))
            }
            _ => {}
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Internal(problems.join("; ")))
    }
}
