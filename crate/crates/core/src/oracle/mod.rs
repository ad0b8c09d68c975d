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

//! Sequential reference execution.
//!
//! Runs the lifted SSA program one statement at a time, computing every bag in full
//! before the next one starts. Φ statements take the input flowing in from the block
//! that was actually executed before the current one.

pub mod interp;
pub mod trace;

use std::collections::HashMap;
use std::sync::Arc;

use crate::dataflow::{build_dataflow, NodeKind};
use crate::error::{Error, Result};
use crate::frontend::{Target, Terminator};
use crate::ssa::{Rhs, SsaProgram};
use crate::transform::{IoEnv, TransformationInstance};
use crate::value::{Bag, Value};

pub use interp::{interpret, Assignments};
pub use trace::{diff_traces, Choice, ExecutionTrace, TraceDiff};

/// Default bound on the total number of elements in a trace.
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Value of a branch condition bag.
pub fn condition_value(name: &str, bag: &[Value]) -> Result<bool> {
    match bag {
        [v] => v
            .as_bool()
            .ok_or_else(|| Error::Runtime(format!("condition `{name}` is not a boolean: {v}"))),
        _ => Err(Error::Runtime(format!(
            "condition `{name}` has {} elements instead of one",
            bag.len()
        ))),
    }
}

/// Executes `ssa` (which must be lifted) against a fresh copy of `io`.
pub fn run_sequential(ssa: &SsaProgram, io: &IoEnv, budget: usize) -> Result<ExecutionTrace> {
    let g = build_dataflow(ssa, 1);
    let io = Arc::new(io.fresh());
    let mut inst: Vec<TransformationInstance> = g
        .nodes
        .iter()
        .map(|n| TransformationInstance::for_node(n, 0, io.clone()))
        .collect();
    let mut trace = ExecutionTrace::default();
    // Latest bag of each variable: path length and elements.
    let mut latest: HashMap<usize, (usize, Arc<Vec<Value>>)> = HashMap::new();
    let mut elements = 0usize;
    let mut block = ssa.cfg.entry();
    loop {
        trace.path.push(block);
        let len = trace.path.len();
        let prev = len.checked_sub(2).map(|i| trace.path[i]);
        for a in ssa.block(block) {
            let node = g.node(a.target);
            let srcs: Vec<Option<usize>> = match &a.rhs {
                Rhs::Phi(ins) => {
                    let taken = ins
                        .iter()
                        .find(|i| Some(i.pred) == prev)
                        .ok_or_else(|| {
                            Error::Internal(format!("{}: no input for the taken edge", node.name))
                        })?
                        .var;
                    node.inputs
                        .iter()
                        .map(|&e| (g.edge(e).src == taken).then_some(taken))
                        .collect()
                }
                _ => node.inputs.iter().map(|&e| Some(g.edge(e).src)).collect(),
            };
            let mut inputs: Vec<Option<Arc<Vec<Value>>>> = Vec::new();
            let mut choices = Vec::new();
            for (slot, s) in srcs.iter().enumerate() {
                match s {
                    None => inputs.push(None),
                    Some(s) => {
                        let (l, bag) = latest.get(s).cloned().ok_or_else(|| {
                            Error::Internal(format!(
                                "{} reads {} before it is defined",
                                node.name,
                                g.node(*s).name
                            ))
                        })?;
                        choices.push(Choice {
                            slot,
                            src: g.node(*s).name.clone(),
                            src_len: l,
                        });
                        inputs.push(Some(bag));
                    }
                }
            }
            // A Φ whose inputs share one source still needs exactly one active slot.
            if matches!(node.kind, NodeKind::Phi) {
                let mut seen = false;
                for (i, c) in inputs.iter_mut().enumerate() {
                    if c.is_some() {
                        if seen {
                            *c = None;
                            choices.retain(|ch| ch.slot != i);
                        }
                        seen = true;
                    }
                }
            }
            let refs: Vec<Option<&[Value]>> = inputs
                .iter()
                .map(|i| i.as_deref().map(Vec::as_slice))
                .collect();
            let out = inst[a.target].run_bag(&refs)?;
            elements += out.len();
            if elements > budget {
                return Err(Error::TraceBudget { budget });
            }
            let key = (node.name.clone(), len);
            trace.bags.insert(key.clone(), Bag::from_vec(out.clone()));
            if !choices.is_empty() {
                trace.choices.insert(key, choices);
            }
            latest.insert(a.target, (len, Arc::new(out)));
        }
        let next = match ssa.cfg.term(block) {
            Terminator::Goto(t) => t,
            Terminator::Branch(t, f) => {
                let c = ssa.cond_var(block).ok_or_else(|| {
                    Error::Internal(format!("block {block} branches without a condition"))
                })?;
                let (_, bag) = &latest[&c];
                if condition_value(&ssa.var(c).name, bag)? {
                    t
                } else {
                    f
                }
            }
        };
        match next {
            Target::Exit => break,
            Target::Block(b) => block = b,
        }
    }
    trace.effects = io.outputs();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::programs;
    use crate::ssa::compile_source;

    fn run(src: &str, io: &IoEnv) -> ExecutionTrace {
        run_sequential(&compile_source(src).unwrap().lifted, io, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn straight_line() {
        let t = run("a = 1\nb = a + 1\nc = b * 3\n", &IoEnv::in_memory());
        assert_eq!(t.path, vec![1]);
        assert_eq!(t.bag("c_1", 1).unwrap().to_string(), "{6}");
    }

    #[test]
    fn loop_follows_back_edge() {
        let t = run(
            "i = 0\ndo { i = i + 1 } while (i < 3)\n",
            &IoEnv::in_memory(),
        );
        assert_eq!(t.path, vec![1, 2, 2, 2]);
        assert_eq!(t.bag("i_3", 4).unwrap().to_string(), "{3}");
        let phi = &t.choices[&("i_2".to_string(), 3)];
        assert_eq!(phi[0].src, "i_3");
        assert_eq!(phi[0].src_len, 2);
    }

    #[test]
    fn diamond_takes_executed_branch() {
        let t = run(programs::SSA_DIAMOND, &IoEnv::in_memory());
        assert_eq!(t.path, vec![1, 2, 4]);
        assert_eq!(t.bag("b_1", 3).unwrap().to_string(), "{6}");
    }

    #[test]
    fn visit_count_writes_every_day() {
        let mut io = IoEnv::in_memory();
        io.add_file("pageAttributes", "1,0\n2,1\n3,0\n");
        for d in 1..=3 {
            io.add_file(
                &format!("pageVisitLog{d}"),
                format!("1\n1\n3\n{}\n", if d == 2 { 2 } else { 3 }),
            );
        }
        let t = run(&programs::visit_count(3), &io);
        assert_eq!(t.effects.len(), 2);
        assert_eq!(t.path, vec![1, 2, 4, 2, 3, 4, 2, 3, 4]);
    }

    #[test]
    fn budget_is_enforced() {
        let r = run_sequential(
            &compile_source("i = 0\ndo { i = i + 1 } while (i < 100)\n")
                .unwrap()
                .lifted,
            &IoEnv::in_memory(),
            50,
        );
        assert!(matches!(r, Err(Error::TraceBudget { budget: 50 })));
    }

    #[test]
    fn condition_must_be_one_boolean() {
        assert!(condition_value("c", &[Value::Bool(true)]).unwrap());
        assert!(condition_value("c", &[]).is_err());
        assert!(condition_value("c", &[Value::Int(1)]).is_err());
    }
}
