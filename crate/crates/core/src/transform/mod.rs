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

//! Bag transformations.
//!
//! A transformation computes one output bag at a time: the runtime opens the bag,
//! pushes the elements of the chosen input bags slot by slot, closes each input and
//! finally closes the output. Joins and crosses keep their slot-0 state across output
//! bags when slot 0 is left inactive, until `drop_state`.

mod io;
mod ops;

pub use io::IoEnv;
pub use ops::{Cross, Join};

use std::sync::Arc;

use crate::dataflow::{Node, NodeKind};
use crate::error::{Error, Result};
use crate::value::Value;

/// Operator logic behind the protocol checks of [`TransformationInstance`].
pub trait Transformation: Send {
    /// Starts a new output bag. `active[s]` is false when slot `s` receives no bag;
    /// for slot 0 of a retaining kind this means the previous build state is reused.
    fn open(&mut self, active: &[bool]);
    fn push(&mut self, slot: usize, v: Value, out: &mut Vec<Value>) -> Result<()>;
    fn close_in(&mut self, slot: usize, out: &mut Vec<Value>) -> Result<()>;
    /// All active inputs are closed; emit whatever remains.
    fn finish(&mut self, out: &mut Vec<Value>) -> Result<()>;
    fn drop_state(&mut self) {}
}

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Idle,
    Open {
        active: Vec<bool>,
        closed: Vec<bool>,
    },
}

/// A transformation wrapped with open/push/close protocol checks and counters.
pub struct TransformationInstance {
    op: Box<dyn Transformation>,
    arity: usize,
    /// Slot 0 is a build side.
    builds_side: bool,
    retains: bool,
    phase: Phase,
    /// Output bags in which slot 0 was (re)built.
    pub builds: u64,
    pub drop_states: u64,
    has_state: bool,
}

impl TransformationInstance {
    pub fn new(op: Box<dyn Transformation>, arity: usize, retains: bool) -> TransformationInstance {
        TransformationInstance {
            op,
            arity,
            builds_side: retains,
            retains,
            phase: Phase::Idle,
            builds: 0,
            drop_states: 0,
            has_state: false,
        }
    }

    /// Instance `idx` of `node`.
    pub fn for_node(node: &Node, idx: usize, io: Arc<IoEnv>) -> TransformationInstance {
        let op: Box<dyn Transformation> = match &node.kind {
            NodeKind::Constant(v) => Box::new(ops::Constant {
                value: v.clone(),
                emit: idx == 0,
            }),
            NodeKind::EmptyBag => Box::new(ops::Nothing),
            NodeKind::Phi | NodeKind::Copy => Box::new(ops::Identity),
            NodeKind::Map(f) => Box::new(ops::Map(f.clone())),
            NodeKind::Filter(f) => Box::new(ops::Filter(f.clone())),
            NodeKind::Join => Box::new(Join::new(node.receiver_is_build)),
            NodeKind::Cross => Box::new(Cross::new(node.receiver_is_build)),
            NodeKind::ReduceByKey(f) => Box::new(ops::ReduceByKey::new(f.clone())),
            NodeKind::Reduce(f) => Box::new(ops::Reduce::new(f.clone())),
            NodeKind::Count => Box::new(ops::Count::default()),
            NodeKind::ReadFile(t) => {
                Box::new(ops::ReadFile::new(t.clone(), io, idx, node.parallelism))
            }
            NodeKind::WriteFile => Box::new(ops::WriteFile::new(io, idx)),
        };
        let arity = node.inputs.len();
        TransformationInstance::new(op, arity, node.kind.can_retain())
    }

    /// Disables reuse of slot-0 state: every output bag must rebuild it.
    pub fn without_retention(mut self) -> TransformationInstance {
        self.retains = false;
        self
    }

    pub fn is_open(&self) -> bool {
        matches!(self.phase, Phase::Open { .. })
    }

    /// Whether slot-0 state from an earlier bag is available for reuse.
    pub fn has_retained_state(&self) -> bool {
        self.retains && self.has_state
    }

    pub fn open_out_bag(&mut self, active: &[bool]) -> Result<()> {
        if self.is_open() {
            return Err(Error::Protocol(
                "output bag opened while the previous one is open".into(),
            ));
        }
        if active.len() != self.arity {
            return Err(Error::Protocol(format!(
                "{} activity flags for {} inputs",
                active.len(),
                self.arity
            )));
        }
        if self.builds_side && active[0] {
            self.builds += 1;
        }
        if self.retains {
            if !active[0] && !self.has_state {
                return Err(Error::Protocol(
                    "build input skipped without retained state".into(),
                ));
            }
            self.has_state = true;
        }
        self.op.open(active);
        self.phase = Phase::Open {
            active: active.to_vec(),
            closed: vec![false; self.arity],
        };
        Ok(())
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        match &self.phase {
            Phase::Idle => Err(Error::Protocol("input element outside an open bag".into())),
            Phase::Open { active, closed } => {
                if slot >= self.arity || !active[slot] {
                    Err(Error::Protocol(format!("slot {slot} is not active")))
                } else if closed[slot] {
                    Err(Error::Protocol(format!("slot {slot} is already closed")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn push(&mut self, slot: usize, v: Value, out: &mut Vec<Value>) -> Result<()> {
        self.check_slot(slot)?;
        self.op.push(slot, v, out)
    }

    /// Returns true once every active input is closed.
    pub fn close_in(&mut self, slot: usize, out: &mut Vec<Value>) -> Result<bool> {
        self.check_slot(slot)?;
        self.op.close_in(slot, out)?;
        let Phase::Open { closed, .. } = &mut self.phase else {
            unreachable!()
        };
        closed[slot] = true;
        Ok(self.all_closed())
    }

    pub fn all_closed(&self) -> bool {
        match &self.phase {
            Phase::Idle => false,
            Phase::Open { active, closed } => active.iter().zip(closed).all(|(a, c)| !a || *c),
        }
    }

    pub fn close_out(&mut self, out: &mut Vec<Value>) -> Result<()> {
        if !self.all_closed() {
            return Err(Error::Protocol("output closed before its inputs".into()));
        }
        self.op.finish(out)?;
        self.phase = Phase::Idle;
        Ok(())
    }

    pub fn drop_state(&mut self) -> Result<()> {
        if self.is_open() {
            return Err(Error::Protocol("dropState while a bag is open".into()));
        }
        self.op.drop_state();
        self.has_state = false;
        self.drop_states += 1;
        Ok(())
    }

    /// Runs one complete output bag over materialized inputs.
    pub fn run_bag(&mut self, inputs: &[Option<&[Value]>]) -> Result<Vec<Value>> {
        let active: Vec<bool> = inputs.iter().map(Option::is_some).collect();
        let mut out = Vec::new();
        self.open_out_bag(&active)?;
        for (slot, inp) in inputs.iter().enumerate() {
            if let Some(vals) = inp {
                for v in vals.iter() {
                    self.push(slot, v.clone(), &mut out)?;
                }
                self.close_in(slot, &mut out)?;
            }
        }
        self.close_out(&mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::BinOp;
    use crate::udf::{UExpr, Udf};
    use crate::value::Bag;

    fn ints(v: &[i64]) -> Vec<Value> {
        v.iter().map(|&i| Value::Int(i)).collect()
    }

    fn pair(a: i64, b: Value) -> Value {
        Value::tuple(vec![Value::Int(a), b])
    }

    fn map_plus_one() -> TransformationInstance {
        let f = Udf::new(
            "x",
            UExpr::binary(BinOp::Add, UExpr::Param, UExpr::Lit(Value::Int(1))),
        );
        TransformationInstance::new(Box::new(ops::Map(f)), 1, false)
    }

    #[test]
    fn map_emits_immediately() {
        let mut t = map_plus_one();
        let mut out = Vec::new();
        t.open_out_bag(&[true]).unwrap();
        t.push(0, Value::Int(41), &mut out).unwrap();
        assert_eq!(out, ints(&[42]));
    }

    #[test]
    fn protocol_violations_are_rejected() {
        let mut t = map_plus_one();
        let mut out = Vec::new();
        assert!(t.push(0, Value::Int(1), &mut out).is_err());
        t.open_out_bag(&[true]).unwrap();
        assert!(t.open_out_bag(&[true]).is_err());
        assert!(t.close_out(&mut out).is_err());
        assert!(t.drop_state().is_err());
        assert!(t.close_in(0, &mut out).unwrap());
        assert!(t.close_in(0, &mut out).is_err());
        assert!(t.push(0, Value::Int(1), &mut out).is_err());
        t.close_out(&mut out).unwrap();
        assert!(t.close_out(&mut out).is_err());
    }

    #[test]
    fn reduce_by_key_sums() {
        let f = Udf::new(
            "p",
            UExpr::binary(BinOp::Add, UExpr::Param.field(0), UExpr::Param.field(1)),
        );
        let mut t = TransformationInstance::new(Box::new(ops::ReduceByKey::new(f)), 1, false);
        let input = vec![
            pair(1, Value::Int(1)),
            pair(1, Value::Int(1)),
            pair(2, Value::Int(1)),
        ];
        let out = t.run_bag(&[Some(&input)]).unwrap();
        assert_eq!(
            Bag::from_vec(out),
            Bag::from_vec(vec![pair(1, Value::Int(2)), pair(2, Value::Int(1))])
        );
    }

    #[test]
    fn reduce_of_empty_emits_nothing() {
        let f = Udf::new(
            "p",
            UExpr::binary(BinOp::Add, UExpr::Param.field(0), UExpr::Param.field(1)),
        );
        let mut t = TransformationInstance::new(Box::new(ops::Reduce::new(f)), 1, false);
        assert!(t.run_bag(&[Some(&[])]).unwrap().is_empty());
        assert_eq!(t.run_bag(&[Some(&ints(&[1, 2, 3]))]).unwrap(), ints(&[6]));
    }

    #[test]
    fn join_probe_against_build() {
        let mut t = TransformationInstance::new(Box::new(Join::new(false)), 2, true);
        let build = vec![pair(7, Value::str("a")), pair(8, Value::str("b"))];
        let out = t.run_bag(&[Some(&build), Some(&ints(&[7]))]).unwrap();
        assert_eq!(out, vec![pair(7, Value::str("a"))]);
        assert_eq!(t.builds, 1);
    }

    #[test]
    fn retained_build_is_reused_until_dropped() {
        let mut t = TransformationInstance::new(Box::new(Join::new(true)), 2, true);
        let build = vec![pair(1, Value::Int(10)), pair(2, Value::Int(20))];
        let probe = vec![pair(1, Value::Int(5))];
        let first = t.run_bag(&[Some(&build), Some(&probe)]).unwrap();
        let second = t.run_bag(&[None, Some(&probe)]).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, vec![Value::tuple(ints(&[1, 10, 5]))]);
        assert_eq!(t.builds, 1);
        t.drop_state().unwrap();
        assert!(t.run_bag(&[None, Some(&probe)]).is_err());
    }

    #[test]
    fn probes_before_build_close_are_held() {
        let mut t = TransformationInstance::new(Box::new(Join::new(true)), 2, true);
        let mut out = Vec::new();
        t.open_out_bag(&[true, true]).unwrap();
        t.push(1, Value::Int(3), &mut out).unwrap();
        t.push(0, Value::Int(3), &mut out).unwrap();
        assert!(out.is_empty());
        t.close_in(0, &mut out).unwrap();
        assert_eq!(out, ints(&[3]));
    }

    #[test]
    fn cross_keeps_receiver_columns_first() {
        let mut t = TransformationInstance::new(Box::new(Cross::new(false)), 2, true);
        let out = t
            .run_bag(&[Some(&ints(&[9])), Some(&ints(&[1, 2]))])
            .unwrap();
        assert_eq!(
            Bag::from_vec(out),
            Bag::from_vec(vec![
                Value::tuple(ints(&[1, 9])),
                Value::tuple(ints(&[2, 9]))
            ])
        );
    }

    #[test]
    fn count_and_constant() {
        let mut c = TransformationInstance::new(Box::new(ops::Count::default()), 1, false);
        assert_eq!(c.run_bag(&[Some(&[])]).unwrap(), ints(&[0]));
        let mut k = TransformationInstance::new(
            Box::new(ops::Constant {
                value: Value::Int(5),
                emit: true,
            }),
            0,
            false,
        );
        assert_eq!(k.run_bag(&[]).unwrap(), ints(&[5]));
    }

    #[test]
    fn read_and_write_files() {
        let io = Arc::new(IoEnv::in_memory().with_file("in", "1\n2\n"));
        let mut r = TransformationInstance::new(
            Box::new(ops::ReadFile::new(
                crate::value::ValueType::Int,
                io.clone(),
                0,
                1,
            )),
            1,
            false,
        );
        let vals = r.run_bag(&[Some(&[Value::str("in")])]).unwrap();
        assert_eq!(vals, ints(&[1, 2]));
        let mut w =
            TransformationInstance::new(Box::new(ops::WriteFile::new(io.clone(), 0)), 2, false);
        assert!(w
            .run_bag(&[Some(&vals), Some(&[Value::str("out")])])
            .unwrap()
            .is_empty());
        assert_eq!(io.outputs()["out"].len(), 2);
        assert!(w
            .run_bag(&[Some(&vals), Some(&[Value::str("out")])])
            .is_err());
    }
}
