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

//! Helpers shared by the integration tests: naive reference operators and a way to
//! run one dataflow node over hash-partitioned inputs.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use laby_core::dataflow::{build_dataflow, route_targets, RouteTarget};
use laby_core::ssa::compile_source;
use laby_core::transform::{IoEnv, TransformationInstance};
use laby_core::value::{Bag, Value};
use rand::Rng;

pub const JOIN_SRC: &str =
    "l = readFile<(Int, Int)>(\"l\")\nr = readFile<(Int, Int)>(\"r\")\nj = l.join(r)\n";
pub const REDUCE_BY_KEY_SRC: &str =
    "l = readFile<(Int, Int)>(\"l\")\ns = l.reduceByKey(p => p.0 + p.1)\n";
pub const CROSS_SRC: &str =
    "l = readFile<(Int, Int)>(\"l\")\nr = readFile<Int>(\"r\")\nx = l.cross(r)\n";

pub fn pair(k: i64, v: i64) -> Value {
    Value::tuple(vec![Value::Int(k), Value::Int(v)])
}

pub fn random_pairs<R: Rng>(rng: &mut R, max_len: usize, keys: i64) -> Vec<Value> {
    let n = rng.gen_range(0..=max_len);
    (0..n)
        .map(|_| pair(rng.gen_range(0..keys), rng.gen_range(-50..50)))
        .collect()
}

pub fn random_ints<R: Rng>(rng: &mut R, max_len: usize) -> Vec<Value> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| Value::Int(rng.gen_range(-50..50))).collect()
}

/// Runs node `name` of `src` on `workers` instances. Slot inputs are spread over the
/// source instances round-robin and routed with the edge's partitioning.
pub fn run_node(src: &str, name: &str, workers: usize, inputs: &[Vec<Value>]) -> Bag {
    let c = compile_source(src).expect("test program compiles");
    let g = build_dataflow(&c.lifted, workers);
    let node = g.node(g.node_named(name).expect("node exists"));
    let par = node.parallelism;
    let mut parts: Vec<Vec<Vec<Value>>> = vec![vec![Vec::new(); inputs.len()]; par];
    for (slot, elems) in inputs.iter().enumerate() {
        let edge = g.edge(node.inputs[slot]);
        let src_par = g.node(edge.src).parallelism;
        for (i, v) in elems.iter().enumerate() {
            match route_targets(edge, par, i % src_par, v) {
                RouteTarget::One(t) => parts[t][slot].push(v.clone()),
                RouteTarget::All => parts.iter_mut().for_each(|p| p[slot].push(v.clone())),
            }
        }
    }
    let io = Arc::new(IoEnv::in_memory());
    let mut out = Bag::new();
    for (i, p) in parts.iter().enumerate() {
        let mut t = TransformationInstance::for_node(node, i, io.clone());
        let slots: Vec<Option<&[Value]>> = p.iter().map(|v| Some(v.as_slice())).collect();
        out.extend(t.run_bag(&slots).expect("operator runs"));
    }
    out
}

/// Join on the first column by nested loops: key, left columns, right columns.
pub fn nested_loop_join(l: &[Value], r: &[Value]) -> Bag {
    let mut out = Bag::new();
    for a in l {
        for b in r {
            let (ac, bc) = (a.columns(), b.columns());
            if ac[0] == bc[0] {
                let mut row = ac.clone();
                row.extend(bc[1..].iter().cloned());
                out.push(Value::from_columns(row));
            }
        }
    }
    out
}

/// Sum of values per key.
pub fn grouped_sum(l: &[Value]) -> Bag {
    let mut groups: BTreeMap<Value, i64> = BTreeMap::new();
    for v in l {
        let c = v.columns();
        *groups.entry(c[0].clone()).or_insert(0) += c[1].as_int().expect("int value");
    }
    groups
        .into_iter()
        .map(|(k, s)| Value::tuple(vec![k, Value::Int(s)]))
        .collect()
}

/// Every left element followed by every right element, columns concatenated.
pub fn cartesian(l: &[Value], r: &[Value]) -> Bag {
    let mut out = Bag::new();
    for a in l {
        for b in r {
            let mut row = a.columns();
            row.extend(b.columns());
            out.push(Value::from_columns(row));
        }
    }
    out
}
