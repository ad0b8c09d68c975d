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

//! Logical dataflow graphs built from lifted SSA programs.
//!
//! Every SSA variable becomes a node and every variable reference an edge. Edges also
//! carry the static control-flow tables the runtime consults when routing, choosing
//! and discarding bags, so that each runtime check is a table lookup.

mod dot;

pub use dot::export_dot;

use std::collections::BTreeSet;

use crate::frontend::{BlockId, CfgShape};
use crate::ssa::{Operand, PrimOp, Rhs, SsaProgram};
use crate::udf::Udf;
use crate::value::{Value, ValueType};

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Constant(Value),
    EmptyBag,
    Phi,
    Copy,
    Map(Udf),
    Filter(Udf),
    Join,
    Cross,
    ReduceByKey(Udf),
    Reduce(Udf),
    Count,
    ReadFile(ValueType),
    WriteFile,
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Constant(_) => "singleton",
            NodeKind::EmptyBag => "emptyBag",
            NodeKind::Phi => "phi",
            NodeKind::Copy => "copy",
            NodeKind::Map(_) => "map",
            NodeKind::Filter(_) => "filter",
            NodeKind::Join => "join",
            NodeKind::Cross => "cross",
            NodeKind::ReduceByKey(_) => "reduceByKey",
            NodeKind::Reduce(_) => "reduce",
            NodeKind::Count => "count",
            NodeKind::ReadFile(_) => "readFile",
            NodeKind::WriteFile => "writeFile",
        }
    }

    /// Kinds whose slot-0 state can be kept across output bags.
    pub fn can_retain(&self) -> bool {
        matches!(self, NodeKind::Join | NodeKind::Cross)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// SSA variable name.
    pub name: String,
    pub block: BlockId,
    pub kind: NodeKind,
    pub ty: ValueType,
    pub parallelism: usize,
    pub is_condition: bool,
    /// Input edges indexed by slot.
    pub inputs: Vec<EdgeId>,
    pub outputs: Vec<EdgeId>,
    /// For join and cross: whether the method receiver is in slot 0. Output columns
    /// always follow the receiver-first order of the source program.
    pub receiver_is_build: bool,
}

impl Node {
    pub fn is_phi(&self) -> bool {
        self.kind == NodeKind::Phi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partitioning {
    /// Sender instance `i` sends to receiver instance `i mod parallelism`.
    Forward,
    Broadcast,
    HashByKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub slot: usize,
    pub src_block: BlockId,
    pub dst_block: BlockId,
    pub conditional: bool,
    pub partitioning: Partitioning,
    /// Blocks whose appearance on the path ends a bag's chance to travel this edge:
    /// the source block and, for Φ destinations, the other inputs' source blocks.
    pub blockers: BTreeSet<BlockId>,
    /// Blocks from which the destination block can no longer be reached without first
    /// passing a blocker (indexed by block id; index 0 unused).
    pub never: Vec<bool>,
    /// Whether one bag sent on this edge can be chosen by several output bags of the
    /// destination, i.e. the destination block lies on a cycle avoiding the blockers.
    pub reuse_possible: bool,
    /// Whether the destination chooses among bags created strictly before its own
    /// position (a Φ reading a value defined later in its own block).
    pub exclusive: bool,
}

impl Edge {
    pub fn is_never(&self, b: BlockId) -> bool {
        self.never[b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataflowGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub cfg: CfgShape,
    /// Condition node of each block (index `id - 1`).
    pub cond_nodes: Vec<Option<NodeId>>,
    pub workers: usize,
}

impl DataflowGraph {
    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn node_named(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn cond_node(&self, b: BlockId) -> Option<NodeId> {
        self.cond_nodes[b - 1]
    }

    /// Total number of physical instances.
    pub fn instance_count(&self) -> usize {
        self.nodes.iter().map(|n| n.parallelism).sum()
    }

    /// Nodes that produce side effects.
    pub fn side_effects(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::WriteFile)
            .map(|n| n.id)
            .collect()
    }
}

/// Builds the complete graph: nodes and edges, conditional marking, build sides,
/// parallelism and partitioning.
pub fn build_dataflow(ssa: &SsaProgram, workers: usize) -> DataflowGraph {
    assert!(ssa.lifted, "dataflow graphs are built from lifted programs");
    assert!(workers >= 1);
    let mut g = build_nodes(ssa, workers);
    mark_conditional_edges(&mut g, ssa);
    assign_build_sides(&mut g);
    assign_parallelism(&mut g, ssa);
    assign_partitioning(&mut g);
    g
}

fn build_nodes(ssa: &SsaProgram, workers: usize) -> DataflowGraph {
    let mut nodes = Vec::with_capacity(ssa.vars.len());
    let mut edges = Vec::new();
    for (v, var) in ssa.vars.iter().enumerate() {
        let a = ssa.def(v);
        let (kind, srcs): (NodeKind, Vec<usize>) = match &a.rhs {
            Rhs::Constant(c) => (NodeKind::Constant(c.clone()), Vec::new()),
            Rhs::Phi(ins) => (NodeKind::Phi, ins.iter().map(|i| i.var).collect()),
            Rhs::Prim { op, args } => {
                let vars: Vec<usize> = args
                    .iter()
                    .map(|o| match o {
                        Operand::Var(v) => *v,
                        Operand::Lit(_) => panic!("literal operand in a lifted program"),
                    })
                    .collect();
                let kind = match op {
                    PrimOp::Copy | PrimOp::SingletonBag => NodeKind::Copy,
                    PrimOp::Map(f) => NodeKind::Map(f.clone()),
                    PrimOp::Filter(f) => NodeKind::Filter(f.clone()),
                    PrimOp::Join => NodeKind::Join,
                    PrimOp::Cross => NodeKind::Cross,
                    PrimOp::ReduceByKey(f) => NodeKind::ReduceByKey(f.clone()),
                    PrimOp::Reduce(f) => NodeKind::Reduce(f.clone()),
                    PrimOp::Count => NodeKind::Count,
                    PrimOp::ReadFile(t) => NodeKind::ReadFile(t.clone()),
                    PrimOp::WriteFile => NodeKind::WriteFile,
                    PrimOp::EmptyBag(_) => NodeKind::EmptyBag,
                    PrimOp::Unary(_) | PrimOp::Binary(_) => {
                        panic!("scalar operation in a lifted program")
                    }
                };
                (kind, vars)
            }
        };
        let mut inputs = Vec::new();
        for (slot, s) in srcs.into_iter().enumerate() {
            let id = edges.len();
            edges.push(Edge {
                id,
                src: s,
                dst: v,
                slot,
                src_block: ssa.vars[s].block,
                dst_block: var.block,
                conditional: false,
                partitioning: Partitioning::Forward,
                blockers: BTreeSet::new(),
                never: Vec::new(),
                reuse_possible: false,
                exclusive: false,
            });
            inputs.push(id);
        }
        nodes.push(Node {
            id: v,
            name: var.name.clone(),
            block: var.block,
            kind,
            ty: var.ty.clone(),
            parallelism: 1,
            is_condition: false,
            inputs,
            outputs: Vec::new(),
            receiver_is_build: true,
        });
    }
    for e in &edges {
        nodes[e.src].outputs.push(e.id);
    }
    let mut cond_nodes = vec![None; ssa.cfg.len()];
    for b in ssa.cfg.blocks() {
        if let Some(c) = ssa.cond_var(b) {
            nodes[c].is_condition = true;
            cond_nodes[b - 1] = Some(c);
        }
    }
    DataflowGraph {
        nodes,
        edges,
        cfg: ssa.cfg.clone(),
        cond_nodes,
        workers,
    }
}

/// Marks edges on which not every output bag of the source is sent, and fills in the
/// static reachability tables used for routing and discarding.
pub fn mark_conditional_edges(g: &mut DataflowGraph, ssa: &SsaProgram) {
    let n_blocks = g.cfg.len();
    for i in 0..g.edges.len() {
        let (src, dst) = (g.edges[i].src, g.edges[i].dst);
        let (sb, db) = (g.edges[i].src_block, g.edges[i].dst_block);
        let dst_is_phi = g.nodes[dst].is_phi();
        let mut blockers = BTreeSet::from([sb]);
        if dst_is_phi {
            for &other in &g.nodes[dst].inputs {
                if other != i {
                    blockers.insert(g.edges[other].src_block);
                }
            }
        }
        let same_block_back = sb == db && dst_is_phi && ssa.def_index(src) > ssa.def_index(dst);
        let reach = g.cfg.can_reach_avoiding(db, &blockers);
        let mut never = vec![true; n_blocks + 1];
        never[0] = false;
        for b in reach {
            never[b] = false;
        }
        let e = &mut g.edges[i];
        e.conditional = sb != db || same_block_back;
        e.exclusive = same_block_back;
        e.reuse_possible = g.cfg.cycles_avoiding(db, &blockers);
        e.blockers = blockers;
        e.never = never;
    }
}

/// Puts the input that can be reused across output bags into slot 0 of joins and
/// crosses, so that its state is the one retained.
fn assign_build_sides(g: &mut DataflowGraph) {
    for n in 0..g.nodes.len() {
        if !g.nodes[n].kind.can_retain() {
            continue;
        }
        let (recv, other) = (g.nodes[n].inputs[0], g.nodes[n].inputs[1]);
        if !g.edges[recv].reuse_possible && g.edges[other].reuse_possible {
            g.nodes[n].inputs = vec![other, recv];
            g.nodes[n].receiver_is_build = false;
            g.edges[other].slot = 0;
            g.edges[recv].slot = 1;
        }
    }
}

/// Bag-valued variables run at the worker count; lifted scalars run as one instance.
fn assign_parallelism(g: &mut DataflowGraph, ssa: &SsaProgram) {
    for n in 0..g.nodes.len() {
        let orig = &ssa.vars[n].orig_ty;
        let p = match g.nodes[n].kind {
            NodeKind::Reduce(_) | NodeKind::Count => 1,
            NodeKind::WriteFile => continue,
            _ if orig.is_bag() => g.workers,
            _ => 1,
        };
        g.nodes[n].parallelism = p;
    }
    // A sink writes one part per instance of the bag it writes.
    for n in 0..g.nodes.len() {
        if g.nodes[n].kind == NodeKind::WriteFile {
            let data = g.edges[g.nodes[n].inputs[0]].src;
            g.nodes[n].parallelism = g.nodes[data].parallelism;
        }
    }
}

pub fn assign_partitioning(g: &mut DataflowGraph) {
    for i in 0..g.edges.len() {
        let (src, dst, slot) = (g.edges[i].src, g.edges[i].dst, g.edges[i].slot);
        let d = &g.nodes[dst];
        let p = if d.parallelism == 1 {
            Partitioning::Broadcast
        } else {
            match d.kind {
                NodeKind::Join | NodeKind::ReduceByKey(_) => Partitioning::HashByKey,
                NodeKind::Cross => {
                    let other = g.edges[d.inputs[1 - slot]].src;
                    let mine_single = g.nodes[src].parallelism == 1;
                    let other_single = g.nodes[other].parallelism == 1;
                    if mine_single != other_single {
                        if mine_single {
                            Partitioning::Broadcast
                        } else {
                            Partitioning::Forward
                        }
                    } else if slot == 0 {
                        Partitioning::Broadcast
                    } else {
                        Partitioning::Forward
                    }
                }
                NodeKind::ReadFile(_) => Partitioning::Broadcast,
                NodeKind::WriteFile if slot == 1 => Partitioning::Broadcast,
                _ => Partitioning::Forward,
            }
        };
        g.edges[i].partitioning = p;
    }
}

/// Receiver instance(s) of element `v` sent by instance `sender` on edge `e`.
pub fn route_targets(e: &Edge, dst_par: usize, sender: usize, v: &Value) -> RouteTarget {
    match e.partitioning {
        Partitioning::Forward => RouteTarget::One(sender % dst_par),
        Partitioning::Broadcast => RouteTarget::All,
        Partitioning::HashByKey => {
            RouteTarget::One((v.key().stable_hash() % dst_par as u64) as usize)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteTarget {
    One(usize),
    All,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::programs;
    use crate::ssa::compile_source;

    fn graph(src: &str, workers: usize) -> DataflowGraph {
        build_dataflow(&compile_source(src).unwrap().lifted, workers)
    }

    fn edge<'g>(g: &'g DataflowGraph, src: &str, dst: &str) -> &'g Edge {
        let (s, d) = (g.node_named(src).unwrap(), g.node_named(dst).unwrap());
        g.edges.iter().find(|e| e.src == s && e.dst == d).unwrap()
    }

    #[test]
    fn straight_line_has_one_unconditional_edge() {
        let g = graph("a = 0\nb = a + 1\n", 2);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert!(!g.edges[0].conditional);
    }

    #[test]
    fn counts_match_ssa() {
        let c = compile_source(&programs::visit_count(5)).unwrap();
        let g = build_dataflow(&c.lifted, 3);
        assert_eq!(g.nodes.len(), c.lifted.vars.len());
        let refs: usize = c.lifted.assigns().map(|(_, a)| a.rhs.uses().len()).sum();
        assert_eq!(g.edges.len(), refs);
        let conds: Vec<_> = g
            .nodes
            .iter()
            .filter(|n| n.is_condition)
            .map(|n| n.name.as_str())
            .collect();
        assert_eq!(conds, ["ifCond_1", "exitCond_1"]);
    }

    #[test]
    fn visit_count_marking() {
        let g = graph(&programs::visit_count(5), 2);
        assert!(edge(&g, "counts_1", "joinedYesterday_1").conditional);
        assert!(edge(&g, "yesterdayCnts_2", "joinedYesterday_1").conditional);
        assert!(edge(&g, "day_3", "day_2").conditional);
        assert!(edge(&g, "yesterdayCnts_3", "yesterdayCnts_2").conditional);
        assert!(!edge(&g, "visits_1", "joinedWithAttrs_1").conditional);
        let attrs = edge(&g, "pageAttributes_1", "joinedWithAttrs_1");
        assert!(attrs.reuse_possible);
        assert_eq!(attrs.slot, 0);
        assert_eq!(attrs.partitioning, Partitioning::HashByKey);
        let j = g.node(g.node_named("joinedWithAttrs_1").unwrap());
        assert!(!j.receiver_is_build);
        assert_eq!(
            edge(&g, "day_3", "exitCond_1").partitioning,
            Partitioning::Broadcast
        );
        assert_eq!(g.node(g.node_named("exitCond_1").unwrap()).parallelism, 1);
        assert_eq!(g.node(g.node_named("counts_1").unwrap()).parallelism, 2);
    }

    #[test]
    fn data_driven_phi_edges_are_conditional() {
        let g = graph(programs::DATA_DRIVEN_BRANCHES, 4);
        for (s, d) in [
            ("x_1", "x_3"),
            ("x_2", "x_3"),
            ("y_1", "y_3"),
            ("y_2", "y_3"),
        ] {
            let e = edge(&g, s, d);
            assert!(e.conditional, "{s} -> {d}");
            assert!(!e.exclusive);
        }
        let e = edge(&g, "x_1", "x_3");
        assert_eq!(e.blockers, BTreeSet::from([3, 4]));
    }

    #[test]
    fn nested_loop_build_side_is_outer_bag() {
        let g = graph(&programs::nested_loops(3, 4), 2);
        let x = edge(&g, "x_1", "z_1");
        assert!(x.reuse_possible);
        assert_eq!(x.slot, 0);
        let y = edge(&g, "y_1", "z_1");
        assert!(!y.reuse_possible);
        // Leaving the inner loop ends the outer bag's use.
        assert!(x.is_never(4));
        assert!(!x.is_never(3));
    }

    #[test]
    fn same_block_back_edge_is_exclusive() {
        let g = graph(&programs::step_overhead(10), 2);
        let e = edge(&g, "bag_3", "bag_2");
        assert!(e.conditional && e.exclusive);
        assert!(!edge(&g, "bag_2", "bag_3").conditional);
    }
}
