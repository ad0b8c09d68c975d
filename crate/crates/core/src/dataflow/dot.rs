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

//! Graphviz export.

use std::fmt::Write;

use super::{DataflowGraph, NodeId};
use crate::frontend::BlockId;

const PALETTE: [&str; 6] = ["blue", "red", "darkgreen", "purple", "orange", "brown"];

/// Renders basic blocks as clusters, Φ nodes inverted, bag-origin nodes with thick
/// borders and conditional edges colored by their governing condition node.
pub fn export_dot(g: &DataflowGraph) -> String {
    let mut out =
        String::from("digraph laby {\n  compound=true;\n  node [shape=box, style=rounded];\n");
    for b in g.cfg.blocks() {
        writeln!(out, "  subgraph cluster_{b} {{").unwrap();
        writeln!(out, "    label=\"block {b}\";\n    style=dotted;").unwrap();
        for n in g.nodes.iter().filter(|n| n.block == b) {
            let mut attrs = vec![format!("label=\"{}\\n{}\"", escape(&n.name), n.kind.name())];
            if n.is_phi() {
                attrs.push("style=\"rounded,filled\"".into());
                attrs.push("fillcolor=black".into());
                attrs.push("fontcolor=white".into());
            }
            if n.parallelism > 1 {
                attrs.push("penwidth=3".into());
            }
            if n.is_condition {
                attrs.push("shape=diamond".into());
                attrs.push(format!("color={}", color_of(g, n.id)));
            }
            writeln!(out, "    n{} [{}];", n.id, attrs.join(", ")).unwrap();
        }
        out.push_str("  }\n");
    }
    let idoms = g.cfg.idoms();
    for e in &g.edges {
        let mut attrs = vec![format!("label=\"{}\"", e.slot)];
        if e.conditional {
            let gov = governing(g, &idoms, e.src_block);
            let color = gov.map_or("gray", |c| color_of(g, c));
            attrs.push(format!("color={color}"));
            attrs.push("style=bold".into());
        }
        writeln!(out, "  n{} -> n{} [{}];", e.src, e.dst, attrs.join(", ")).unwrap();
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn color_of(g: &DataflowGraph, cond: NodeId) -> &'static str {
    let i = g
        .cond_nodes
        .iter()
        .flatten()
        .position(|&c| c == cond)
        .unwrap_or(0);
    PALETTE[i % PALETTE.len()]
}

/// Condition node of the closest branching block at or above `b` in the dominator tree.
fn governing(g: &DataflowGraph, idoms: &[BlockId], mut b: BlockId) -> Option<NodeId> {
    loop {
        if let Some(c) = g.cond_node(b) {
            return Some(c);
        }
        let up = idoms[b - 1];
        if up == b || up == 0 {
            return None;
        }
        b = up;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::build_dataflow;
    use crate::programs;
    use crate::ssa::compile_source;

    #[test]
    fn two_nodes_one_edge() {
        let g = build_dataflow(&compile_source("a = 0\nb = a + 1\n").unwrap().lifted, 1);
        let dot = export_dot(&g);
        assert_eq!(
            dot.lines()
                .filter(|l| l.trim_start().starts_with("n") && l.contains("label=\""))
                .count(),
            3
        );
        assert_eq!(dot.matches("->").count(), 1);
    }

    #[test]
    fn visit_count_has_four_clusters() {
        let g = build_dataflow(
            &compile_source(&programs::visit_count(3)).unwrap().lifted,
            2,
        );
        let dot = export_dot(&g);
        assert_eq!(dot.matches("subgraph cluster_").count(), 4);
        assert!(dot.contains("color=blue"));
        assert!(dot.contains("color=red"));
        assert_eq!(dot, export_dot(&g));
    }
}
