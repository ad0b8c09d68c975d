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

//! Control flow graphs of basic blocks.
//!
//! Block ids are 1-based and assigned in creation order while walking the program:
//! for an `if`, the then-blocks come first, then the else-blocks, then the join block.
//! `while (c) S` is lowered as `if (c) { do S while (c) }`.

use std::collections::{BTreeSet, VecDeque};

use crate::frontend::ast::Expr;
use crate::frontend::ast::{Program, Stmt, StmtKind};

pub type BlockId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Block(BlockId),
    Exit,
}

impl Target {
    pub fn block(self) -> Option<BlockId> {
        match self {
            Target::Block(b) => Some(b),
            Target::Exit => None,
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Block(b) => write!(f, "{b}"),
            Target::Exit => f.write_str("exit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    Goto(Target),
    /// Taken on true, taken on false.
    Branch(Target, Target),
}

/// Block structure shared by the statement-level CFG and the SSA program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgShape {
    terms: Vec<Terminator>,
}

impl CfgShape {
    pub fn new(terms: Vec<Terminator>) -> CfgShape {
        CfgShape { terms }
    }

    pub fn entry(&self) -> BlockId {
        1
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn blocks(&self) -> impl Iterator<Item = BlockId> {
        1..=self.terms.len()
    }

    pub fn term(&self, b: BlockId) -> Terminator {
        self.terms[b - 1]
    }

    pub fn targets(&self, b: BlockId) -> Vec<Target> {
        match self.term(b) {
            Terminator::Goto(t) => vec![t],
            Terminator::Branch(t, f) => vec![t, f],
        }
    }

    pub fn succs(&self, b: BlockId) -> Vec<BlockId> {
        let mut v: Vec<BlockId> = self
            .targets(b)
            .into_iter()
            .filter_map(Target::block)
            .collect();
        v.dedup();
        v
    }

    pub fn preds(&self, b: BlockId) -> Vec<BlockId> {
        self.blocks()
            .filter(|&p| self.succs(p).contains(&b))
            .collect()
    }

    /// All block-to-block edges plus exit edges, in block order.
    pub fn edges(&self) -> Vec<(BlockId, Target)> {
        self.blocks()
            .flat_map(|b| self.targets(b).into_iter().map(move |t| (b, t)))
            .collect()
    }

    pub fn is_branch(&self, b: BlockId) -> bool {
        matches!(self.term(b), Terminator::Branch(..))
    }

    /// Blocks with in-degree of at least two.
    pub fn merge_points(&self) -> Vec<BlockId> {
        self.blocks()
            .filter(|&b| self.preds(b).len() >= 2)
            .collect()
    }

    /// Blocks from which `to` is reachable (paths of length zero included) without
    /// passing through any block in `avoid`. Blocks in `avoid` are never in the result.
    pub fn can_reach_avoiding(&self, to: BlockId, avoid: &BTreeSet<BlockId>) -> BTreeSet<BlockId> {
        let mut seen = BTreeSet::new();
        if avoid.contains(&to) {
            // `to` itself counts as reached on arrival.
            for p in self.preds(to) {
                if !avoid.contains(&p) && seen.insert(p) {
                    self.grow_backwards(p, avoid, &mut seen);
                }
            }
            return seen;
        }
        seen.insert(to);
        self.grow_backwards(to, avoid, &mut seen);
        seen
    }

    fn grow_backwards(
        &self,
        from: BlockId,
        avoid: &BTreeSet<BlockId>,
        seen: &mut BTreeSet<BlockId>,
    ) {
        let mut queue = VecDeque::from([from]);
        while let Some(b) = queue.pop_front() {
            for p in self.preds(b) {
                if !avoid.contains(&p) && seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
    }

    /// Whether `b` lies on a cycle that avoids every block in `avoid`.
    pub fn cycles_avoiding(&self, b: BlockId, avoid: &BTreeSet<BlockId>) -> bool {
        if avoid.contains(&b) {
            return false;
        }
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<BlockId> = self.succs(b).into_iter().collect();
        while let Some(x) = queue.pop_front() {
            if x == b {
                return true;
            }
            if avoid.contains(&x) || !seen.insert(x) {
                continue;
            }
            queue.extend(self.succs(x));
        }
        false
    }

    pub fn reachable_from_entry(&self) -> BTreeSet<BlockId> {
        let mut seen = BTreeSet::from([self.entry()]);
        let mut queue = VecDeque::from([self.entry()]);
        while let Some(b) = queue.pop_front() {
            for s in self.succs(b) {
                if seen.insert(s) {
                    queue.push_back(s);
                }
            }
        }
        seen
    }

    /// Immediate dominators (index `b - 1`); the entry maps to itself.
    pub fn idoms(&self) -> Vec<BlockId> {
        // Iterative data-flow formulation over reverse postorder.
        let n = self.len();
        let mut order = Vec::new();
        let mut visited = vec![false; n + 1];
        fn dfs(s: &CfgShape, b: BlockId, visited: &mut [bool], order: &mut Vec<BlockId>) {
            visited[b] = true;
            for x in s.succs(b) {
                if !visited[x] {
                    dfs(s, x, visited, order);
                }
            }
            order.push(b);
        }
        dfs(self, self.entry(), &mut visited, &mut order);
        order.reverse();
        let mut rpo_index = vec![usize::MAX; n + 1];
        for (i, &b) in order.iter().enumerate() {
            rpo_index[b] = i;
        }
        let mut idom = vec![0usize; n + 1];
        idom[self.entry()] = self.entry();
        let mut changed = true;
        while changed {
            changed = false;
            for &b in order.iter().skip(1) {
                let mut new: Option<BlockId> = None;
                for p in self.preds(b) {
                    if idom[p] == 0 {
                        continue;
                    }
                    new = Some(match new {
                        None => p,
                        Some(mut a) => {
                            let mut c = p;
                            while a != c {
                                while rpo_index[a] > rpo_index[c] {
                                    a = idom[a];
                                }
                                while rpo_index[c] > rpo_index[a] {
                                    c = idom[c];
                                }
                            }
                            a
                        }
                    });
                }
                if let Some(d) = new {
                    if idom[b] != d {
                        idom[b] = d;
                        changed = true;
                    }
                }
            }
        }
        idom[1..].to_vec()
    }

    /// Whether block `a` dominates block `b`.
    pub fn dominates(&self, idoms: &[BlockId], a: BlockId, mut b: BlockId) -> bool {
        loop {
            if a == b {
                return true;
            }
            let up = idoms[b - 1];
            if up == b || up == 0 {
                return false;
            }
            b = up;
        }
    }
}

/// Statement-level CFG of a typed program.
#[derive(Debug, Clone)]
pub struct ControlFlowGraph {
    pub shape: CfgShape,
    /// Straight-line statements of each block (index `id - 1`).
    pub blocks: Vec<Vec<Stmt>>,
    /// Branch condition ending each block, if any.
    pub conds: Vec<Option<Expr>>,
}

impl ControlFlowGraph {
    pub fn entry(&self) -> BlockId {
        self.shape.entry()
    }

    pub fn block(&self, b: BlockId) -> &[Stmt] {
        &self.blocks[b - 1]
    }

    pub fn edges(&self) -> Vec<(BlockId, BlockId)> {
        self.shape
            .edges()
            .into_iter()
            .filter_map(|(a, t)| t.block().map(|b| (a, b)))
            .collect()
    }

    pub fn merge_points(&self) -> Vec<BlockId> {
        self.shape.merge_points()
    }
}

pub fn build_cfg(program: &Program) -> ControlFlowGraph {
    let mut sink = PlainSink::default();
    let shape = lower(&program.stmts, &mut sink);
    let n = shape.len();
    sink.blocks.resize(n, Vec::new());
    sink.conds.resize(n, None);
    ControlFlowGraph {
        shape,
        blocks: sink.blocks,
        conds: sink.conds,
    }
}

/// Receives the events of the structured lowering walk.
pub trait LoweringSink {
    type Env: Clone;
    fn env(&self) -> Self::Env;
    fn set_env(&mut self, env: Self::Env);
    fn stmt(&mut self, block: BlockId, stmt: &Stmt);
    fn branch(&mut self, block: BlockId, cond: &Expr);
    /// Control from `then_in` and `else_in` meets at `join`; the sink must leave its
    /// environment in the merged state.
    fn if_join(
        &mut self,
        join: BlockId,
        then_in: (BlockId, Self::Env),
        else_in: (BlockId, Self::Env),
    );
    fn loop_enter(&mut self, head: BlockId, entry_pred: Option<BlockId>, body: &[Stmt]);
    fn loop_back(&mut self, head: BlockId, back_pred: BlockId);
    fn has_phis(&self, _block: BlockId) -> bool {
        false
    }
    /// Called when a trailing empty block is dropped.
    fn remove_block(&mut self, _block: BlockId) {}
}

#[derive(Default)]
struct PlainSink {
    blocks: Vec<Vec<Stmt>>,
    conds: Vec<Option<Expr>>,
}

impl PlainSink {
    fn ensure(&mut self, b: BlockId) {
        if self.blocks.len() < b {
            self.blocks.resize(b, Vec::new());
            self.conds.resize(b, None);
        }
    }
}

impl LoweringSink for PlainSink {
    type Env = ();
    fn env(&self) {}
    fn set_env(&mut self, _env: ()) {}
    fn stmt(&mut self, block: BlockId, stmt: &Stmt) {
        self.ensure(block);
        self.blocks[block - 1].push(stmt.clone());
    }
    fn branch(&mut self, block: BlockId, cond: &Expr) {
        self.ensure(block);
        self.conds[block - 1] = Some(cond.clone());
    }
    fn if_join(&mut self, _join: BlockId, _t: (BlockId, ()), _e: (BlockId, ())) {}
    fn loop_enter(&mut self, _head: BlockId, _entry: Option<BlockId>, _body: &[Stmt]) {}
    fn loop_back(&mut self, _head: BlockId, _back: BlockId) {}
}

struct BlockInfo {
    n_stmts: usize,
    term: Option<Terminator>,
    preds: Vec<BlockId>,
    is_head: bool,
}

struct Walker<'s, S: LoweringSink> {
    sink: &'s mut S,
    blocks: Vec<BlockInfo>,
    cur: BlockId,
}

/// Runs the structured lowering walk and returns the resulting block structure.
pub fn lower<S: LoweringSink>(stmts: &[Stmt], sink: &mut S) -> CfgShape {
    let mut w = Walker {
        sink,
        blocks: Vec::new(),
        cur: 0,
    };
    w.cur = w.new_block(Vec::new());
    w.walk(stmts);
    let last = w.cur;
    w.info(last).term = Some(Terminator::Goto(Target::Exit));
    let removable = last != 1
        && last == w.blocks.len()
        && w.blocks[last - 1].n_stmts == 0
        && !w.blocks[last - 1].is_head
        && !w.sink.has_phis(last);
    if removable {
        w.blocks.pop();
        for info in &mut w.blocks {
            let fix = |t: Target| {
                if t == Target::Block(last) {
                    Target::Exit
                } else {
                    t
                }
            };
            info.term = info.term.map(|t| match t {
                Terminator::Goto(a) => Terminator::Goto(fix(a)),
                Terminator::Branch(a, b) => Terminator::Branch(fix(a), fix(b)),
            });
        }
        w.sink.remove_block(last);
    }
    CfgShape::new(
        w.blocks
            .iter()
            .map(|b| b.term.expect("every block is terminated"))
            .collect(),
    )
}

impl<S: LoweringSink> Walker<'_, S> {
    fn info(&mut self, b: BlockId) -> &mut BlockInfo {
        &mut self.blocks[b - 1]
    }

    fn new_block(&mut self, preds: Vec<BlockId>) -> BlockId {
        self.blocks.push(BlockInfo {
            n_stmts: 0,
            term: None,
            preds,
            is_head: false,
        });
        self.blocks.len()
    }

    fn walk(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.walk_stmt(s);
        }
    }

    fn walk_stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                let b = self.cur;
                self.sink.stmt(b, s);
                self.info(b).n_stmts += 1;
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => self.walk_if(cond, then_branch, else_branch.as_deref()),
            StmtKind::DoWhile { body, cond } => self.walk_do_while(body, cond),
            StmtKind::While { cond, body } => {
                let inner = Stmt {
                    kind: StmtKind::DoWhile {
                        body: body.clone(),
                        cond: cond.clone(),
                    },
                    span: s.span,
                };
                self.walk_if(cond, std::slice::from_ref(&inner), None);
            }
        }
    }

    fn walk_if(&mut self, cond: &Expr, then_branch: &[Stmt], else_branch: Option<&[Stmt]>) {
        let c = self.cur;
        self.sink.branch(c, cond);
        let env0 = self.sink.env();

        let t = self.new_block(vec![c]);
        self.cur = t;
        self.walk(then_branch);
        let t_end = self.cur;
        let env_t = self.sink.env();

        let else_part = else_branch.map(|els| {
            self.sink.set_env(env0.clone());
            let e = self.new_block(vec![c]);
            self.cur = e;
            self.walk(els);
            (e, self.cur, self.sink.env())
        });

        let (e_end, env_e) = match &else_part {
            Some((_, end, env)) => (*end, env.clone()),
            None => (c, env0),
        };
        let j = self.new_block(vec![t_end, e_end]);
        let else_target = else_part.as_ref().map_or(j, |(e, _, _)| *e);
        self.info(c).term = Some(Terminator::Branch(
            Target::Block(t),
            Target::Block(else_target),
        ));
        self.info(t_end).term = Some(Terminator::Goto(Target::Block(j)));
        if else_part.is_some() {
            self.info(e_end).term = Some(Terminator::Goto(Target::Block(j)));
        }
        self.sink.if_join(j, (t_end, env_t), (e_end, env_e));
        self.cur = j;
    }

    fn walk_do_while(&mut self, body: &[Stmt], cond: &Expr) {
        let cur = self.cur;
        let reuse = {
            let info = &self.blocks[cur - 1];
            info.n_stmts == 0 && info.preds.len() <= 1 && !info.is_head && !self.sink.has_phis(cur)
        };
        let (head, entry_pred) = if reuse {
            (cur, self.blocks[cur - 1].preds.first().copied())
        } else {
            let h = self.new_block(vec![cur]);
            self.info(cur).term = Some(Terminator::Goto(Target::Block(h)));
            (h, Some(cur))
        };
        self.info(head).is_head = true;
        self.sink.loop_enter(head, entry_pred, body);
        self.cur = head;
        self.walk(body);
        let end = self.cur;
        self.sink.branch(end, cond);
        self.sink.loop_back(head, end);
        self.info(head).preds.push(end);
        let x = self.new_block(vec![end]);
        self.info(end).term = Some(Terminator::Branch(Target::Block(head), Target::Block(x)));
        self.cur = x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse;

    fn cfg(src: &str) -> ControlFlowGraph {
        build_cfg(&parse(src).unwrap())
    }

    #[test]
    fn straight_line_is_one_block() {
        let g = cfg("a = 1; b = 2; c = 3");
        assert_eq!(g.shape.len(), 1);
        assert!(g.edges().is_empty());
        assert_eq!(g.block(1).len(), 3);
    }

    #[test]
    fn if_else_diamond() {
        let g = cfg("a = 0; c = true; if (c) { a = 1 } else { a = 2 }; b = a");
        assert_eq!(g.edges(), vec![(1, 2), (1, 3), (2, 4), (3, 4)]);
        assert_eq!(g.merge_points(), vec![4]);
    }

    #[test]
    fn do_while_back_edge_and_trailing_exit() {
        let g = cfg("i = 0; do { i = i + 1; c = i < 3 } while (c)");
        assert_eq!(g.shape.len(), 2);
        assert_eq!(g.edges(), vec![(1, 2), (2, 2)]);
        assert_eq!(
            g.shape.term(2),
            Terminator::Branch(Target::Block(2), Target::Exit)
        );
    }

    #[test]
    fn dominators_of_diamond() {
        let g = cfg("c = true; if (c) { a = 1 } else { a = 2 }; b = 1");
        let idom = g.shape.idoms();
        assert_eq!(idom, vec![1, 1, 1, 1]);
        assert!(g.shape.dominates(&idom, 1, 4));
        assert!(!g.shape.dominates(&idom, 2, 4));
    }

    #[test]
    fn reach_avoiding() {
        // 1 -> 2 -> {3,4}; 3 -> 4; 4 -> 2 | exit
        let g = cfg("i = 0; do { c = i < 1; if (c) { j = 1 }; i = i + 1; d = i < 3 } while (d)");
        assert_eq!(g.edges(), vec![(1, 2), (2, 3), (2, 4), (3, 4), (4, 2)]);
        let r = g.shape.can_reach_avoiding(3, &BTreeSet::from([2]));
        assert_eq!(r, BTreeSet::from([3]));
        assert!(g.shape.cycles_avoiding(2, &BTreeSet::from([1])));
        assert!(!g.shape.cycles_avoiding(3, &BTreeSet::from([2])));
    }
}
