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

//! One physical instance of a dataflow node.
//!
//! An instance keeps its own view of the execution path, built from control messages.
//! For each occurrence of its node's block on the path it computes one output bag,
//! choosing for every input the bag created at the latest occurrence of the input's
//! source block. Output bags on conditional edges are held back until the path shows
//! whether the destination will ever choose them.

use std::collections::{BTreeMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::dataflow::{
    route_targets, DataflowGraph, Edge, EdgeId, Node, NodeId, Partitioning, RouteTarget,
};
use crate::error::{Error, Result};
use crate::frontend::{BlockId, CfgShape, Target, Terminator};
use crate::oracle::{condition_value, Choice};
use crate::transform::{IoEnv, TransformationInstance};
use crate::value::Value;

use super::events::{Event, EventKind};
use super::message::{Msg, Payload};

/// Runtime switches shared by all instances of a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    /// Keep join and cross build state across output bags when the build input is reused.
    pub hoist: bool,
    /// Free input bags as soon as the path rules out further use.
    pub discard: bool,
    /// Open a bag at path length `n` only after every instance finished up to `n - 1`.
    pub barrier: bool,
    pub trace: bool,
    pub events: bool,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            hoist: true,
            discard: true,
            barrier: false,
            trace: true,
            events: false,
        }
    }
}

/// Extra processing time at the start of output bags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayPlan {
    /// Delay of every bag of a node, in nanoseconds.
    pub fixed: Vec<(NodeId, u64)>,
    pub random: Option<RandomDelays>,
}

/// Pseudo-random delays: each bag of each instance is delayed by up to `max_ns` with
/// probability `permille / 1000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomDelays {
    pub seed: u64,
    pub max_ns: u64,
    pub permille: u64,
}

impl DelayPlan {
    pub fn delay(&self, node: NodeId, idx: usize, pos: usize) -> u64 {
        let mut d: u64 = self
            .fixed
            .iter()
            .filter(|(n, _)| *n == node)
            .map(|(_, t)| t)
            .sum();
        if let Some(r) = self.random {
            let mut h = std::collections::hash_map::DefaultHasher::new();
            (r.seed, node, idx, pos).hash(&mut h);
            let x = h.finish();
            if x % 1000 < r.permille && r.max_ns > 0 {
                d += (x >> 10) % r.max_ns;
            }
        }
        d
    }
}

/// State shared by the instances of one job.
pub struct Ctx {
    pub g: Arc<DataflowGraph>,
    pub io: Arc<IoEnv>,
    pub opts: Options,
    pub delays: DelayPlan,
    /// Global index of instance 0 of each node.
    pub base: Vec<usize>,
    pub total: usize,
    /// Per instance: every output bag up to this path length is complete.
    pub progress: Vec<AtomicUsize>,
    pub budget: usize,
    pub trace_elements: AtomicUsize,
}

impl Ctx {
    pub fn new(
        g: Arc<DataflowGraph>,
        io: Arc<IoEnv>,
        opts: Options,
        delays: DelayPlan,
        budget: usize,
    ) -> Ctx {
        let mut base = Vec::with_capacity(g.nodes.len());
        let mut total = 0;
        for n in &g.nodes {
            base.push(total);
            total += n.parallelism;
        }
        Ctx {
            g,
            io,
            opts,
            delays,
            base,
            total,
            progress: (0..total).map(|_| AtomicUsize::new(0)).collect(),
            budget,
            trace_elements: AtomicUsize::new(0),
        }
    }

    pub fn gid(&self, node: NodeId, idx: usize) -> usize {
        self.base[node] + idx
    }

    /// Node and instance index of a global instance id.
    pub fn locate(&self, gid: usize) -> (NodeId, usize) {
        let node = self.base.partition_point(|&b| b <= gid) - 1;
        (node, gid - self.base[node])
    }

    fn barrier_reached(&self, len: usize) -> bool {
        self.progress
            .iter()
            .all(|p| p.load(Ordering::Acquire) >= len)
    }
}

/// Blocks appended to the path when control reaches `t`: the block and every block it
/// leads to unconditionally. `None` marks the end of the path.
pub fn chain(cfg: &CfgShape, mut t: Target) -> Vec<Option<BlockId>> {
    let mut out = Vec::new();
    loop {
        match t {
            Target::Exit => {
                out.push(None);
                return out;
            }
            Target::Block(b) => {
                out.push(Some(b));
                match cfg.term(b) {
                    Terminator::Goto(next) => t = next,
                    Terminator::Branch(..) => return out,
                }
            }
        }
    }
}

/// Path length of the input bag chosen by each slot of `node`'s bag at path length `q`;
/// `None` for inactive Φ inputs.
pub fn input_choice(
    g: &DataflowGraph,
    path: &[BlockId],
    node: &Node,
    q: usize,
) -> Result<Vec<Option<usize>>> {
    let mut ls: Vec<Option<usize>> = node
        .inputs
        .iter()
        .map(|&e| {
            let e = g.edge(e);
            let hi = if e.exclusive { q - 1 } else { q };
            (1..=hi).rev().find(|&p| path[p - 1] == e.src_block)
        })
        .collect();
    if node.is_phi() {
        let best = (0..ls.len())
            .filter(|&s| ls[s].is_some())
            .max_by_key(|&s| (ls[s], std::cmp::Reverse(s)));
        let Some(best) = best else {
            return Err(Error::Internal(format!(
                "{}: no Φ input available at {q}",
                node.name
            )));
        };
        for (s, l) in ls.iter_mut().enumerate() {
            if s != best {
                *l = None;
            }
        }
    } else if let Some(s) = ls.iter().position(Option::is_none) {
        return Err(Error::Internal(format!(
            "{}: input {s} has no bag at {q}",
            node.name
        )));
    }
    Ok(ls)
}

/// Whether a bag created at `pos` is sent along `e`; `None` while the path is too short
/// to tell. `next` is the first path position not yet examined.
fn route_decision(e: &Edge, next: &mut usize, path: &[BlockId], ended: bool) -> Option<bool> {
    if !e.conditional {
        return Some(true);
    }
    while *next <= path.len() {
        let b = path[*next - 1];
        if b == e.dst_block {
            return Some(true);
        }
        if e.blockers.contains(&b) {
            return Some(false);
        }
        *next += 1;
    }
    if ended {
        Some(false)
    } else {
        None
    }
}

#[derive(Debug, Default)]
struct InBuf {
    elems: Vec<Value>,
    closes: usize,
    /// First examined position when looking for the discard point.
    scan: usize,
    discard_at: Option<usize>,
}

struct OpenBag {
    pos: usize,
    slots: Vec<Option<(EdgeId, usize)>>,
    fed: Vec<usize>,
    closed: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeState {
    Undecided { next: usize },
    Send { closed: bool },
    Withheld,
}

struct OutBag {
    pos: usize,
    done: bool,
    edges: Vec<EdgeState>,
    /// Everything emitted so far, kept while some edge is undecided.
    held: Vec<Value>,
    /// Emitted since the last flush.
    fresh: Vec<Value>,
    /// Complete contents, kept for the trace or the branch decision.
    all: Vec<Value>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InstanceStats {
    pub bags: u64,
    pub builds: u64,
    pub drop_states: u64,
    pub control_sent: u64,
    pub data_sent: u64,
    pub max_block_ids: usize,
    pub max_path_lens: usize,
}

pub struct Instance {
    pub gid: usize,
    pub node: NodeId,
    pub idx: usize,
    ctx: Arc<Ctx>,
    op: TransformationInstance,
    retain_slot0: bool,
    record: bool,
    path: Vec<BlockId>,
    ended: bool,
    pending_ctl: BTreeMap<usize, Option<BlockId>>,
    cursor: usize,
    open: Option<OpenBag>,
    inbuf: BTreeMap<(EdgeId, usize), InBuf>,
    out_bags: VecDeque<OutBag>,
    retained: Option<(EdgeId, usize)>,
    pub blocked_until: Option<u64>,
    pub waiting_barrier: bool,
    pub outbox: Vec<(usize, Msg)>,
    pub events: Vec<Event>,
    /// Output partitions by path length, when recording.
    pub outputs: Vec<(usize, Vec<Value>)>,
    pub choices: Vec<(usize, Vec<Choice>)>,
    /// Times at which this condition node extended the path.
    /// When `done_upto` reached each new value.
    pub done_times: Vec<(usize, u64)>,
    stats: InstanceStats,
}

impl Instance {
    /// A fresh instance. `path` is the initially known path and `start` the first
    /// position it computes; `ended` marks `path` as complete.
    pub fn new(
        ctx: Arc<Ctx>,
        node: NodeId,
        idx: usize,
        path: Vec<BlockId>,
        ended: bool,
        start: usize,
        keep_outputs: bool,
    ) -> Instance {
        let n = ctx.g.node(node);
        let retain_slot0 =
            ctx.opts.hoist && n.kind.can_retain() && ctx.g.edge(n.inputs[0]).reuse_possible;
        let mut op = TransformationInstance::for_node(n, idx, ctx.io.clone());
        if !retain_slot0 {
            op = op.without_retention();
        }
        let record = keep_outputs || ctx.opts.trace || n.is_condition;
        Instance {
            gid: ctx.gid(node, idx),
            node,
            idx,
            op,
            retain_slot0,
            record,
            path,
            ended,
            pending_ctl: BTreeMap::new(),
            cursor: start,
            open: None,
            inbuf: BTreeMap::new(),
            out_bags: VecDeque::new(),
            retained: None,
            blocked_until: None,
            waiting_barrier: false,
            outbox: Vec::new(),
            events: Vec::new(),
            outputs: Vec::new(),
            choices: Vec::new(),
            done_times: Vec::new(),
            stats: InstanceStats::default(),
            ctx,
        }
    }

    pub fn path(&self) -> &[BlockId] {
        &self.path
    }

    pub fn stats(&self) -> InstanceStats {
        InstanceStats {
            builds: self.op.builds,
            drop_states: self.op.drop_states,
            ..self.stats
        }
    }

    fn node_ref(&self) -> &Node {
        self.ctx.g.node(self.node)
    }

    pub fn handle(&mut self, msg: Msg) {
        match msg {
            Msg::Data {
                edge, len, payload, ..
            } => {
                let b = self.inbuf.entry((edge, len)).or_default();
                match payload {
                    Payload::Batch(v) => b.elems.extend(v),
                    Payload::Close => b.closes += 1,
                }
            }
            Msg::Control { seq, block } => {
                self.pending_ctl.insert(seq, block);
                self.apply_control();
            }
        }
    }

    fn apply_control(&mut self) {
        while let Some(b) = self.pending_ctl.remove(&(self.path.len() + 1)) {
            match b {
                Some(b) => self.path.push(b),
                None => self.ended = true,
            }
        }
    }

    pub fn is_finished(&self) -> bool {
        self.ended
            && self.cursor > self.path.len()
            && self.open.is_none()
            && self.out_bags.is_empty()
            && self.outbox.is_empty()
    }

    /// Every output bag at path lengths up to this value is complete.
    pub fn done_upto(&self) -> usize {
        self.cursor - 1
    }

    /// Drops buffered inputs; used once the job is over.
    pub fn release_inputs(&mut self) {
        self.inbuf.clear();
    }

    /// Does all work possible at time `now`.
    pub fn advance(&mut self, now: u64) -> Result<()> {
        self.waiting_barrier = false;
        loop {
            if let Some(t) = self.blocked_until {
                if now < t {
                    break;
                }
                self.blocked_until = None;
            }
            if self.open.is_some() {
                if !self.feed(now)? {
                    break;
                }
                if self.op.all_closed() {
                    self.finish_bag(now)?;
                }
                continue;
            }
            let home = self.node_ref().block;
            while self.cursor <= self.path.len() && self.path[self.cursor - 1] != home {
                self.cursor += 1;
            }
            let done = self.done_upto();
            if self.done_times.last().map_or(0, |d| d.0) < done {
                self.done_times.push((done, now));
                self.ctx.progress[self.gid].store(done, Ordering::Release);
            }
            if self.ctx.opts.discard {
                self.discard(now)?;
            }
            if self.cursor > self.path.len() {
                break;
            }
            if self.ctx.opts.barrier && !self.ctx.barrier_reached(self.cursor - 1) {
                self.waiting_barrier = true;
                break;
            }
            self.open_bag(now)?;
        }
        self.decide_routes();
        self.flush();
        Ok(())
    }

    fn open_bag(&mut self, now: u64) -> Result<()> {
        let q = self.cursor;
        let ctx = self.ctx.clone();
        let g = &ctx.g;
        let node = g.node(self.node);
        let ls = input_choice(g, &self.path, node, q)?;
        let slots: Vec<Option<(EdgeId, usize)>> = ls
            .iter()
            .zip(&node.inputs)
            .map(|(l, &e)| l.map(|l| (e, l)))
            .collect();
        let mut active: Vec<bool> = slots.iter().map(Option::is_some).collect();
        if self.retain_slot0 {
            let c0 = slots[0];
            if c0.is_some() && self.retained == c0 && self.op.has_retained_state() {
                active[0] = false;
            } else {
                if self.retained.is_some() && self.op.has_retained_state() {
                    self.op.drop_state()?;
                    self.event(now, EventKind::DropState, q);
                }
                self.retained = c0;
            }
        } else if node.kind.can_retain() && !self.ctx.opts.hoist {
            self.op.drop_state()?;
            self.event(now, EventKind::DropState, q);
        }
        self.op.open_out_bag(&active)?;
        let choices: Vec<Choice> = slots
            .iter()
            .enumerate()
            .filter_map(|(slot, c)| {
                c.map(|(e, l)| Choice {
                    slot,
                    src: g.node(g.edge(e).src).name.clone(),
                    src_len: l,
                })
            })
            .collect();
        if self.ctx.opts.trace && self.idx == 0 && !choices.is_empty() {
            self.choices.push((q, choices));
        }
        let closed = active.iter().map(|a| !a).collect();
        let edges = node
            .outputs
            .iter()
            .map(|_| EdgeState::Undecided { next: q + 1 })
            .collect();
        self.out_bags.push_back(OutBag {
            pos: q,
            done: false,
            edges,
            held: Vec::new(),
            fresh: Vec::new(),
            all: Vec::new(),
        });
        self.open = Some(OpenBag {
            pos: q,
            slots,
            fed: vec![0; active.len()],
            closed,
        });
        self.event(now, EventKind::Open, q);
        let d = self.ctx.delays.delay(self.node, self.idx, q);
        if d > 0 {
            self.blocked_until = Some(now + d);
        }
        Ok(())
    }

    /// Pushes available input into the open bag; returns whether anything happened.
    fn feed(&mut self, now: u64) -> Result<bool> {
        let open = self.open.as_mut().expect("open bag");
        let mut out = Vec::new();
        let mut progressed = false;
        let mut events = Vec::new();
        for slot in 0..open.slots.len() {
            if open.closed[slot] {
                continue;
            }
            let (e, l) = open.slots[slot].expect("active slot");
            let Some(buf) = self.inbuf.get_mut(&(e, l)) else {
                continue;
            };
            let edge = self.ctx.g.edge(e);
            if buf.elems.len() > open.fed[slot] {
                events.push(EventKind::PushBatch);
            }
            if self.ctx.opts.discard && !edge.reuse_possible {
                // Only this output bag can choose the input, so hand over the elements.
                for v in std::mem::take(&mut buf.elems) {
                    self.op.push(slot, v, &mut out)?;
                    progressed = true;
                }
            } else {
                while open.fed[slot] < buf.elems.len() {
                    self.op
                        .push(slot, buf.elems[open.fed[slot]].clone(), &mut out)?;
                    open.fed[slot] += 1;
                    progressed = true;
                }
            }
            let src = edge.src;
            if buf.closes == self.ctx.g.node(src).parallelism {
                self.op.close_in(slot, &mut out)?;
                events.push(EventKind::CloseIn);
                open.closed[slot] = true;
                progressed = true;
            }
        }
        if self.op.all_closed() {
            progressed = true;
        }
        let pos = open.pos;
        for k in events {
            self.event(now, k, pos);
        }
        self.emit(out);
        Ok(progressed)
    }

    fn emit(&mut self, out: Vec<Value>) {
        if out.is_empty() {
            return;
        }
        let ob = self.out_bags.back_mut().expect("output bag");
        if self.record {
            ob.all.extend(out.iter().cloned());
        }
        ob.fresh.extend(out);
    }

    fn finish_bag(&mut self, now: u64) -> Result<()> {
        let open = self.open.take().expect("open bag");
        let mut out = Vec::new();
        self.op.close_out(&mut out)?;
        self.emit(out);
        self.stats.bags += 1;
        self.cursor = open.pos + 1;
        self.event(now, EventKind::CloseOut, open.pos);
        let ob = self.out_bags.back_mut().expect("output bag");
        ob.done = true;
        let all = if self.record {
            std::mem::take(&mut ob.all)
        } else {
            Vec::new()
        };
        let node = self.ctx.g.node(self.node);
        if node.is_condition && open.pos == self.path.len() && !self.ended {
            let c = condition_value(&node.name, &all)?;
            let Terminator::Branch(t, f) = self.ctx.g.cfg.term(node.block) else {
                return Err(Error::Internal(format!(
                    "{} is a condition of a non-branching block",
                    node.name
                )));
            };
            for b in chain(&self.ctx.g.cfg, if c { t } else { f }) {
                let seq = self.path.len() + 1;
                self.event(now, EventKind::Control, seq);
                let msg = Msg::Control { seq, block: b };
                let me = self.gid;
                for gid in (0..self.ctx.total).filter(|&g| g != me) {
                    self.send(gid, msg.clone());
                }
                self.stats.control_sent += (self.ctx.total - 1) as u64;
                match b {
                    Some(b) => self.path.push(b),
                    None => self.ended = true,
                }
            }
        }
        if self.record {
            if self.ctx.opts.trace {
                let n = self
                    .ctx
                    .trace_elements
                    .fetch_add(all.len(), Ordering::Relaxed)
                    + all.len();
                if n > self.ctx.budget {
                    return Err(Error::TraceBudget {
                        budget: self.ctx.budget,
                    });
                }
            }
            self.outputs.push((open.pos, all));
        }
        Ok(())
    }

    fn event(&mut self, now: u64, kind: EventKind, path_len: usize) {
        if self.ctx.opts.events {
            self.events.push(Event {
                t_ns: now,
                node: self.node,
                idx: self.idx,
                kind,
                path_len,
            });
        }
    }

    fn send(&mut self, gid: usize, msg: Msg) {
        self.stats.max_block_ids = self.stats.max_block_ids.max(msg.block_ids());
        self.stats.max_path_lens = self.stats.max_path_lens.max(msg.path_lens());
        self.outbox.push((gid, msg));
    }

    fn send_values(&mut self, e: EdgeId, pos: usize, vals: &[Value]) {
        if !vals.is_empty() {
            self.send_owned(e, pos, vals.to_vec());
        }
    }

    fn send_owned(&mut self, e: EdgeId, pos: usize, vals: Vec<Value>) {
        if vals.is_empty() {
            return;
        }
        let ctx = self.ctx.clone();
        let edge = ctx.g.edge(e);
        let dst = edge.dst;
        let par = ctx.g.node(dst).parallelism;
        let sender = self.idx;
        let batch = move |p: Vec<Value>| Msg::Data {
            edge: e,
            sender,
            len: pos,
            payload: Payload::Batch(p),
        };
        match edge.partitioning {
            Partitioning::Forward => {
                let msg = batch(vals);
                self.stats.data_sent += 1;
                self.send(ctx.gid(dst, self.idx % par), msg);
            }
            Partitioning::Broadcast => {
                for i in 1..par {
                    let msg = batch(vals.clone());
                    self.stats.data_sent += 1;
                    self.send(ctx.gid(dst, i), msg);
                }
                let msg = batch(vals);
                self.stats.data_sent += 1;
                self.send(ctx.gid(dst, 0), msg);
            }
            Partitioning::HashByKey => {
                let mut parts: Vec<Vec<Value>> = vec![Vec::new(); par];
                for v in vals {
                    match route_targets(edge, par, self.idx, &v) {
                        RouteTarget::One(i) => parts[i].push(v),
                        RouteTarget::All => unreachable!("hash partitioning targets one instance"),
                    }
                }
                for (i, p) in parts.into_iter().enumerate() {
                    if !p.is_empty() {
                        let msg = batch(p);
                        self.stats.data_sent += 1;
                        self.send(ctx.gid(dst, i), msg);
                    }
                }
            }
        }
    }

    fn send_close(&mut self, e: EdgeId, pos: usize) {
        let dst = self.ctx.g.edge(e).dst;
        for i in 0..self.ctx.g.node(dst).parallelism {
            let gid = self.ctx.gid(dst, i);
            self.stats.data_sent += 1;
            self.send(
                gid,
                Msg::Data {
                    edge: e,
                    sender: self.idx,
                    len: pos,
                    payload: Payload::Close,
                },
            );
        }
    }

    fn decide_routes(&mut self) {
        let outputs = self.ctx.g.node(self.node).outputs.clone();
        for bi in 0..self.out_bags.len() {
            for (k, &e) in outputs.iter().enumerate() {
                let EdgeState::Undecided { mut next } = self.out_bags[bi].edges[k] else {
                    continue;
                };
                let d = route_decision(self.ctx.g.edge(e), &mut next, &self.path, self.ended);
                let state = match d {
                    None => EdgeState::Undecided { next },
                    Some(false) => EdgeState::Withheld,
                    Some(true) => {
                        let ob = &mut self.out_bags[bi];
                        let (held, pos) = (std::mem::take(&mut ob.held), ob.pos);
                        self.send_values(e, pos, &held);
                        self.out_bags[bi].held = held;
                        EdgeState::Send { closed: false }
                    }
                };
                self.out_bags[bi].edges[k] = state;
            }
            let ob = &mut self.out_bags[bi];
            if !ob
                .edges
                .iter()
                .any(|s| matches!(s, EdgeState::Undecided { .. }))
            {
                ob.held = Vec::new();
            }
        }
    }

    fn flush(&mut self) {
        let ctx = self.ctx.clone();
        let outputs = &ctx.g.node(self.node).outputs;
        for bi in 0..self.out_bags.len() {
            let fresh = std::mem::take(&mut self.out_bags[bi].fresh);
            let (pos, done) = (self.out_bags[bi].pos, self.out_bags[bi].done);
            let undecided = self.out_bags[bi]
                .edges
                .iter()
                .any(|s| matches!(s, EdgeState::Undecided { .. }));
            if undecided {
                self.out_bags[bi].held.extend(fresh.iter().cloned());
            }
            let sending: Vec<usize> = (0..outputs.len())
                .filter(|&k| self.out_bags[bi].edges[k] == (EdgeState::Send { closed: false }))
                .collect();
            let mut fresh = Some(fresh);
            for (i, &k) in sending.iter().enumerate() {
                let vals = if i + 1 == sending.len() {
                    fresh.take().expect("fresh elements")
                } else {
                    fresh.as_ref().expect("fresh elements").clone()
                };
                self.send_owned(outputs[k], pos, vals);
                if done {
                    self.send_close(outputs[k], pos);
                    self.out_bags[bi].edges[k] = EdgeState::Send { closed: true };
                }
            }
        }
        self.out_bags.retain(|ob| {
            !ob.done
                || ob.edges.iter().any(|s| {
                    matches!(
                        s,
                        EdgeState::Undecided { .. } | EdgeState::Send { closed: false }
                    )
                })
        });
    }

    /// Frees input bags that no output bag at or after the current position can choose.
    fn discard(&mut self, now: u64) -> Result<()> {
        let done = self.done_upto();
        let mut free = Vec::new();
        for (&(e, l), buf) in self.inbuf.iter_mut() {
            if buf.discard_at.is_none() {
                let edge = self.ctx.g.edge(e);
                let mut p = buf.scan.max(l + 1);
                while p <= self.path.len() {
                    if edge.is_never(self.path[p - 1]) {
                        buf.discard_at = Some(p);
                        break;
                    }
                    p += 1;
                }
                buf.scan = p;
            }
            if matches!(buf.discard_at, Some(d) if done >= d) {
                free.push((e, l));
            }
        }
        for k in free {
            self.inbuf.remove(&k);
            if self.retained == Some(k) {
                self.retained = None;
                if self.op.has_retained_state() {
                    self.op.drop_state()?;
                    self.event(now, EventKind::DropState, done);
                }
            }
        }
        Ok(())
    }

    /// Re-sends output bags computed by an earlier job to the destinations that choose
    /// them between `start` and the end of the path.
    pub fn inject(&mut self, past: &[(usize, Vec<Value>)], start: usize) -> Result<()> {
        let outputs = self.ctx.g.node(self.node).outputs.clone();
        for (l, vals) in past {
            for &e in &outputs {
                let edge = self.ctx.g.edge(e);
                let dst = self.ctx.g.node(edge.dst);
                let mut wanted = false;
                for r in start.max(*l + 1)..=self.path.len() {
                    if self.path[r - 1] == edge.dst_block
                        && input_choice(&self.ctx.g, &self.path, dst, r)?[edge.slot] == Some(*l)
                    {
                        wanted = true;
                        break;
                    }
                }
                if wanted {
                    self.send_values(e, *l, vals);
                    self.send_close(e, *l);
                }
            }
        }
        Ok(())
    }
}
