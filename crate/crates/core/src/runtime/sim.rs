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

//! Deterministic single-threaded execution with simulated message latency.
//!
//! Every message gets a pseudo-random latency, keeping first-in first-out order per
//! sender and receiver. Bag delays advance virtual time instead of sleeping.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::Ordering;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::instance::{Ctx, Instance};
use super::message::Msg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub max_latency_ns: u64,
}

enum Ev {
    Deliver { to: usize, msg: Msg },
    Wake(usize),
}

struct Sim {
    rng: ChaCha8Rng,
    max_latency: u64,
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    evs: HashMap<u64, Ev>,
    seq: u64,
    fifo: HashMap<(usize, usize), u64>,
    wake_at: Vec<Option<u64>>,
}

impl Sim {
    fn push(&mut self, t: u64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Reverse((t, self.seq)));
        self.evs.insert(self.seq, ev);
    }
}

/// Runs `insts` (indexed by global id) to completion; returns them with final virtual time.
pub fn run_sim(
    ctx: &Arc<Ctx>,
    mut insts: Vec<Instance>,
    cfg: SimConfig,
) -> Result<(Vec<Instance>, u64)> {
    let n = insts.len();
    let mut sim = Sim {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        max_latency: cfg.max_latency_ns,
        heap: BinaryHeap::new(),
        evs: HashMap::new(),
        seq: 0,
        fifo: HashMap::new(),
        wake_at: vec![None; n],
    };
    for gid in 0..n {
        sim.push(0, Ev::Wake(gid));
    }
    let mut barrier_waiters: Vec<usize> = Vec::new();
    let mut now = 0;
    while let Some(Reverse((t, seq))) = sim.heap.pop() {
        now = t;
        let gid = match sim.evs.remove(&seq).expect("event") {
            Ev::Deliver { to, msg } => {
                insts[to].handle(msg);
                to
            }
            Ev::Wake(gid) => {
                if sim.wake_at[gid] == Some(t) {
                    sim.wake_at[gid] = None;
                }
                gid
            }
        };
        let before = ctx.progress[gid].load(Ordering::Relaxed);
        let inst = &mut insts[gid];
        inst.advance(now)?;
        for (to, msg) in std::mem::take(&mut inst.outbox) {
            let lat = if sim.max_latency == 0 {
                0
            } else {
                sim.rng.gen_range(0..=sim.max_latency)
            };
            let last = sim.fifo.entry((gid, to)).or_insert(0);
            let at = (now + lat).max(*last);
            *last = at;
            sim.push(at, Ev::Deliver { to, msg });
        }
        if let Some(b) = inst.blocked_until {
            if b > now && sim.wake_at[gid].is_none_or(|w| w > b) {
                sim.wake_at[gid] = Some(b);
                sim.push(b, Ev::Wake(gid));
            }
        }
        if inst.waiting_barrier && !barrier_waiters.contains(&gid) {
            barrier_waiters.push(gid);
        }
        if ctx.progress[gid].load(Ordering::Relaxed) != before {
            for w in std::mem::take(&mut barrier_waiters) {
                sim.push(now, Ev::Wake(w));
            }
        }
    }
    if let Some(stuck) = insts.iter().find(|i| !i.is_finished()) {
        let name = &ctx.g.node(stuck.node).name;
        return Err(Error::Deadlock(format!(
            "no pending events but {name}#{} has not finished (path length {})",
            stuck.idx,
            stuck.path().len()
        )));
    }
    Ok((insts, now))
}
