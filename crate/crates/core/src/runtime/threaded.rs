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

//! Multi-threaded execution: instance `i` runs on worker thread `i mod workers`.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use crate::error::{Error, Result};

use super::instance::{Ctx, Instance};
use super::message::Msg;

const SPIN: Duration = Duration::from_micros(500);

struct Envelope {
    to: usize,
    msg: Msg,
}

struct Shared {
    start: Instant,
    abort: AtomicBool,
    error: Mutex<Option<Error>>,
    last_activity: AtomicU64,
    deadlock: Duration,
}

impl Shared {
    fn now(&self) -> u64 {
        self.start.elapsed().as_nanos() as u64
    }

    fn fail(&self, e: Error) {
        let mut slot = self.error.lock().expect("error lock");
        if slot.is_none() {
            *slot = Some(e);
        }
        self.abort.store(true, Ordering::SeqCst);
    }
}

/// Runs `insts` (indexed by global id) on `workers` threads until every instance is
/// finished; returns them and the elapsed wall-clock time.
pub fn run_threaded(
    ctx: &Arc<Ctx>,
    insts: Vec<Instance>,
    workers: usize,
    deadlock: Duration,
) -> Result<(Vec<Instance>, Duration)> {
    let n = insts.len();
    let (senders, receivers): (Vec<Sender<Envelope>>, Vec<Receiver<Envelope>>) =
        (0..workers).map(|_| unbounded()).unzip();
    // Instance i of every node lives on worker i mod workers.
    let owner: Vec<usize> = insts.iter().map(|i| i.idx % workers).collect();
    let mut slot = vec![0; n];
    let mut per_worker: Vec<Vec<Instance>> = (0..workers).map(|_| Vec::new()).collect();
    for inst in insts {
        let w = &mut per_worker[owner[inst.gid]];
        slot[inst.gid] = w.len();
        w.push(inst);
    }
    let place = Placement { owner, slot };
    let shared = Shared {
        start: Instant::now(),
        abort: AtomicBool::new(false),
        error: Mutex::new(None),
        last_activity: AtomicU64::new(0),
        deadlock,
    };
    let results: Vec<Vec<Instance>> = std::thread::scope(|s| {
        let handles: Vec<_> = per_worker
            .into_iter()
            .zip(receivers)
            .map(|(mine, rx)| {
                let senders = senders.clone();
                let shared = &shared;
                let ctx = ctx.clone();
                let place = &place;
                s.spawn(move || worker(&ctx, mine, rx, senders, place, shared))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    if let Some(e) = shared.error.lock().expect("error lock").take() {
        return Err(e);
    }
    let elapsed = shared.start.elapsed();
    let mut all: Vec<Option<Instance>> = (0..n).map(|_| None).collect();
    for inst in results.into_iter().flatten() {
        let gid = inst.gid;
        all[gid] = Some(inst);
    }
    Ok((
        all.into_iter()
            .map(|i| i.expect("instance returned"))
            .collect(),
        elapsed,
    ))
}

/// Worker and local slot of every instance, by global id.
struct Placement {
    owner: Vec<usize>,
    slot: Vec<usize>,
}

fn worker(
    ctx: &Ctx,
    mut insts: Vec<Instance>,
    rx: Receiver<Envelope>,
    senders: Vec<Sender<Envelope>>,
    place: &Placement,
    shared: &Shared,
) -> Vec<Instance> {
    let local = |gid: usize| place.slot[gid];
    let me = insts.first().map_or(usize::MAX, |i| place.owner[i.gid]);
    let mut pending: Vec<Envelope> = Vec::new();
    let mut dirty = vec![true; insts.len()];
    let mut idle = false;
    loop {
        if shared.abort.load(Ordering::Relaxed) {
            return insts;
        }
        let mut got = false;
        let deliver = |env: Envelope, insts: &mut Vec<Instance>, dirty: &mut Vec<bool>| {
            let li = local(env.to);
            insts[li].handle(env.msg);
            dirty[li] = true;
        };
        if idle {
            let now = shared.now();
            let mut timeout = Duration::from_millis(5);
            for i in &insts {
                if let Some(t) = i.blocked_until {
                    timeout = timeout.min(Duration::from_nanos(t.saturating_sub(now)));
                }
                if i.waiting_barrier {
                    timeout = timeout.min(Duration::from_micros(50));
                }
            }
            // Yield for a while before sleeping: waking a blocked thread costs more
            // than a step of a small loop body.
            let spin_until = Instant::now() + SPIN.min(timeout);
            let mut first = None;
            while Instant::now() < spin_until {
                if let Ok(env) = rx.try_recv() {
                    first = Some(env);
                    break;
                }
                std::thread::yield_now();
            }
            if first.is_none() {
                match rx.recv_timeout(timeout) {
                    Ok(env) => first = Some(env),
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => return insts,
                }
            }
            if let Some(env) = first {
                deliver(env, &mut insts, &mut dirty);
                got = true;
            }
        }
        for env in std::mem::take(&mut pending) {
            deliver(env, &mut insts, &mut dirty);
            got = true;
        }
        while let Ok(env) = rx.try_recv() {
            deliver(env, &mut insts, &mut dirty);
            got = true;
        }
        let now = shared.now();
        let mut worked = got;
        for (li, inst) in insts.iter_mut().enumerate() {
            let wake = inst.blocked_until.is_some_and(|t| t <= now);
            if !(dirty[li] || wake || inst.waiting_barrier) {
                continue;
            }
            dirty[li] = false;
            if let Err(e) = inst.advance(now) {
                shared.fail(e);
                return insts;
            }
            for (to, msg) in inst.outbox.drain(..) {
                worked = true;
                if place.owner[to] == me {
                    pending.push(Envelope { to, msg });
                } else {
                    // A finished worker drops its receiver; nothing it owns needs more input.
                    let _ = senders[place.owner[to]].send(Envelope { to, msg });
                }
            }
        }
        if insts.iter().all(Instance::is_finished) {
            return insts;
        }
        if worked {
            shared.last_activity.store(now, Ordering::Relaxed);
        } else {
            let last = shared.last_activity.load(Ordering::Relaxed);
            let blocked = insts.iter().any(|i| i.blocked_until.is_some());
            if !blocked && now.saturating_sub(last) > shared.deadlock.as_nanos() as u64 {
                let stuck = insts
                    .iter()
                    .find(|i| !i.is_finished())
                    .expect("unfinished instance");
                shared.fail(Error::Deadlock(format!(
                    "no progress for {:?}; {}#{} waits at path length {}",
                    shared.deadlock,
                    ctx.g.node(stuck.node).name,
                    stuck.idx,
                    stuck.done_upto() + 1
                )));
                return insts;
            }
        }
        idle = !worked;
    }
}
