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

//! Parallel execution of a dataflow job.
//!
//! All instances run in one job. Condition nodes extend the execution path and
//! broadcast each new block to every instance; every bag is identified by its node and
//! the path length at which it was created. The per-step mode instead launches one
//! job for every stretch of the path between two branch decisions.

pub mod events;
pub mod instance;
pub mod message;
pub mod sim;
pub mod threaded;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::dataflow::{build_dataflow, DataflowGraph, NodeId};
use crate::error::{Error, Result};
use crate::frontend::{BlockId, CfgShape, Target, Terminator};
use crate::oracle::{condition_value, ExecutionTrace, DEFAULT_BUDGET};
use crate::ssa::SsaProgram;
use crate::transform::IoEnv;
use crate::value::{Bag, Value};

/// Output partitions kept between per-step jobs, by node and instance: path length
/// and elements of each bag.
type Store = Vec<Vec<Vec<(usize, Vec<Value>)>>>;

pub use events::{overlap, write_events_csv, Event, EventKind};
pub use instance::{
    chain, input_choice, Ctx, DelayPlan, Instance, InstanceStats, Options, RandomDelays,
};
pub use message::{Msg, Payload};
pub use sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One job for the whole program.
    SingleJob,
    /// A fresh job for each stretch of the path between branch decisions.
    PerStepJobs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Threaded,
    Simulated(SimConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workers: usize,
    pub mode: Mode,
    pub driver: Driver,
    pub opts: Options,
    /// Per-bag delays by node name, in nanoseconds.
    pub delays: Vec<(String, u64)>,
    pub random_delays: Option<RandomDelays>,
    pub budget: usize,
    pub deadlock_timeout: Duration,
    /// Fixed setup time added to every job in per-step mode, to model a cluster
    /// scheduler. Zero unless set explicitly.
    pub job_setup: Duration,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            workers: 1,
            mode: Mode::SingleJob,
            driver: Driver::Threaded,
            opts: Options::default(),
            delays: Vec::new(),
            random_delays: None,
            budget: DEFAULT_BUDGET,
            deadlock_timeout: Duration::from_secs(20),
            job_setup: Duration::ZERO,
        }
    }
}

impl RunConfig {
    pub fn with_workers(workers: usize) -> RunConfig {
        RunConfig {
            workers,
            ..RunConfig::default()
        }
    }

    pub fn simulated(workers: usize, seed: u64, max_latency_ns: u64) -> RunConfig {
        RunConfig {
            workers,
            driver: Driver::Simulated(SimConfig {
                seed,
                max_latency_ns,
            }),
            ..RunConfig::default()
        }
    }
}

/// Counters of one node, per instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStats {
    pub name: String,
    pub parallelism: usize,
    pub bags: Vec<u64>,
    pub builds: Vec<u64>,
    pub drop_states: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: Option<ExecutionTrace>,
    pub path: Vec<BlockId>,
    pub effects: BTreeMap<String, Bag>,
    pub jobs: usize,
    /// Node instantiations over all jobs.
    pub instantiations: usize,
    /// Physical instances per job.
    pub instances: usize,
    pub control_messages: u64,
    pub data_messages: u64,
    pub max_block_ids_per_message: usize,
    pub max_path_lens_per_message: usize,
    pub nodes: Vec<NodeStats>,
    pub events: Vec<Event>,
    /// Wall-clock time, or final virtual time under simulation.
    pub elapsed: Duration,
    /// Time between consecutive branch decisions (per job in per-step mode).
    pub step_latencies: Vec<Duration>,
}

impl RunReport {
    pub fn node(&self, name: &str) -> Option<&NodeStats> {
        self.nodes.iter().find(|n| n.name == name)
    }
}

/// Runs the lifted program `ssa` in parallel against a fresh copy of `io`.
pub fn run(ssa: &SsaProgram, io: &IoEnv, cfg: &RunConfig) -> Result<RunReport> {
    if cfg.workers == 0 {
        return Err(Error::Runtime("at least one worker is needed".into()));
    }
    let g = Arc::new(build_dataflow(ssa, cfg.workers));
    let mut delays = DelayPlan {
        fixed: Vec::new(),
        random: cfg.random_delays,
    };
    for (name, ns) in &cfg.delays {
        let n = g
            .node_named(name)
            .ok_or_else(|| Error::Runtime(format!("no node named `{name}` to delay")))?;
        delays.fixed.push((n, *ns));
    }
    let io = Arc::new(io.fresh());
    match cfg.mode {
        Mode::SingleJob => run_single(g, io, delays, cfg),
        Mode::PerStepJobs => run_per_step(ssa, g, io, delays, cfg),
    }
}

fn new_ctx(
    g: &Arc<DataflowGraph>,
    io: &Arc<IoEnv>,
    delays: &DelayPlan,
    cfg: &RunConfig,
) -> Arc<Ctx> {
    Arc::new(Ctx::new(
        g.clone(),
        io.clone(),
        cfg.opts,
        delays.clone(),
        cfg.budget,
    ))
}

fn execute(
    ctx: &Arc<Ctx>,
    insts: Vec<Instance>,
    cfg: &RunConfig,
) -> Result<(Vec<Instance>, Duration)> {
    match cfg.driver {
        Driver::Threaded => threaded::run_threaded(ctx, insts, cfg.workers, cfg.deadlock_timeout),
        Driver::Simulated(sc) => {
            sim::run_sim(ctx, insts, sc).map(|(i, t)| (i, Duration::from_nanos(t)))
        }
    }
}

fn initial_path(g: &DataflowGraph) -> (Vec<BlockId>, bool) {
    let c = chain(&g.cfg, Target::Block(g.cfg.entry()));
    let ended = c.last() == Some(&None);
    (c.into_iter().flatten().collect(), ended)
}

#[derive(Default)]
struct Collector {
    bags: BTreeMap<(String, usize), Vec<Value>>,
    choices: BTreeMap<(String, usize), Vec<crate::oracle::Choice>>,
    control: u64,
    data: u64,
    max_ids: usize,
    max_lens: usize,
    nodes: Vec<NodeStats>,
    events: Vec<Event>,
}

impl Collector {
    fn new(g: &DataflowGraph) -> Collector {
        Collector {
            nodes: g
                .nodes
                .iter()
                .map(|n| NodeStats {
                    name: n.name.clone(),
                    parallelism: n.parallelism,
                    bags: vec![0; n.parallelism],
                    builds: vec![0; n.parallelism],
                    drop_states: vec![0; n.parallelism],
                })
                .collect(),
            ..Collector::default()
        }
    }

    fn absorb(&mut self, g: &DataflowGraph, inst: &mut Instance, trace: bool) {
        let s = inst.stats();
        let ns = &mut self.nodes[inst.node];
        ns.bags[inst.idx] += s.bags;
        ns.builds[inst.idx] += s.builds;
        ns.drop_states[inst.idx] += s.drop_states;
        self.control += s.control_sent;
        self.data += s.data_sent;
        self.max_ids = self.max_ids.max(s.max_block_ids);
        self.max_lens = self.max_lens.max(s.max_path_lens);
        self.events.append(&mut inst.events);
        if trace {
            let name = &g.node(inst.node).name;
            for (pos, vals) in &inst.outputs {
                self.bags
                    .entry((name.clone(), *pos))
                    .or_default()
                    .extend(vals.iter().cloned());
            }
            for (pos, cs) in std::mem::take(&mut inst.choices) {
                self.choices.insert((name.clone(), pos), cs);
            }
        }
    }

    fn report(mut self, path: Vec<BlockId>, io: &IoEnv, trace: bool) -> RunReport {
        self.events.sort_by_key(|e| (e.t_ns, e.node, e.idx));
        let effects = io.outputs();
        let trace = trace.then(|| ExecutionTrace {
            path: path.clone(),
            bags: std::mem::take(&mut self.bags)
                .into_iter()
                .map(|(k, v)| (k, Bag::from_vec(v)))
                .collect(),
            choices: std::mem::take(&mut self.choices),
            effects: effects.clone(),
        });
        RunReport {
            trace,
            path,
            effects,
            jobs: 0,
            instantiations: 0,
            instances: 0,
            control_messages: self.control,
            data_messages: self.data,
            max_block_ids_per_message: self.max_ids,
            max_path_lens_per_message: self.max_lens,
            nodes: self.nodes,
            events: self.events,
            elapsed: Duration::ZERO,
            step_latencies: Vec::new(),
        }
    }
}

fn all_instances(
    ctx: &Arc<Ctx>,
    path: &[BlockId],
    ended: bool,
    start: usize,
    keep: bool,
) -> Vec<Instance> {
    let mut v = Vec::with_capacity(ctx.total);
    for n in &ctx.g.nodes {
        for i in 0..n.parallelism {
            v.push(Instance::new(
                ctx.clone(),
                n.id,
                i,
                path.to_vec(),
                ended,
                start,
                keep,
            ));
        }
    }
    v
}

fn run_single(
    g: Arc<DataflowGraph>,
    io: Arc<IoEnv>,
    delays: DelayPlan,
    cfg: &RunConfig,
) -> Result<RunReport> {
    let ctx = new_ctx(&g, &io, &delays, cfg);
    let (path, ended) = initial_path(&g);
    let insts = all_instances(&ctx, &path, ended, 1, false);
    let (mut insts, elapsed) = execute(&ctx, insts, cfg)?;
    let final_path = insts[0].path().to_vec();
    if let Some(other) = insts.iter().find(|i| i.path() != final_path.as_slice()) {
        return Err(Error::Internal(format!(
            "instances disagree on the path: {:?} vs {:?} at {}",
            final_path,
            other.path(),
            g.node(other.node).name
        )));
    }
    let mut col = Collector::new(&g);
    // A step is complete once every instance is done up to its last position.
    let ends = step_ends(&g.cfg, &final_path);
    let mut completed = vec![0u64; ends.len()];
    for inst in insts.iter_mut() {
        let mut k = 0;
        for &(done, t) in &inst.done_times {
            while k < ends.len() && ends[k] <= done {
                completed[k] = completed[k].max(t);
                k += 1;
            }
        }
        col.absorb(&g, inst, cfg.opts.trace);
    }
    let mut report = col.report(final_path, &io, cfg.opts.trace);
    report.jobs = 1;
    report.instantiations = g.nodes.len();
    report.instances = ctx.total;
    report.elapsed = elapsed;
    report.step_latencies = std::iter::once(0)
        .chain(completed)
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| Duration::from_nanos(w[1].saturating_sub(w[0])))
        .collect();
    Ok(report)
}

fn run_per_step(
    ssa: &SsaProgram,
    g: Arc<DataflowGraph>,
    io: Arc<IoEnv>,
    delays: DelayPlan,
    cfg: &RunConfig,
) -> Result<RunReport> {
    let started = Instant::now();
    let mut col = Collector::new(&g);
    // Earlier output partitions that later jobs may still read: node, instance, bags.
    let mut store: Store = g
        .nodes
        .iter()
        .map(|n| vec![Vec::new(); n.parallelism])
        .collect();
    let mut path: Vec<BlockId> = Vec::new();
    let mut next = chain(&g.cfg, Target::Block(g.cfg.entry()));
    let mut report_jobs = 0;
    let mut job_times: Vec<(usize, Duration)> = Vec::new();
    let mut elapsed_total = Duration::ZERO;
    let mut instances = 0;
    while next != [None] {
        let job_started = Instant::now();
        let start = path.len() + 1;
        let ended = next.last() == Some(&None);
        path.extend(next.iter().flatten());
        // Every job deploys the whole graph afresh, as a launch-per-step system would.
        let job_graph = Arc::new(build_dataflow(ssa, cfg.workers));
        if !cfg.job_setup.is_zero() && cfg.driver == Driver::Threaded {
            std::thread::sleep(cfg.job_setup);
        }
        let ctx = new_ctx(&job_graph, &io, &delays, cfg);
        instances = ctx.total;
        let mut insts = all_instances(&ctx, &path, true, start, true);
        for inst in insts.iter_mut() {
            inst.inject(&store[inst.node][inst.idx], start)?;
        }
        let (mut insts, elapsed) = execute(&ctx, insts, cfg)?;
        report_jobs += 1;
        let elapsed = match cfg.driver {
            Driver::Threaded => elapsed,
            Driver::Simulated(_) => elapsed + cfg.job_setup,
        };
        elapsed_total += elapsed;
        for inst in insts.iter_mut() {
            col.absorb(&g, inst, cfg.opts.trace);
            store[inst.node][inst.idx].append(&mut inst.outputs);
        }
        // A step costs the whole job launch, not just its run.
        job_times.push((
            path.len(),
            match cfg.driver {
                Driver::Threaded => job_started.elapsed(),
                Driver::Simulated(_) => elapsed,
            },
        ));
        if ended {
            break;
        }
        let last = *path.last().expect("non-empty path");
        let Terminator::Branch(t, f) = g.cfg.term(last) else {
            return Err(Error::Internal(format!(
                "segment ends at non-branching block {last}"
            )));
        };
        let c = g.cond_node(last).expect("condition node");
        let vals: Vec<Value> = store[c]
            .iter()
            .flat_map(|parts| parts.iter().filter(|(p, _)| *p == path.len()))
            .flat_map(|(_, v)| v.iter().cloned())
            .collect();
        next = chain(
            &g.cfg,
            if condition_value(&g.node(c).name, &vals)? {
                t
            } else {
                f
            },
        );
        prune(&g, &path, &mut store);
    }
    let mut report = col.report(path, &io, cfg.opts.trace);
    report.jobs = report_jobs;
    report.instantiations = report_jobs * g.nodes.len();
    report.instances = instances;
    report.elapsed = match cfg.driver {
        Driver::Threaded => started.elapsed(),
        Driver::Simulated(_) => elapsed_total,
    };
    let ends = step_ends(&g.cfg, &report.path);
    let mut steps = vec![Duration::ZERO; ends.len()];
    for (end, t) in job_times {
        let k = ends
            .partition_point(|&e| e < end)
            .min(steps.len().saturating_sub(1));
        if let Some(s) = steps.get_mut(k) {
            *s += t;
        }
    }
    report.step_latencies = steps;
    Ok(report)
}

/// Last position of every loop step of `path`: a step ends right before each visit
/// to a loop header, and at the end of the path.
pub fn step_ends(cfg: &CfgShape, path: &[BlockId]) -> Vec<usize> {
    let idoms = cfg.idoms();
    let headers: Vec<BlockId> = cfg
        .edges()
        .into_iter()
        .filter_map(|(b, t)| t.block().filter(|&h| cfg.dominates(&idoms, h, b)))
        .collect();
    let mut ends: Vec<usize> = (2..=path.len())
        .filter(|&p| headers.contains(&path[p - 1]))
        .map(|p| p - 1)
        .collect();
    if !path.is_empty() {
        ends.push(path.len());
    }
    ends
}

/// Drops stored bags that no later position can choose.
fn prune(g: &DataflowGraph, path: &[BlockId], store: &mut Store) {
    for (n, parts) in store.iter_mut().enumerate() {
        let outs = &g.node(n).outputs;
        for part in parts.iter_mut() {
            part.retain(|(l, _)| {
                outs.iter().any(|&e| {
                    let e = g.edge(e);
                    !path[*l..].iter().any(|&b| e.is_never(b))
                })
            });
        }
    }
}

/// Node ids that have a fixed delay in `cfg`.
pub fn delayed_nodes(g: &DataflowGraph, cfg: &RunConfig) -> Vec<NodeId> {
    cfg.delays
        .iter()
        .filter_map(|(n, _)| g.node_named(n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inputs;
    use crate::oracle::{diff_traces, run_sequential};
    use crate::programs;
    use crate::ssa::compile_source;

    fn check(src: &str, io: &IoEnv, cfg: &RunConfig) -> RunReport {
        let c = compile_source(src).unwrap();
        let want = run_sequential(&c.lifted, io, DEFAULT_BUDGET).unwrap();
        let got = run(&c.lifted, io, cfg).unwrap();
        let d = diff_traces(&want, got.trace.as_ref().unwrap());
        assert!(d.is_empty(), "{cfg:?}\n{d}");
        got
    }

    fn configs() -> Vec<RunConfig> {
        let mut v = Vec::new();
        for w in [1, 2, 4] {
            v.push(RunConfig::with_workers(w));
            v.push(RunConfig::simulated(w, w as u64, 5_000));
            v.push(RunConfig {
                mode: Mode::PerStepJobs,
                ..RunConfig::simulated(w, 3, 1_000)
            });
        }
        v
    }

    #[test]
    fn straight_and_diamond() {
        for cfg in configs() {
            check(programs::SSA_STRAIGHT, &IoEnv::in_memory(), &cfg);
            check(programs::SSA_DIAMOND, &IoEnv::in_memory(), &cfg);
        }
    }

    #[test]
    fn data_driven_branches() {
        for cfg in configs() {
            let r = check(
                programs::DATA_DRIVEN_BRANCHES,
                &inputs::data_driven_branches().env(),
                &cfg,
            );
            assert_eq!(r.path, vec![1, 2, 3, 5, 2, 4, 5]);
        }
    }

    #[test]
    fn nested_loops() {
        for cfg in configs() {
            check(
                &programs::nested_loops(3, 4),
                &inputs::nested_loops().env(),
                &cfg,
            );
        }
    }

    #[test]
    fn visit_count() {
        let size = inputs::VisitCountSize {
            days: 6,
            visits_per_day: 50,
            pages: 40,
        };
        for cfg in configs() {
            check(
                &programs::visit_count(6),
                &inputs::visit_count(size, 1).env(),
                &cfg,
            );
        }
    }

    #[test]
    fn pagerank() {
        for cfg in configs() {
            check(
                &programs::pagerank(2, 3),
                &inputs::pagerank(2, 12, 20, 5).env(),
                &cfg,
            );
        }
    }
}
