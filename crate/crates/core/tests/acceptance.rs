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

//! Acceptance checks. Prints one `[PASS]` or `[FAIL]` line per criterion and exits
//! nonzero when a correctness check fails. Timing thresholds that depend on the
//! host's core count are reported but only enforced with `LABY_STRICT_PERF=1`.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use laby_core::bench;
use laby_core::dataflow::build_dataflow;
use laby_core::fuzz;
use laby_core::inputs::{self, VisitCountSize};
use laby_core::oracle::{diff_traces, run_sequential, ExecutionTrace, DEFAULT_BUDGET};
use laby_core::programs;
use laby_core::runtime::{run, RandomDelays, RunConfig, RunReport};
use laby_core::ssa::{compile_source, Compiled};
use laby_core::transform::IoEnv;
use laby_core::value::Value;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type R<T> = Result<T, String>;
type Criterion = (&'static str, fn() -> R<Verdict>);

/// Outcome of one criterion.
#[derive(Default)]
struct Verdict {
    /// Correctness checks.
    checks: Vec<(String, bool)>,
    /// Host-dependent timing checks.
    perf: Vec<(String, bool)>,
}

impl Verdict {
    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn perf(&mut self, what: impl Into<String>, ok: bool) {
        self.perf.push((what.into(), ok));
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn compile(src: &str) -> R<Compiled> {
    compile_source(src).map_err(err)
}

fn oracle(c: &Compiled, io: &IoEnv) -> R<ExecutionTrace> {
    run_sequential(&c.lifted, io, DEFAULT_BUDGET).map_err(err)
}

fn run_cfg(c: &Compiled, io: &IoEnv, cfg: &RunConfig) -> R<RunReport> {
    run(&c.lifted, io, cfg).map_err(err)
}

fn golden(name: &str) -> R<String> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))
}

/// SSA of the straight-line and diamond programs, the Visit Count structure, and a
/// byte-stable dump through the binary.
fn c1() -> R<Verdict> {
    let mut v = Verdict::default();
    let start = Instant::now();
    for name in [
        "ssa-straight",
        "ssa-diamond",
        "visit-count",
        "data-driven-branches",
        "nested-loops",
    ] {
        let file = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/{name}.laby"));
        let dump = |_: ()| {
            Command::new(env!("CARGO_BIN_EXE_laby"))
                .args(["compile", file.to_str().unwrap(), "--dump-ssa"])
                .output()
                .map_err(err)
        };
        let (a, b) = (dump(())?, dump(())?);
        let want = golden(&format!("{name}.ssa"))?;
        v.check(
            format!("{name} dump equals golden"),
            a.status.success() && a.stdout == want.as_bytes(),
        );
        v.check(format!("{name} dump byte-stable"), a.stdout == b.stdout);
    }
    let straight = laby_core::ssa::dump_ssa(&compile(&golden("ssa-straight.laby")?)?.ssa);
    let lines = [
        "a_1: Int = 0",
        "b_1: Int = a_1 + 1",
        "a_2: Int = 5",
        "c_1: Int = a_2 + 1",
    ];
    v.check(
        "straight-line renaming",
        lines.iter().all(|l| straight.contains(l)),
    );
    let diamond = laby_core::ssa::dump_ssa(&compile(&golden("ssa-diamond.laby")?)?.ssa);
    v.check(
        "diamond phi",
        diamond.contains("a_2: Int = a_1 + 1")
            && diamond.contains("a_3: Int = a_1 + 2")
            && diamond.contains("a_4: Int = phi(a_2 @2, a_3 @3)")
            && diamond.contains("b_1: Int = a_4 + 5"),
    );
    let vc = golden("visit-count.ssa")?;
    v.check(
        "visit count has 4 blocks",
        vc.lines().filter(|l| l.starts_with("block ")).count() == 4,
    );
    v.check("visit count has 2 phis", vc.matches("= phi(").count() == 2);
    v.check(
        "visit count branches on ifCond and exitCond",
        vc.contains("branch ifCond_1 ? 3 : 4") && vc.contains("branch exitCond_1 ? 2 : exit"),
    );
    v.check("under 1 s", start.elapsed() < Duration::from_secs(1));
    Ok(v)
}

/// Data-driven branches under adversarial delays.
fn c2() -> R<Verdict> {
    let mut v = Verdict::default();
    let start = Instant::now();
    let c = compile(&programs::catalog()[3].1)?;
    let io = inputs::data_driven_branches().env();
    let expected = oracle(&c, &io)?;
    v.check(
        "path is P A B D A C D",
        expected.path == [1, 2, 3, 5, 2, 4, 5],
    );
    let mut failures = 0;
    for workers in [1, 4] {
        for plan in 0..50u64 {
            let mut cfg = RunConfig::with_workers(workers);
            cfg.random_delays = Some(RandomDelays {
                seed: plan,
                max_ns: 2_000_000,
                permille: 300,
            });
            let t = run_cfg(&c, &io, &cfg)?.trace.expect("trace");
            if !diff_traces(&expected, &t).is_empty() {
                failures += 1;
            }
            let sim = RunConfig::simulated(workers, plan, 200_000);
            let t = run_cfg(&c, &io, &sim)?.trace.expect("trace");
            if !diff_traces(&expected, &t).is_empty() {
                failures += 1;
            }
        }
    }
    v.check(
        format!("200 delayed or reordered runs, {failures} diffs"),
        failures == 0,
    );
    v.check("under 30 s", start.elapsed() < Duration::from_secs(30));
    Ok(v)
}

/// Nested loops: the outer bag is reused by every inner step.
fn c3() -> R<Verdict> {
    let mut v = Verdict::default();
    let c = compile(&programs::nested_loops(3, 4))?;
    let io = inputs::nested_loops().env();
    let expected = oracle(&c, &io)?;
    for workers in [1, 3] {
        let t = run_cfg(&c, &io, &RunConfig::with_workers(workers))?
            .trace
            .expect("trace");
        v.check(
            format!("workers={workers} trace equals oracle"),
            diff_traces(&expected, &t).is_empty(),
        );
        let mut uses: BTreeMap<usize, usize> = BTreeMap::new();
        for ((node, _), choices) in &t.choices {
            if node == "z_1" {
                for ch in choices.iter().filter(|ch| ch.src == "x_1") {
                    *uses.entry(ch.src_len).or_default() += 1;
                }
            }
        }
        let xs = t.node_order("x_1");
        v.check(
            format!("workers={workers} each of 3 x bags feeds 4 z bags"),
            xs.len() == 3 && xs.iter().all(|l| uses.get(l) == Some(&4)),
        );
    }
    Ok(v)
}

/// Random programs against the oracle, with discarding on and off.
fn c4() -> R<Verdict> {
    let mut v = Verdict::default();
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut runs = 0;
    for seed in 0..500u64 {
        for workers in [1, 2, 4] {
            for schedule in 0..3u64 {
                runs += 1;
                if let Some(f) = fuzz::check(seed, workers, schedule).map_err(err)? {
                    failures.push(f);
                }
            }
        }
    }
    if let Some(f) = failures.first() {
        eprintln!(
            "program {} workers {} schedule {}: {}",
            f.program, f.workers, f.schedule, f.message
        );
    }
    v.check(
        format!("{runs} runs, {} failures", failures.len()),
        failures.is_empty(),
    );
    v.check("under 10 min", start.elapsed() < Duration::from_secs(600));
    Ok(v)
}

/// One cyclic job against one job per step.
fn c5() -> R<Verdict> {
    let mut v = Verdict::default();
    let rows = bench::step_overhead(1000, 200, 4, 3).map_err(err)?;
    let nodes = build_dataflow(&compile(&programs::step_overhead(1000))?.lifted, 4)
        .nodes
        .len();
    let (single, per_step) = (&rows[0], &rows[1]);
    v.check(
        format!(
            "instantiations {} and {} for {nodes} nodes",
            single.instantiations, per_step.instantiations
        ),
        single.instantiations == nodes && per_step.instantiations == 1000 * nodes,
    );
    let ratio = per_step.median_us / single.median_us.max(1e-9);
    v.perf(
        format!(
            "median step {:.1} us vs {:.1} us per-step, {ratio:.2}x (need 5x)",
            single.median_us, per_step.median_us
        ),
        ratio >= 5.0,
    );
    Ok(v)
}

/// Control traffic is linear in path length and instances, and messages stay small.
fn c6() -> R<Verdict> {
    const C: u64 = 1;
    let mut v = Verdict::default();
    let vc = VisitCountSize {
        days: 20,
        visits_per_day: 200,
        pages: 100,
    };
    let cases = [
        (
            "visit-count",
            programs::visit_count(20),
            inputs::visit_count(vc, 1),
        ),
        (
            "nested-loops",
            programs::nested_loops(3, 4),
            inputs::nested_loops(),
        ),
        (
            "pagerank",
            programs::pagerank(3, 10),
            inputs::pagerank(3, 50, 150, 1),
        ),
    ];
    for (name, src, set) in cases {
        let c = compile(&src)?;
        for workers in [1, 4] {
            let r = run_cfg(&c, &set.env(), &RunConfig::with_workers(workers))?;
            let bound = C * (r.path.len() * r.instances) as u64;
            v.check(
                format!(
                    "{name} w={workers}: {} control messages <= {bound}",
                    r.control_messages
                ),
                r.control_messages <= bound,
            );
            v.check(
                format!(
                    "{name} w={workers}: {} block ids, {} path lengths per message",
                    r.max_block_ids_per_message, r.max_path_lens_per_message
                ),
                r.max_block_ids_per_message <= 2 && r.max_path_lens_per_message <= 1,
            );
        }
    }
    Ok(v)
}

/// Loop-invariant join state is built once and kept; the inner-loop join of the
/// nested loops drops its outer state once per outer step.
fn c7() -> R<Verdict> {
    let mut v = Verdict::default();
    let size = VisitCountSize {
        days: 20,
        visits_per_day: 300,
        pages: 200,
    };
    let c = compile(&programs::visit_count(size.days))?;
    let io = inputs::visit_count(size, 2).env();
    let g = build_dataflow(&c.lifted, 4);
    let hoisted: Vec<&str> = g
        .nodes
        .iter()
        .filter(|n| n.kind.can_retain() && g.edge(n.inputs[0]).reuse_possible)
        .map(|n| n.name.as_str())
        .collect();
    v.check(
        format!("hoisted joins {hoisted:?}"),
        hoisted == ["joinedWithAttrs_1"],
    );
    let on = run_cfg(&c, &io, &RunConfig::with_workers(4))?;
    for name in &hoisted {
        let n = on.node(name).ok_or("missing node")?;
        v.check(
            format!("{name} builds {:?}", n.builds),
            n.builds.iter().all(|&b| b == 1),
        );
        v.check(
            format!("{name} drops {:?}", n.drop_states),
            n.drop_states.iter().all(|&d| d == 0),
        );
    }
    let mut cfg = RunConfig::with_workers(4);
    cfg.opts.hoist = false;
    let off = run_cfg(&c, &io, &cfg)?;
    v.check("hoist on and off traces identical", on.trace == off.trace);
    v.check(
        "hoist on trace equals oracle",
        diff_traces(&oracle(&c, &io)?, on.trace.as_ref().unwrap()).is_empty(),
    );

    let c = compile(&programs::nested_loops(3, 4))?;
    let io = inputs::nested_loops().env();
    let r = run_cfg(&c, &io, &RunConfig::with_workers(4))?;
    let z = r.node("z_1").ok_or("missing z_1")?;
    v.check(
        format!("nested z drops {:?}", z.drop_states),
        z.drop_states.iter().all(|&d| d == 3),
    );
    v.check(
        format!("nested z builds {:?}", z.builds),
        z.builds.iter().all(|&b| b == 3),
    );
    Ok(v)
}

/// Steps overlap without a barrier and the outputs do not change.
fn c8() -> R<Verdict> {
    let mut v = Verdict::default();
    let size = VisitCountSize {
        days: 6,
        visits_per_day: 5000,
        pages: 5000,
    };
    let runs = bench::pipelining(size, Duration::from_millis(50), 4, 3).map_err(err)?;
    let (free, barrier) = (&runs[0], &runs[1]);
    v.check(
        format!("overlap without barrier {:?}", free.overlaps),
        free.overlaps.iter().all(|&o| o > 0),
    );
    v.check(
        format!("overlap with barrier {:?}", barrier.overlaps),
        barrier.overlaps.iter().all(|&o| o == 0),
    );
    let traces: Vec<_> = runs
        .iter()
        .flat_map(|r| r.reports.iter().map(|x| &x.trace))
        .collect();
    v.check("outputs identical", traces.windows(2).all(|w| w[0] == w[1]));
    v.perf(
        format!(
            "wallclock {:.1} ms without barrier, {:.1} ms with",
            free.row.wallclock_ms, barrier.row.wallclock_ms
        ),
        free.row.wallclock_ms < barrier.row.wallclock_ms,
    );
    Ok(v)
}

/// Operators against straightforward reference implementations.
fn c9() -> R<Verdict> {
    let mut v = Verdict::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut join, mut rbk, mut cross) = (0, 0, 0);
    for i in 0..1000 {
        let workers = 1 + i % 4;
        let (l, r) = (random_pairs(&mut rng, 20, 6), random_pairs(&mut rng, 20, 6));
        join += usize::from(
            run_node(JOIN_SRC, "j_1", workers, &[l.clone(), r.clone()]) != nested_loop_join(&l, &r),
        );
        let l = random_pairs(&mut rng, 40, 8);
        rbk += usize::from(
            run_node(REDUCE_BY_KEY_SRC, "s_1", workers, std::slice::from_ref(&l))
                != grouped_sum(&l),
        );
        let (l, r) = (random_pairs(&mut rng, 12, 4), random_ints(&mut rng, 12));
        cross += usize::from(
            run_node(CROSS_SRC, "x_1", workers, &[l.clone(), r.clone()]) != cartesian(&l, &r),
        );
    }
    v.check(format!("join mismatches {join}/1000"), join == 0);
    v.check(format!("reduceByKey mismatches {rbk}/1000"), rbk == 0);
    v.check(format!("cross mismatches {cross}/1000"), cross == 0);
    Ok(v)
}

/// PageRank over three days of ten steps.
fn c10() -> R<Verdict> {
    let mut v = Verdict::default();
    let c = compile(&programs::pagerank(3, 10))?;
    let io = inputs::pagerank(3, 200, 800, 5).env();
    let expected = oracle(&c, &io)?;
    let got = run_cfg(&c, &io, &RunConfig::with_workers(4))?
        .trace
        .expect("trace");
    v.check(
        "trace equals oracle",
        diff_traces(&expected, &got).is_empty(),
    );
    let sums: Vec<f64> = got
        .bags
        .iter()
        .filter(|((n, _), _)| n == "ranks_3")
        .map(|(_, b)| {
            b.iter()
                .map(|r| r.columns()[1].as_float().unwrap_or(f64::NAN))
                .sum()
        })
        .collect();
    let worst = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    v.check(
        format!("{} inner steps, worst |sum - 1| = {worst:.1e}", sums.len()),
        sums.len() == 30 && worst <= 1e-9,
    );
    let outputs: Vec<&Value> = got.effects.values().flat_map(|b| b.iter()).collect();
    v.check(
        "three rank files written",
        got.effects.len() == 3 && !outputs.is_empty(),
    );
    Ok(v)
}

fn main() -> ExitCode {
    let strict = std::env::var("LABY_STRICT_PERF").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 10] = [
        ("C1 ssa goldens", c1),
        ("C2 data-driven branches under delays", c2),
        ("C3 nested loops reuse outer bags", c3),
        ("C4 random programs match the oracle", c4),
        ("C5 per-step overhead", c5),
        ("C6 control traffic", c6),
        ("C7 hoisted join state", c7),
        ("C8 pipelining across steps", c8),
        ("C9 operator equivalence", c9),
        ("C10 pagerank", c10),
    ];
    let filter = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = false;
    for (name, f) in criteria {
        if filter.as_ref().is_some_and(|p| !name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        let (ok, perf_ok, detail) = match outcome {
            Ok(v) => {
                let ok = v.checks.iter().all(|c| c.1);
                let perf_ok = v.perf.iter().all(|c| c.1);
                let detail: Vec<String> = v
                    .checks
                    .iter()
                    .chain(v.perf.iter())
                    .map(|(w, p)| format!("{}{w}", if *p { "" } else { "FAILED " }))
                    .collect();
                (ok, perf_ok, detail.join("; "))
            }
            Err(e) => (false, true, format!("error: {e}")),
        };
        let pass = ok && perf_ok;
        let note = if ok && !perf_ok && !strict {
            " (timing not enforced; set LABY_STRICT_PERF=1)"
        } else {
            ""
        };
        println!(
            "[{}] {name} ({secs:.1} s): {detail}{note}",
            if pass { "PASS" } else { "FAIL" }
        );
        failed |= !ok || (!perf_ok && strict);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
