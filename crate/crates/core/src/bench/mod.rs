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

//! Benchmark harnesses and their CSV report.
//!
//! Every harness first checks its configurations against the sequential oracle at a
//! reduced size, then times each configuration `reps` times and reports medians.

use std::io::Write;
use std::time::Duration;

use crate::dataflow::build_dataflow;
use crate::error::{Error, Result};
use crate::inputs::{self, VisitCountSize};
use crate::oracle::{diff_traces, run_sequential, DEFAULT_BUDGET};
use crate::programs;
use crate::runtime::{overlap, run, Mode, RunConfig, RunReport};
use crate::ssa::{compile_source, SsaProgram};
use crate::transform::IoEnv;

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub params: String,
    /// Median over runs of the per-run median step latency.
    pub median_us: f64,
    /// Median over runs of the per-run 95th-percentile step latency.
    pub p95_us: f64,
    pub wallclock_ms: f64,
    pub runs: usize,
    pub instantiations: usize,
    pub control_messages: u64,
    pub builds: u64,
    pub drop_states: u64,
}

/// Median and 95th percentile in microseconds.
pub fn percentiles(samples: &[Duration]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mut v: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e6).collect();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
    (at(0.5), at(0.95))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.get(v.len() / 2).copied().unwrap_or(0.0)
}

/// Header of the benchmark CSV.
pub const CSV_COLUMNS: [&str; 11] = [
    "name",
    "params",
    "median_step_us",
    "p95_step_us",
    "wallclock_ms",
    "runs",
    "instantiations",
    "control_messages",
    "builds",
    "drop_states",
    "invocation",
];

/// Writes `rows` as CSV; `invocation` is recorded on every row.
pub fn write_csv<W: Write>(rows: &[BenchRow], invocation: &str, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Runtime(format!("csv: {e}"));
    out.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.name.clone(),
            r.params.clone(),
            format!("{:.1}", r.median_us),
            format!("{:.1}", r.p95_us),
            format!("{:.1}", r.wallclock_ms),
            r.runs.to_string(),
            r.instantiations.to_string(),
            r.control_messages.to_string(),
            r.builds.to_string(),
            r.drop_states.to_string(),
            invocation.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Runtime(format!("csv: {e}")))
}

/// Fails unless `cfg` reproduces the oracle's trace on `ssa`.
pub fn verify(ssa: &SsaProgram, io: &IoEnv, cfg: &RunConfig) -> Result<()> {
    let expected = run_sequential(ssa, io, DEFAULT_BUDGET)?;
    let mut cfg = cfg.clone();
    cfg.opts.trace = true;
    cfg.delays.clear();
    let got = run(ssa, io, &cfg)?.trace.expect("trace enabled");
    let d = diff_traces(&expected, &got);
    if d.is_empty() {
        Ok(())
    } else {
        Err(Error::Runtime(format!(
            "benchmark configuration differs from the oracle:\n{d}"
        )))
    }
}

/// Runs `cfg` `reps` times; the row carries medians and the last run's counters.
fn measure(
    name: &str,
    params: String,
    ssa: &SsaProgram,
    io: &IoEnv,
    cfg: &RunConfig,
    reps: usize,
) -> Result<(BenchRow, Vec<RunReport>)> {
    let mut reports = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        reports.push(run(ssa, io, cfg)?);
    }
    let stats: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| percentiles(&r.step_latencies))
        .collect();
    let last = reports.last().expect("at least one run");
    let row = BenchRow {
        name: name.to_string(),
        params,
        median_us: median(stats.iter().map(|s| s.0).collect()),
        p95_us: median(stats.iter().map(|s| s.1).collect()),
        wallclock_ms: median(
            reports
                .iter()
                .map(|r| r.elapsed.as_secs_f64() * 1e3)
                .collect(),
        ),
        runs: reports.len(),
        instantiations: last.instantiations,
        control_messages: last.control_messages,
        builds: last.nodes.iter().flat_map(|n| n.builds.iter()).sum(),
        drop_states: last.nodes.iter().flat_map(|n| n.drop_states.iter()).sum(),
    };
    Ok((row, reports))
}

fn quiet(workers: usize) -> RunConfig {
    let mut cfg = RunConfig::with_workers(workers);
    cfg.opts.trace = false;
    cfg
}

/// The counting loop that maps a small bag every step, run as one cyclic job and as
/// one job per step.
pub fn step_overhead(
    steps: u32,
    elements: usize,
    workers: usize,
    reps: usize,
) -> Result<Vec<BenchRow>> {
    let modes = [
        ("step-overhead/single-job", Mode::SingleJob),
        ("step-overhead/per-step", Mode::PerStepJobs),
    ];
    let small = compile_source(&programs::step_overhead(steps.min(10)))?;
    let small_io = inputs::step_overhead(elements.min(20)).env();
    for (_, mode) in modes {
        verify(
            &small.lifted,
            &small_io,
            &RunConfig {
                mode,
                ..quiet(workers)
            },
        )?;
    }
    let c = compile_source(&programs::step_overhead(steps))?;
    let io = inputs::step_overhead(elements).env();
    let params = format!("steps={steps} elements={elements} workers={workers}");
    let mut rows = Vec::new();
    for (name, mode) in modes {
        let cfg = RunConfig {
            mode,
            ..quiet(workers)
        };
        rows.push(measure(name, params.clone(), &c.lifted, &io, &cfg, reps)?.0);
    }
    Ok(rows)
}

/// Small Visit Count inputs used to check benchmark configurations.
fn small_visit_count() -> (SsaProgram, IoEnv) {
    let size = VisitCountSize {
        days: 4,
        visits_per_day: 60,
        pages: 40,
    };
    let c = compile_source(&programs::visit_count(size.days)).expect("visit count compiles");
    (c.lifted, inputs::visit_count(size, 1).env())
}

/// Visit Count with loop-invariant hoisting on and off.
pub fn hoisting(size: VisitCountSize, workers: usize, reps: usize) -> Result<Vec<BenchRow>> {
    let (small, small_io) = small_visit_count();
    for hoist in [true, false] {
        let mut cfg = quiet(workers);
        cfg.opts.hoist = hoist;
        verify(&small, &small_io, &cfg)?;
    }
    let c = compile_source(&programs::visit_count(size.days))?;
    let io = inputs::visit_count(size, 1).env();
    let mut rows = Vec::new();
    for hoist in [true, false] {
        let mut cfg = quiet(workers);
        cfg.opts.hoist = hoist;
        let params = format!(
            "days={} visits={} pages={} workers={workers} hoist={hoist}",
            size.days, size.visits_per_day, size.pages
        );
        rows.push(measure("hoisting", params, &c.lifted, &io, &cfg, reps)?.0);
    }
    Ok(rows)
}

/// Node delayed by the pipelining benchmark: the diff computation of Visit Count.
pub const PIPELINE_DELAY_NODE: &str = "diffs_1";

/// Outcome of the pipelining benchmark for one barrier setting.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub barrier: bool,
    /// Overlap count of every run.
    pub overlaps: Vec<usize>,
    pub row: BenchRow,
    pub reports: Vec<RunReport>,
}

/// Visit Count with a delay on every bag of the diff branch, with and without a
/// per-step barrier. The overlap of a run counts bag opens at later steps that
/// happen while a delayed bag is open.
pub fn pipelining(
    size: VisitCountSize,
    delay: Duration,
    workers: usize,
    reps: usize,
) -> Result<Vec<PipelineRun>> {
    let (small, small_io) = small_visit_count();
    for barrier in [false, true] {
        let mut cfg = quiet(workers);
        cfg.opts.barrier = barrier;
        verify(&small, &small_io, &cfg)?;
    }
    let c = compile_source(&programs::visit_count(size.days))?;
    let io = inputs::visit_count(size, 1).env();
    let delayed = build_dataflow(&c.lifted, workers)
        .node_named(PIPELINE_DELAY_NODE)
        .ok_or_else(|| Error::Internal(format!("no node {PIPELINE_DELAY_NODE}")))?;
    let mut runs = Vec::new();
    for barrier in [false, true] {
        let mut cfg = quiet(workers);
        cfg.opts.trace = true;
        cfg.opts.barrier = barrier;
        cfg.opts.events = true;
        cfg.delays = vec![(PIPELINE_DELAY_NODE.to_string(), delay.as_nanos() as u64)];
        let params = format!(
            "days={} visits={} pages={} delay_ms={} workers={workers} barrier={barrier}",
            size.days,
            size.visits_per_day,
            size.pages,
            delay.as_millis()
        );
        let (mut row, reports) = measure("pipelining", params, &c.lifted, &io, &cfg, reps)?;
        let overlaps: Vec<usize> = reports
            .iter()
            .map(|r| overlap(&r.events, delayed))
            .collect();
        let mid = median(overlaps.iter().map(|&o| o as f64).collect());
        row.params.push_str(&format!(" overlap={mid}"));
        runs.push(PipelineRun {
            barrier,
            overlaps,
            row,
            reports,
        });
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_of_known_samples() {
        let v: Vec<Duration> = (1..=100).map(Duration::from_micros).collect();
        let (m, p) = percentiles(&v);
        assert!((m - 51.0).abs() < 1e-9 || (m - 50.0).abs() < 1e-9);
        assert!((p - 95.0).abs() <= 1.0);
    }

    #[test]
    fn csv_has_stable_header_and_invocation() {
        let row = BenchRow {
            name: "x".into(),
            params: "a=1".into(),
            median_us: 1.0,
            p95_us: 2.0,
            wallclock_ms: 3.0,
            runs: 3,
            instantiations: 4,
            control_messages: 5,
            builds: 6,
            drop_states: 7,
        };
        let mut out = Vec::new();
        write_csv(&[row], "laby bench step-overhead", &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "x,a=1,1.0,2.0,3.0,3,4,5,6,7,laby bench step-overhead"
        );
    }

    #[test]
    fn step_overhead_counts_instantiations() {
        let rows = step_overhead(5, 10, 2, 1).unwrap();
        assert_eq!(rows[1].instantiations, 5 * rows[0].instantiations);
    }
}
