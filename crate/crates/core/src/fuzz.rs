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

//! Random well-typed, terminating programs for differential testing.
//!
//! Every program reads `pairs` (key-value pairs with small keys) and `nums`, keeps a
//! fixed pool of bag and scalar variables assigned up front, and only reassigns them.
//! Loops run a fresh counter up to a small bound, values stay below 1000 and every
//! `writeFile` gets a unique name from a global counter.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::inputs::InputSet;
use crate::oracle::{diff_traces, interpret, run_sequential, Assignments, DEFAULT_BUDGET};
use crate::runtime::{run, RunConfig};
use crate::ssa::compile_source;

const BAGS: usize = 4;
const SCALARS: usize = 2;

/// Size knobs of generated programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    /// Statements per block, at most.
    pub max_stmts: usize,
    /// Control-flow nesting, at most.
    pub max_depth: usize,
    /// Loop bound, at most.
    pub max_iters: u32,
}

impl Default for FuzzConfig {
    fn default() -> FuzzConfig {
        FuzzConfig {
            max_stmts: 4,
            max_depth: 2,
            max_iters: 3,
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: FuzzConfig,
    out: String,
    fresh: usize,
}

impl Gen {
    fn line(&mut self, indent: usize, s: &str) {
        for _ in 0..indent {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn bag(&mut self) -> String {
        format!("b{}", self.rng.gen_range(0..BAGS))
    }

    fn scalar(&mut self) -> String {
        format!("s{}", self.rng.gen_range(0..SCALARS))
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn small(&mut self) -> i64 {
        self.rng.gen_range(1..10)
    }

    fn bag_expr(&mut self) -> String {
        let src = self.bag();
        let k = self.small();
        let m = self.rng.gen_range(2..5);
        match self.rng.gen_range(0..8) {
            0 => format!("{src}.map(p => (p.0, (p.1 + {k}) % 1000))"),
            1 => format!("{src}.map(p => ((p.0 + {k}) % 8, p.1))"),
            2 => format!("{src}.filter(p => p.1 % {m} != 0)"),
            3 => format!("{src}.reduceByKey(p => (p.0 + p.1) % 1000)"),
            4 => {
                let other = self.bag();
                format!(
                    "{src}.reduceByKey(p => (p.0 + p.1) % 1000).join({other}.reduceByKey(p => (p.0 * p.1) % 997)).map(t => (t.0, (t.1 + t.2) % 1000))"
                )
            }
            5 => {
                let s = self.scalar();
                format!("{src}.cross(singletonBag({s})).map(t => (t.0, (t.1 + t.2) % 1000))")
            }
            6 => format!(
                "{src}.map(p => p.1).reduce(p => (p.0 + p.1) % 1000).map(v => ({k} % 8, v))"
            ),
            _ => format!("nums.map(v => (v % 8, (v * {k}) % 1000))"),
        }
    }

    fn scalar_expr(&mut self) -> String {
        let s = self.scalar();
        let k = self.small();
        match self.rng.gen_range(0..3) {
            0 => format!("({s} + {k}) % 1000"),
            1 => format!("{}.count()", self.bag()),
            _ => format!("({s} * 3) % 1000"),
        }
    }

    fn condition(&mut self) -> String {
        let s = self.scalar();
        let m = self.rng.gen_range(2..4);
        match self.rng.gen_range(0..2) {
            0 => format!("{s} % {m} == 0"),
            _ => format!("{s} > {}", self.rng.gen_range(0..20)),
        }
    }

    fn block(&mut self, indent: usize, depth: usize) {
        let n = self.rng.gen_range(1..=self.cfg.max_stmts);
        for _ in 0..n {
            self.stmt(indent, depth);
        }
    }

    fn stmt(&mut self, indent: usize, depth: usize) {
        let nested = depth < self.cfg.max_depth;
        match self.rng.gen_range(0..10) {
            0..=3 => {
                let (b, e) = (self.bag(), self.bag_expr());
                self.line(indent, &format!("{b} = {e}"));
            }
            4 => {
                let (s, e) = (self.scalar(), self.scalar_expr());
                self.line(indent, &format!("{s} = {e}"));
            }
            5 => {
                let b = self.bag();
                self.line(indent, "w = w + 1");
                self.line(indent, &format!("{b}.writeFile(\"out\" + w)"));
            }
            6 | 7 if nested => {
                let c = self.fresh("c");
                let e = self.condition();
                self.line(indent, &format!("{c} = {e}"));
                self.line(indent, &format!("if ({c}) {{"));
                self.block(indent + 1, depth + 1);
                if self.rng.gen_bool(0.5) {
                    self.line(indent, "} else {");
                    self.block(indent + 1, depth + 1);
                }
                self.line(indent, "}");
            }
            8 | 9 if nested => {
                let (i, c) = (self.fresh("i"), self.fresh("c"));
                let bound = self.rng.gen_range(1..=self.cfg.max_iters);
                self.line(indent, &format!("{i} = 0"));
                if self.rng.gen_bool(0.5) {
                    self.line(indent, "do {");
                    self.block(indent + 1, depth + 1);
                    self.line(indent + 1, &format!("{i} = {i} + 1"));
                    self.line(indent + 1, &format!("{c} = {i} < {bound}"));
                    self.line(indent, &format!("}} while ({c})"));
                } else {
                    self.line(indent, &format!("{c} = {i} < {bound}"));
                    self.line(indent, &format!("while ({c}) {{"));
                    self.block(indent + 1, depth + 1);
                    self.line(indent + 1, &format!("{i} = {i} + 1"));
                    self.line(indent + 1, &format!("{c} = {i} < {bound}"));
                    self.line(indent, "}");
                }
            }
            _ => {
                let (b, e) = (self.bag(), self.bag_expr());
                self.line(indent, &format!("{b} = {e}"));
            }
        }
    }
}

/// A random program for `seed`.
pub fn program(seed: u64, cfg: FuzzConfig) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        out: String::new(),
        fresh: 0,
    };
    g.line(0, "pairs = readFile<(Int, Int)>(\"pairs\")");
    g.line(0, "nums = readFile<Int>(\"nums\")");
    g.line(0, "w = 0");
    for i in 0..SCALARS {
        let k = g.small();
        g.line(0, &format!("s{i} = {k}"));
    }
    for i in 0..BAGS {
        let k = g.small();
        g.line(
            0,
            &format!("b{i} = pairs.map(p => (p.0, (p.1 + {k}) % 1000))"),
        );
    }
    g.block(0, 0);
    let b = g.bag();
    g.line(0, &format!("{b}.writeFile(\"final\")"));
    g.out
}

/// Inputs read by every fuzz program.
pub fn inputs(seed: u64) -> InputSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut pairs = String::new();
    for _ in 0..rng.gen_range(5..30) {
        writeln!(pairs, "{},{}", rng.gen_range(0..8), rng.gen_range(0..100)).unwrap();
    }
    let mut nums: Vec<i64> = (0..rng.gen_range(3..20))
        .map(|_| rng.gen_range(0..100))
        .collect();
    nums.shuffle(&mut rng);
    let nums = nums.iter().map(|n| format!("{n}\n")).collect();
    InputSet {
        files: vec![("pairs".to_string(), pairs), ("nums".to_string(), nums)],
    }
}

/// Result of checking one program under one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzFailure {
    pub program: u64,
    pub workers: usize,
    pub schedule: u64,
    pub message: String,
}

/// Runs program `seed` under the simulated driver with `workers` and schedule seed
/// `schedule`, with discarding on and off, and compares both traces with the
/// sequential oracle and with each other. The oracle itself is checked against the
/// direct interpreter.
pub fn check(seed: u64, workers: usize, schedule: u64) -> Result<Option<FuzzFailure>> {
    let src = program(seed, FuzzConfig::default());
    let c = compile_source(&src)?;
    let io = inputs(seed).env();
    let expected = run_sequential(&c.lifted, &io, DEFAULT_BUDGET)?;
    let fail = |m: String| {
        Ok(Some(FuzzFailure {
            program: seed,
            workers,
            schedule,
            message: m,
        }))
    };
    let direct = interpret(&c.typed, &io.fresh(), DEFAULT_BUDGET)?;
    let via_dataflow = Assignments::from_trace(&expected, &c.lifted);
    let d = direct.diff(&via_dataflow);
    if !d.is_empty() {
        return fail(format!(
            "interpreter and sequential oracle disagree:\n{}",
            d.join("\n")
        ));
    }
    let mut traces = Vec::new();
    for discard in [true, false] {
        let mut cfg = RunConfig::simulated(workers, schedule, 20_000);
        cfg.opts.discard = discard;
        let r = match run(&c.lifted, &io, &cfg) {
            Ok(r) => r,
            Err(e) => return fail(format!("discard={discard}: {e}")),
        };
        let t = r.trace.expect("trace enabled");
        let d = diff_traces(&expected, &t);
        if !d.is_empty() {
            return fail(format!("discard={discard}:\n{d}"));
        }
        traces.push(t);
    }
    if traces[0] != traces[1] {
        return fail(format!(
            "discard on/off traces differ:\n{}",
            diff_traces(&traces[1], &traces[0])
        ));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn programs_compile_and_terminate() {
        for seed in 0..200 {
            let src = program(seed, FuzzConfig::default());
            let c = compile_source(&src).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
            let io = inputs(seed).env();
            interpret(&c.typed, &io, DEFAULT_BUDGET)
                .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            program(9, FuzzConfig::default()),
            program(9, FuzzConfig::default())
        );
        assert_ne!(
            program(9, FuzzConfig::default()),
            program(10, FuzzConfig::default())
        );
    }
}
