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

//! Synthetic input files for the reference programs.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::transform::IoEnv;

/// Named input files with their text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputSet {
    pub files: Vec<(String, String)>,
}

impl InputSet {
    pub fn env(&self) -> IoEnv {
        let mut io = IoEnv::in_memory();
        for (n, t) in &self.files {
            io.add_file(n, t.clone());
        }
        io
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.to_path_buf(), e))?;
        for (n, t) in &self.files {
            let p = dir.join(n);
            std::fs::write(&p, t).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }

    fn add(&mut self, name: impl Into<String>, lines: impl IntoIterator<Item = String>) {
        let mut text = String::new();
        for l in lines {
            text.push_str(&l);
            text.push('\n');
        }
        self.files.push((name.into(), text));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitCountSize {
    pub days: u32,
    pub visits_per_day: usize,
    pub pages: usize,
}

impl VisitCountSize {
    /// Scale 1 is 100 days of 10,000 visits over 50,000 pages.
    pub fn scaled(scale: f64) -> VisitCountSize {
        VisitCountSize {
            days: 100,
            visits_per_day: ((10_000.0 * scale) as usize).max(1),
            pages: ((50_000.0 * scale) as usize).max(1),
        }
    }
}

/// `pageAttributes` as `(page, type)` and one `pageVisitLog<day>` of page ids per day.
pub fn visit_count(size: VisitCountSize, seed: u64) -> InputSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = InputSet::default();
    let attrs: Vec<String> = (0..size.pages)
        .map(|p| format!("{p},{}", rng.gen_range(0..2)))
        .collect();
    set.add("pageAttributes", attrs);
    for d in 1..=size.days {
        let visits: Vec<String> = (0..size.visits_per_day)
            .map(|_| rng.gen_range(0..size.pages).to_string())
            .collect();
        set.add(format!("pageVisitLog{d}"), visits);
    }
    set
}

/// One `transitions<day>` file per day: a ring over all nodes plus random edges, so
/// every node has incoming and outgoing links.
pub fn pagerank(days: u32, nodes: usize, extra_edges: usize, seed: u64) -> InputSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = InputSet::default();
    for d in 1..=days {
        let mut lines: Vec<String> = (0..nodes)
            .map(|i| format!("{i},{}", (i + 1) % nodes))
            .collect();
        for _ in 0..extra_edges {
            let a = rng.gen_range(0..nodes);
            let mut b = rng.gen_range(0..nodes);
            if b == a {
                b = (a + 1 + rng.gen_range(0..nodes.max(2) - 1)) % nodes;
            }
            lines.push(format!("{a},{b}"));
        }
        set.add(format!("transitions{d}"), lines);
    }
    set
}

/// `input` holding `values`.
pub fn ints(name: &str, values: &[i64]) -> InputSet {
    let mut set = InputSet::default();
    set.add(name, values.iter().map(i64::to_string));
    set
}

/// `input` for the data-driven branch program: contains 0 but not 1.
pub fn data_driven_branches() -> InputSet {
    ints("input", &[0, 2, 3, 4, 5, 6, 8])
}

/// `input` for the nested-loop program.
pub fn nested_loops() -> InputSet {
    ints("input", &(0..12).collect::<Vec<_>>())
}

/// `bag` for the step-overhead loop.
pub fn step_overhead(elements: usize) -> InputSet {
    ints("bag", &(0..elements as i64).collect::<Vec<_>>())
}

/// Inputs for each program of [`crate::programs::catalog`], keyed by name.
pub fn for_program(name: &str, seed: u64) -> Option<InputSet> {
    Some(match name {
        "ssa-straight" | "ssa-diamond" => InputSet::default(),
        "visit-count" => visit_count(
            VisitCountSize {
                days: 365,
                visits_per_day: 200,
                pages: 500,
            },
            seed,
        ),
        "data-driven-branches" => data_driven_branches(),
        "nested-loops" => nested_loops(),
        "step-overhead" => step_overhead(200),
        "pagerank" => pagerank(3, 50, 150, seed),
        _ => return None,
    })
}

/// Inputs for catalog program `name` at `scale`; scale 1 is the full desk size.
pub fn generate(name: &str, scale: f64, seed: u64) -> Option<InputSet> {
    Some(match name {
        "visit-count" => visit_count(VisitCountSize::scaled(scale), seed),
        "pagerank" => {
            let nodes = ((1000.0 * scale) as usize).max(2);
            pagerank(3, nodes, 4 * nodes, seed)
        }
        _ => return for_program(name, seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = pagerank(2, 5, 4, 7);
        assert_eq!(a, pagerank(2, 5, 4, 7));
        assert_ne!(a, pagerank(2, 5, 4, 8));
        assert_eq!(a.files[0].1.lines().count(), 9);
    }

    #[test]
    fn visit_count_scale_one_shape() {
        let set = generate("visit-count", 1.0, 3).unwrap();
        assert_eq!(set.files.len(), 101);
        assert_eq!(set.files[0].1.lines().count(), 50_000);
        assert!(set.files[1..]
            .iter()
            .all(|(_, t)| t.lines().count() == 10_000));
        assert_eq!(set, generate("visit-count", 1.0, 3).unwrap());
    }

    #[test]
    fn no_self_loops() {
        for (_, t) in pagerank(1, 3, 200, 1).files {
            for l in t.lines() {
                let (a, b) = l.split_once(',').unwrap();
                assert_ne!(a, b);
            }
        }
    }
}
