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

//! Golden SSA dumps, the dataflow export and compiler diagnostics.

use std::path::{Path, PathBuf};
use std::process::Command;

use laby_core::dataflow::{build_dataflow, export_dot};
use laby_core::programs;
use laby_core::ssa::{compile_source, dump_ssa};

const GOLDEN: [&str; 5] = [
    "ssa-straight",
    "ssa-diamond",
    "visit-count",
    "data-driven-branches",
    "nested-loops",
];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn read(name: &str) -> String {
    let p = golden_dir().join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn laby(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_laby"))
        .args(args)
        .output()
        .expect("run laby")
}

/// Assignments of a dump without types, block labels or terminators, with phi
/// predecessors dropped: `a_4 = phi(a_2, a_3)`.
fn assignments(dump: &str) -> Vec<String> {
    dump.lines()
        .filter_map(|l| {
            let (lhs, rhs) = l.trim().split_once(" = ")?;
            let var = lhs.split(':').next().unwrap();
            let mut out = String::new();
            let mut rest = rhs;
            while let Some(at) = rest.find(" @") {
                out.push_str(&rest[..at]);
                rest = rest[at + 2..].trim_start_matches(|c: char| c.is_ascii_digit());
            }
            out.push_str(rest);
            Some(format!("{var} = {out}"))
        })
        .collect()
}

#[test]
fn catalog_sources_match_golden_programs() {
    for name in GOLDEN {
        let (_, src) = programs::catalog()
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap();
        assert_eq!(src, read(&format!("{name}.laby")), "{name}");
    }
}

#[test]
fn library_dump_matches_golden() {
    for name in GOLDEN {
        let c = compile_source(&read(&format!("{name}.laby"))).unwrap();
        assert_eq!(dump_ssa(&c.ssa), read(&format!("{name}.ssa")), "{name}");
    }
}

#[test]
fn cli_dump_is_byte_stable() {
    for name in GOLDEN {
        let file = golden_dir().join(format!("{name}.laby"));
        let file = file.to_str().unwrap();
        let first = laby(&["compile", file, "--dump-ssa"]);
        assert!(
            first.status.success(),
            "{}",
            String::from_utf8_lossy(&first.stderr)
        );
        let second = laby(&["compile", file, "--dump-ssa"]);
        assert_eq!(first.stdout, second.stdout, "{name}");
        assert_eq!(
            String::from_utf8(first.stdout).unwrap(),
            read(&format!("{name}.ssa")),
            "{name}"
        );
    }
}

#[test]
fn straight_line_renaming() {
    let c = compile_source(&read("ssa-straight.laby")).unwrap();
    assert_eq!(
        assignments(&dump_ssa(&c.ssa)),
        ["a_1 = 0", "b_1 = a_1 + 1", "a_2 = 5", "c_1 = a_2 + 1"]
    );
}

#[test]
fn diamond_merges_with_phi() {
    let c = compile_source(&read("ssa-diamond.laby")).unwrap();
    let got: Vec<String> = assignments(&dump_ssa(&c.ssa))
        .into_iter()
        .filter(|a| !a.starts_with("c_"))
        .collect();
    assert_eq!(
        got,
        [
            "a_1 = 0",
            "a_2 = a_1 + 1",
            "a_3 = a_1 + 2",
            "a_4 = phi(a_2, a_3)",
            "b_1 = a_4 + 5"
        ]
    );
}

#[test]
fn visit_count_shape() {
    let dump = read("visit-count.ssa");
    let blocks: Vec<&str> = dump.lines().filter(|l| l.starts_with("block ")).collect();
    assert_eq!(blocks, ["block 1:", "block 2:", "block 3:", "block 4:"]);
    let phis: Vec<String> = assignments(&dump)
        .into_iter()
        .filter(|a| a.contains("= phi("))
        .collect();
    assert_eq!(
        phis,
        [
            "yesterdayCnts_2 = phi(yesterdayCnts_1, yesterdayCnts_3)",
            "day_2 = phi(day_1, day_3)"
        ]
    );
    assert!(dump.contains("  branch ifCond_1 ? 3 : 4\n"));
    assert!(dump.contains("  branch exitCond_1 ? 2 : exit\n"));
    assert!(dump.contains("exitCond_1: Bool = day_3 <= 365"));
}

#[test]
fn dataflow_export_matches_golden() {
    let c = compile_source(&read("visit-count.laby")).unwrap();
    assert_eq!(
        export_dot(&build_dataflow(&c.lifted, 4)),
        read("visit-count.dot")
    );
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.dot");
    let file = golden_dir().join("visit-count.laby");
    let o = laby(&[
        "compile",
        file.to_str().unwrap(),
        "--dot",
        out.to_str().unwrap(),
        "--workers",
        "4",
    ]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        read("visit-count.dot")
    );
}

#[test]
fn diagnostics_name_file_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.laby", "x = 1\ny = (2\n", ":3:1: syntax error:"),
        ("types.laby", "x = 1\ny = x + true\n", ":2:7: type error:"),
    ];
    for (name, src, want) in cases {
        let f = dir.path().join(name);
        std::fs::write(&f, src).unwrap();
        let o = laby(&["compile", f.to_str().unwrap(), "--dump-ssa"]);
        assert_eq!(o.status.code(), Some(1));
        let err = String::from_utf8(o.stderr).unwrap();
        let prefix = format!("{}{want}", f.display());
        assert!(err.starts_with(&prefix), "{err}");
    }
}
