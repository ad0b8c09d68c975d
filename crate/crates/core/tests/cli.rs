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

//! End-to-end runs of the `laby` binary.

use std::path::Path;
use std::process::{Command, Output};

fn laby(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laby"))
        .args(args)
        .output()
        .expect("run laby")
}

fn ok(args: &[&str]) -> Output {
    let o = laby(args);
    assert!(
        o.status.success(),
        "laby {}\n{}",
        args.join(" "),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_run_and_diff() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&[
        "gen",
        "visit-count",
        "--scale",
        "0.01",
        "--seed",
        "3",
        "--out",
        s(d),
    ]);
    assert_eq!(
        std::fs::read_to_string(d.join("pageVisitLog1"))
            .unwrap()
            .lines()
            .count(),
        100
    );
    let prog = d.join("visit-count.laby");
    let seq = d.join("seq.trace");
    let par = d.join("par.trace");
    let sim = d.join("sim.trace");
    let events = d.join("events.csv");
    ok(&["run", s(&prog), "--mode", "sequential", "--trace", s(&seq)]);
    ok(&[
        "run",
        s(&prog),
        "--workers",
        "3",
        "--trace",
        s(&par),
        "--events",
        s(&events),
        "--check",
    ]);
    ok(&[
        "run",
        s(&prog),
        "--workers",
        "4",
        "--driver",
        "simulated",
        "--seed",
        "9",
        "--barrier",
        "--no-hoist",
        "--no-discard",
        "--trace",
        s(&sim),
    ]);
    ok(&["diff", s(&seq), s(&par)]);
    ok(&["diff", s(&seq), s(&sim)]);

    let csv = std::fs::read_to_string(&events).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("wallclock_ns,instance,event_kind,path_len")
    );
    let kinds: std::collections::BTreeSet<&str> =
        lines.map(|l| l.split(',').nth(2).unwrap()).collect();
    for k in ["open", "push-batch", "close-in", "close-out", "control"] {
        assert!(kinds.contains(k), "missing {k} in {kinds:?}");
    }

    let mut t = std::fs::read_to_string(&seq).unwrap();
    t = t.replacen("diff2", "diff9", 1);
    let bad = d.join("bad.trace");
    std::fs::write(&bad, t).unwrap();
    let o = laby(&["diff", s(&seq), s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stdout.is_empty());
}

#[test]
fn writes_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "pagerank", "--scale", "0.02", "--out", s(d)]);
    let out = d.join("out");
    ok(&[
        "run",
        s(&d.join("pagerank.laby")),
        "--workers",
        "2",
        "--output-dir",
        s(&out),
    ]);
    assert!(std::fs::read_dir(&out).unwrap().next().is_some());
}

#[test]
fn delay_and_per_step_mode() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "data-driven-branches", "--out", s(d)]);
    let prog = d.join("data-driven-branches.laby");
    ok(&[
        "run",
        s(&prog),
        "--mode",
        "per-step",
        "--workers",
        "2",
        "--check",
    ]);
    let o = laby(&["run", s(&prog), "--delay", "node=nope,ms=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn bench_writes_csv_with_invocation() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    ok(&[
        "bench",
        "step-overhead",
        "--steps",
        "20",
        "--elements",
        "10",
        "--workers",
        "2",
        "--reps",
        "3",
        "--csv",
        s(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.ends_with(",invocation"), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r.contains("bench step-overhead --steps 20")));
}

#[test]
fn unknown_program_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = laby(&["gen", "nope", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("visit-count"));
}
