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

//! Bag lifecycle events and the overlap measure derived from them.

use std::io::Write;

use crate::dataflow::{DataflowGraph, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Open,
    /// Elements of one input bag were pushed into the open bag.
    PushBatch,
    /// One input bag of the open bag is complete.
    CloseIn,
    CloseOut,
    DropState,
    /// A condition node broadcast a path extension.
    Control,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Open => "open",
            EventKind::PushBatch => "push-batch",
            EventKind::CloseIn => "close-in",
            EventKind::CloseOut => "close-out",
            EventKind::DropState => "drop-state",
            EventKind::Control => "control",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// Nanoseconds since the start of the run (virtual time under simulation).
    pub t_ns: u64,
    pub node: NodeId,
    pub idx: usize,
    pub kind: EventKind,
    pub path_len: usize,
}

/// Writes `wallclock_ns,instance,event_kind,path_len` rows, instances as `node#idx`.
pub fn write_events_csv<W: Write>(g: &DataflowGraph, events: &[Event], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Runtime(format!("writing events: {e}"));
    w.write_record(["wallclock_ns", "instance", "event_kind", "path_len"])
        .map_err(csv_err)?;
    for e in events {
        w.write_record([
            e.t_ns.to_string(),
            format!("{}#{}", g.node(e.node).name, e.idx),
            e.kind.name().to_string(),
            e.path_len.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Runtime(format!("writing events: {e}")))?;
    Ok(())
}

/// Number of bag opens by other nodes at a larger path length that happen while a bag
/// of `node` is open.
pub fn overlap(events: &[Event], node: NodeId) -> usize {
    let mut intervals = Vec::new();
    let mut open_at = std::collections::HashMap::new();
    for e in events.iter().filter(|e| e.node == node) {
        match e.kind {
            EventKind::Open => {
                open_at.insert((e.idx, e.path_len), e.t_ns);
            }
            EventKind::CloseOut => {
                if let Some(t) = open_at.remove(&(e.idx, e.path_len)) {
                    intervals.push((t, e.t_ns, e.path_len));
                }
            }
            _ => {}
        }
    }
    events
        .iter()
        .filter(|e| e.kind == EventKind::Open && e.node != node)
        .filter(|e| {
            intervals
                .iter()
                .any(|&(a, b, len)| e.path_len > len && e.t_ns >= a && e.t_ns <= b)
        })
        .count()
}
