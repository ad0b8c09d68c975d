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

//! Messages exchanged between physical instances.

use crate::dataflow::EdgeId;
use crate::frontend::BlockId;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Batch(Vec<Value>),
    /// The sender has sent its whole partition of the bag.
    Close,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Msg {
    /// Part of the bag created at path length `len` by instance `sender` of the edge's
    /// source node.
    Data {
        edge: EdgeId,
        sender: usize,
        len: usize,
        payload: Payload,
    },
    /// Path position `seq` is `block`, or the path ends before `seq` when `None`.
    Control { seq: usize, block: Option<BlockId> },
}

impl Msg {
    /// Number of block ids carried.
    pub fn block_ids(&self) -> usize {
        match self {
            Msg::Control { block: Some(_), .. } => 1,
            _ => 0,
        }
    }

    /// Number of path lengths carried.
    pub fn path_lens(&self) -> usize {
        1
    }
}
