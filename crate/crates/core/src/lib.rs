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

//! Compile imperative data-analytics programs into a single cyclic dataflow job and
//! run it on a multi-worker runtime.

pub mod bench;
pub mod dataflow;
pub mod error;
pub mod frontend;
pub mod fuzz;
pub mod inputs;
pub mod oracle;
pub mod programs;
pub mod runtime;
pub mod ssa;
pub mod transform;
pub mod udf;
pub mod value;

pub use error::{Error, Result};
