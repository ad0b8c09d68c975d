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

//! Parsing, type checking and control flow graphs for `.laby` sources.

pub mod ast;
pub mod cfg;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typecheck;

pub use ast::{Program, Span};
pub use cfg::{build_cfg, BlockId, CfgShape, ControlFlowGraph, Target, Terminator};
pub use parser::parse;
pub use pretty::print_program;
pub use typecheck::typecheck;
