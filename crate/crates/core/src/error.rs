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

use std::path::PathBuf;

use thiserror::Error;

use crate::frontend::ast::Span;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },

    #[error("{span}: type error: {message}")]
    Type { span: Span, message: String },

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run stalled: {0}")]
    Deadlock(String),

    #[error("trace budget of {budget} elements exceeded")]
    TraceBudget { budget: usize },

    #[error("bad trace text at line {line}: {message}")]
    TraceFormat { line: usize, message: String },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn syntax(span: Span, message: impl Into<String>) -> Error {
        Error::Syntax {
            span,
            message: message.into(),
        }
    }

    pub fn type_error(span: Span, message: impl Into<String>) -> Error {
        Error::Type {
            span,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Source position of a front-end diagnostic.
    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Syntax { span, .. } | Error::Type { span, .. } => Some(*span),
            _ => None,
        }
    }

    /// `file:line:col: message` form used for command-line diagnostics.
    pub fn diagnostic(&self, file: &str) -> String {
        match self {
            Error::Syntax { span, message } => format!("{file}:{span}: syntax error: {message}"),
            Error::Type { span, message } => format!("{file}:{span}: type error: {message}"),
            other => format!("{file}: {other}"),
        }
    }
}
