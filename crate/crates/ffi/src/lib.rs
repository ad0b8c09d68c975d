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

//! C ABI for compiling and running laby programs.
//!
//! Programs and traces are opaque handles owned by the caller and released with
//! their `_free` function. Strings returned through out-parameters are owned by the
//! caller and released with [`laby_string_free`]. Every fallible call returns a
//! [`LabyStatus`]; on failure [`laby_last_error`] describes the problem.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use laby_core::dataflow::{build_dataflow, export_dot};
use laby_core::oracle::{diff_traces, run_sequential, ExecutionTrace, DEFAULT_BUDGET};
use laby_core::runtime::{run, Driver, RunConfig, SimConfig};
use laby_core::ssa::{compile_source, dump_ssa, Compiled};
use laby_core::transform::IoEnv;
use laby_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabyStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    SyntaxError = 3,
    TypeError = 4,
    RuntimeError = 5,
    IoError = 6,
    TraceFormat = 7,
    InvalidArgument = 8,
    Panic = 9,
    Internal = 10,
}

/// A compiled program.
pub struct LabyProgram {
    compiled: Compiled,
}

/// An execution trace.
pub struct LabyTrace {
    trace: ExecutionTrace,
}

/// Options of a parallel run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabyRunOptions {
    pub workers: u32,
    /// Nonzero: deterministic simulated schedule seeded by `seed`.
    pub simulated: u8,
    pub seed: u64,
    pub barrier: u8,
    pub hoist: u8,
    pub discard: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LabyStatus, msg: String) -> LabyStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> LabyStatus {
    match e {
        Error::Syntax { .. } => LabyStatus::SyntaxError,
        Error::Type { .. } => LabyStatus::TypeError,
        Error::Io { .. } => LabyStatus::IoError,
        Error::TraceFormat { .. } => LabyStatus::TraceFormat,
        Error::Internal(_) => LabyStatus::Internal,
        _ => LabyStatus::RuntimeError,
    }
}

fn from_error(e: Error) -> LabyStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning a panic into [`LabyStatus::Panic`].
fn guarded(f: impl FnOnce() -> LabyStatus) -> LabyStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(LabyStatus::Panic, msg)
        }
    }
}

/// # Safety
/// `s` is null or a nul-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, LabyStatus> {
    if s.is_null() {
        return Err(fail(LabyStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(LabyStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `out` is null or valid for writes.
unsafe fn put_string(out: *mut *mut c_char, s: String) -> LabyStatus {
    if out.is_null() {
        return fail(LabyStatus::NullArgument, "output pointer is null".into());
    }
    let c = CString::new(s.replace('\0', " ")).expect("no interior nul");
    *out = c.into_raw();
    LabyStatus::Ok
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn laby_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default options: one threaded worker, hoisting and discarding on, no barrier.
#[no_mangle]
pub extern "C" fn laby_run_options_default() -> LabyRunOptions {
    LabyRunOptions {
        workers: 1,
        simulated: 0,
        seed: 0,
        barrier: 0,
        hoist: 1,
        discard: 1,
    }
}

/// Compiles `source`; on success `*out` receives a program handle.
///
/// # Safety
/// `source` is a nul-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_compile(
    source: *const c_char,
    out: *mut *mut LabyProgram,
) -> LabyStatus {
    guarded(|| {
        if out.is_null() {
            return fail(LabyStatus::NullArgument, "output pointer is null".into());
        }
        let src = match str_arg(source, "source") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match compile_source(src) {
            Ok(compiled) => {
                *out = Box::into_raw(Box::new(LabyProgram { compiled }));
                LabyStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a program; null is ignored.
///
/// # Safety
/// `program` is null or a handle from [`laby_compile`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn laby_program_free(program: *mut LabyProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// # Safety
/// `p` is null or a live program handle.
unsafe fn program_arg<'a>(p: *const LabyProgram) -> Result<&'a LabyProgram, LabyStatus> {
    p.as_ref()
        .ok_or_else(|| fail(LabyStatus::NullArgument, "program is null".into()))
}

/// # Safety
/// `t` is null or a live trace handle.
unsafe fn trace_arg<'a>(t: *const LabyTrace, what: &str) -> Result<&'a LabyTrace, LabyStatus> {
    t.as_ref()
        .ok_or_else(|| fail(LabyStatus::NullArgument, format!("{what} is null")))
}

/// The SSA form of a program, before (`lifted == 0`) or after scalar lifting.
///
/// # Safety
/// `program` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_program_dump_ssa(
    program: *const LabyProgram,
    lifted: u8,
    out: *mut *mut c_char,
) -> LabyStatus {
    guarded(|| match program_arg(program) {
        Ok(p) => {
            let ssa = if lifted != 0 {
                &p.compiled.lifted
            } else {
                &p.compiled.ssa
            };
            put_string(out, dump_ssa(ssa))
        }
        Err(s) => s,
    })
}

/// The dataflow graph of a program for `workers` workers, in Graphviz format.
///
/// # Safety
/// `program` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_program_dot(
    program: *const LabyProgram,
    workers: u32,
    out: *mut *mut c_char,
) -> LabyStatus {
    guarded(|| match program_arg(program) {
        Ok(p) => put_string(
            out,
            export_dot(&build_dataflow(&p.compiled.lifted, workers.max(1) as usize)),
        ),
        Err(s) => s,
    })
}

/// # Safety
/// `out` is valid for writes.
unsafe fn put_trace(out: *mut *mut LabyTrace, trace: ExecutionTrace) -> LabyStatus {
    if out.is_null() {
        return fail(LabyStatus::NullArgument, "output pointer is null".into());
    }
    *out = Box::into_raw(Box::new(LabyTrace { trace }));
    LabyStatus::Ok
}

/// Runs a program with the sequential oracle, reading inputs from `input_dir`.
///
/// # Safety
/// `program` is a live handle, `input_dir` a nul-terminated string and `out` is
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_run_sequential(
    program: *const LabyProgram,
    input_dir: *const c_char,
    out: *mut *mut LabyTrace,
) -> LabyStatus {
    guarded(|| {
        let (p, dir) = match (program_arg(program), str_arg(input_dir, "input_dir")) {
            (Ok(p), Ok(d)) => (p, d),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match run_sequential(&p.compiled.lifted, &IoEnv::from_dir(dir), DEFAULT_BUDGET) {
            Ok(t) => put_trace(out, t),
            Err(e) => from_error(e),
        }
    })
}

/// Runs a program on the parallel runtime, reading inputs from `input_dir`.
///
/// # Safety
/// `program` is a live handle, `input_dir` a nul-terminated string, `options` null
/// (defaults) or valid, and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_run_parallel(
    program: *const LabyProgram,
    input_dir: *const c_char,
    options: *const LabyRunOptions,
    out: *mut *mut LabyTrace,
) -> LabyStatus {
    guarded(|| {
        let (p, dir) = match (program_arg(program), str_arg(input_dir, "input_dir")) {
            (Ok(p), Ok(d)) => (p, d),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| laby_run_options_default());
        if o.workers == 0 {
            return fail(
                LabyStatus::InvalidArgument,
                "workers must be at least 1".into(),
            );
        }
        let mut cfg = RunConfig::with_workers(o.workers as usize);
        if o.simulated != 0 {
            cfg.driver = Driver::Simulated(SimConfig {
                seed: o.seed,
                max_latency_ns: 50_000,
            });
        }
        cfg.opts.barrier = o.barrier != 0;
        cfg.opts.hoist = o.hoist != 0;
        cfg.opts.discard = o.discard != 0;
        match run(&p.compiled.lifted, &IoEnv::from_dir(dir), &cfg) {
            Ok(r) => put_trace(out, r.trace.expect("trace enabled")),
            Err(e) => from_error(e),
        }
    })
}

/// Parses the canonical text form of a trace.
///
/// # Safety
/// `text` is a nul-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_trace_parse(
    text: *const c_char,
    out: *mut *mut LabyTrace,
) -> LabyStatus {
    guarded(|| {
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ExecutionTrace::parse(text) {
            Ok(t) => put_trace(out, t),
            Err(e) => from_error(e),
        }
    })
}

/// The canonical text form of a trace.
///
/// # Safety
/// `trace` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_trace_to_text(
    trace: *const LabyTrace,
    out: *mut *mut c_char,
) -> LabyStatus {
    guarded(|| match trace_arg(trace, "trace") {
        Ok(t) => put_string(out, t.trace.to_text()),
        Err(s) => s,
    })
}

/// Compares two traces. `*equal` is set to 1 when they agree and 0 otherwise; when
/// `report` is not null it receives the list of differences.
///
/// # Safety
/// Both traces are live handles, `equal` is valid for writes and `report` is null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn laby_trace_diff(
    expected: *const LabyTrace,
    actual: *const LabyTrace,
    equal: *mut u8,
    report: *mut *mut c_char,
) -> LabyStatus {
    guarded(|| {
        let (e, a) = match (trace_arg(expected, "expected"), trace_arg(actual, "actual")) {
            (Ok(e), Ok(a)) => (e, a),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if equal.is_null() {
            return fail(LabyStatus::NullArgument, "equal is null".into());
        }
        let d = diff_traces(&e.trace, &a.trace);
        *equal = u8::from(d.is_empty());
        if report.is_null() {
            LabyStatus::Ok
        } else {
            put_string(report, d.to_string())
        }
    })
}

/// Releases a trace; null is ignored.
///
/// # Safety
/// `trace` is null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn laby_trace_free(trace: *mut LabyTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn laby_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
