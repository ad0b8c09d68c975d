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

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use laby_ffi::*;

const PROGRAM: &str = r#"xs = readFile<Int>("xs")
i = 0
do {
  xs = xs.map(x => x + 1)
  i = i + 1
  c = i < 3
} while (c)
xs.writeFile("out")
"#;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    laby_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let e = laby_last_error();
    assert!(!e.is_null());
    CStr::from_ptr(e).to_str().unwrap().to_string()
}

unsafe fn compile(src: &str) -> *mut LabyProgram {
    let mut p = ptr::null_mut();
    assert_eq!(laby_compile(cstr(src).as_ptr(), &mut p), LabyStatus::Ok);
    p
}

fn input_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xs"), "1\n2\n3\n4\n5\n").unwrap();
    dir
}

#[test]
fn compile_and_dump() {
    unsafe {
        let p = compile(PROGRAM);
        let mut s = ptr::null_mut();
        assert_eq!(laby_program_dump_ssa(p, 0, &mut s), LabyStatus::Ok);
        let ssa = take(s);
        assert!(ssa.starts_with("block 1:"));
        assert!(ssa.contains("phi("));
        assert_eq!(laby_program_dot(p, 2, &mut s), LabyStatus::Ok);
        assert!(take(s).starts_with("digraph"));
        laby_program_free(p);
    }
}

#[test]
fn errors_carry_status_and_position() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            laby_compile(cstr("x = \n").as_ptr(), &mut p),
            LabyStatus::SyntaxError
        );
        assert!(p.is_null());
        assert!(last_error().starts_with("2:1"), "{}", last_error());
        assert_eq!(
            laby_compile(cstr("x = 1\ny = x.map(v => v)\n").as_ptr(), &mut p),
            LabyStatus::TypeError
        );
        assert_eq!(laby_compile(ptr::null(), &mut p), LabyStatus::NullArgument);
        assert_eq!(
            laby_compile(cstr("x = 1").as_ptr(), ptr::null_mut()),
            LabyStatus::NullArgument
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            laby_compile(bad.as_ptr().cast(), &mut p),
            LabyStatus::InvalidUtf8
        );
        let mut t = ptr::null_mut();
        assert_eq!(
            laby_trace_parse(cstr("nonsense 1").as_ptr(), &mut t),
            LabyStatus::TraceFormat
        );
    }
}

#[test]
fn parallel_run_matches_sequential() {
    let dir = input_dir();
    let d = cstr(dir.path().to_str().unwrap());
    unsafe {
        let p = compile(PROGRAM);
        let mut seq = ptr::null_mut();
        assert_eq!(laby_run_sequential(p, d.as_ptr(), &mut seq), LabyStatus::Ok);
        for simulated in [0, 1] {
            let mut opts = laby_run_options_default();
            opts.workers = 3;
            opts.simulated = simulated;
            opts.seed = 7;
            let mut par = ptr::null_mut();
            assert_eq!(
                laby_run_parallel(p, d.as_ptr(), &opts, &mut par),
                LabyStatus::Ok
            );
            let mut equal = 0;
            let mut report = ptr::null_mut();
            assert_eq!(
                laby_trace_diff(seq, par, &mut equal, &mut report),
                LabyStatus::Ok
            );
            assert_eq!(equal, 1, "{}", take(report));
            laby_string_free(report);
            laby_trace_free(par);
        }
        let mut opts = laby_run_options_default();
        opts.workers = 0;
        let mut par = ptr::null_mut();
        assert_eq!(
            laby_run_parallel(p, d.as_ptr(), &opts, &mut par),
            LabyStatus::InvalidArgument
        );
        laby_trace_free(seq);
        laby_program_free(p);
    }
}

#[test]
fn trace_text_round_trip_and_diff() {
    let dir = input_dir();
    let d = cstr(dir.path().to_str().unwrap());
    unsafe {
        let p = compile(PROGRAM);
        let mut t = ptr::null_mut();
        assert_eq!(laby_run_sequential(p, d.as_ptr(), &mut t), LabyStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(laby_trace_to_text(t, &mut s), LabyStatus::Ok);
        let text = take(s);
        assert!(text.contains("effect \"out\" {4, 5, 6, 7, 8}"), "{text}");
        let mut back = ptr::null_mut();
        assert_eq!(
            laby_trace_parse(cstr(&text).as_ptr(), &mut back),
            LabyStatus::Ok
        );
        let mut equal = 0;
        assert_eq!(
            laby_trace_diff(t, back, &mut equal, ptr::null_mut()),
            LabyStatus::Ok
        );
        assert_eq!(equal, 1);
        let changed = text.replace("{4, 5, 6, 7, 8}", "{4, 5, 6, 7}");
        let mut other = ptr::null_mut();
        assert_eq!(
            laby_trace_parse(cstr(&changed).as_ptr(), &mut other),
            LabyStatus::Ok
        );
        let mut report = ptr::null_mut();
        assert_eq!(
            laby_trace_diff(t, other, &mut equal, &mut report),
            LabyStatus::Ok
        );
        assert_eq!(equal, 0);
        assert!(take(report).contains("effect \"out\" differs"));
        for h in [t, back, other] {
            laby_trace_free(h);
        }
        laby_program_free(p);
    }
}

#[test]
fn missing_input_is_an_error() {
    unsafe {
        let p = compile(PROGRAM);
        let mut t = ptr::null_mut();
        let d = cstr("/nonexistent/laby");
        assert_eq!(
            laby_run_sequential(p, d.as_ptr(), &mut t),
            LabyStatus::RuntimeError
        );
        assert!(last_error().contains("xs"));
        laby_program_free(p);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        laby_program_free(ptr::null_mut());
        laby_trace_free(ptr::null_mut());
        laby_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/laby.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "laby_compile",
        "laby_program_free",
        "laby_program_dump_ssa",
        "laby_program_dot",
        "laby_run_sequential",
        "laby_run_parallel",
        "laby_trace_to_text",
        "laby_trace_parse",
        "laby_trace_diff",
        "laby_trace_free",
        "laby_string_free",
        "laby_last_error",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(text.contains("typedef struct LabyProgram LabyProgram;"));
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("use.c");
    std::fs::write(
        &c,
        "#include \"laby.h\"\nint main(void) { LabyProgram *p = 0; return laby_compile(\"x = 1\", &p) == LABY_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    match std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(header.parent().unwrap())
        .arg(&c)
        .output()
    {
        Ok(out) => assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        ),
        Err(_) => eprintln!("no C compiler; header syntax not checked"),
    }
}
