use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tessla_ffi::*;

const SPEC: &str = "in x: Events[Int]\ndef y := x + 1\nout y\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a returned string.
fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { tessla_string_free(s) };
    text
}

fn last_error() -> Option<String> {
    let p = tessla_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string())
}

fn compile(src: &str) -> *mut TesslaSpec {
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { tessla_spec_compile(c(src).as_ptr(), &mut spec) }, TesslaStatus::Ok);
    spec
}

fn golden() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

#[test]
fn compile_and_run() {
    let spec = compile(SPEC);
    assert_eq!(unsafe { tessla_spec_input_count(spec) }, 1);
    assert_eq!(unsafe { tessla_spec_output_count(spec) }, 1);
    let mut out = ptr::null_mut();
    let status = unsafe { tessla_run(spec, c("1: x = 1\n2: x = 5\n").as_ptr(), 0, &mut out) };
    assert_eq!(status, TesslaStatus::Ok);
    assert_eq!(take(out), "1: y = 2\n2: y = 6\n");
    assert_eq!(last_error(), None);
    let mut flat = ptr::null_mut();
    assert_eq!(unsafe { tessla_spec_flatten(spec, &mut flat) }, TesslaStatus::Ok);
    assert!(take(flat).contains("out y"));
    unsafe { tessla_spec_free(spec) };
}

#[test]
fn errors_carry_status_and_message() {
    let mut spec = ptr::null_mut();
    let status = unsafe { tessla_spec_compile(c("def := 1").as_ptr(), &mut spec) };
    assert_eq!(status, TesslaStatus::SpecError);
    assert!(spec.is_null());
    assert!(last_error().is_some());

    let spec = compile(SPEC);
    let mut out = ptr::null_mut();
    let status = unsafe { tessla_run(spec, c("2: x = 1\n1: x = 1\n").as_ptr(), 0, &mut out) };
    assert_eq!(status, TesslaStatus::TraceError);
    assert!(last_error().is_some());
    take(out);
    let status = unsafe { tessla_run(spec, c("1: z = 1\n").as_ptr(), 0, &mut out) };
    assert_eq!(status, TesslaStatus::TraceError);
    take(out);

    assert_eq!(unsafe { tessla_spec_compile(ptr::null(), &mut ptr::null_mut()) }, TesslaStatus::NullArgument);
    assert_eq!(unsafe { tessla_run(ptr::null(), ptr::null(), 0, &mut out) }, TesslaStatus::NullArgument);
    let bad = [0xffu8, 0];
    let status = unsafe { tessla_spec_compile(bad.as_ptr().cast(), &mut ptr::null_mut()) };
    assert_eq!(status, TesslaStatus::InvalidUtf8);
    unsafe { tessla_spec_free(spec) };
    unsafe { tessla_spec_free(ptr::null_mut()) };
    unsafe { tessla_string_free(ptr::null_mut()) };
}

#[test]
fn feeding_split_text_matches_run() {
    for name in ["count", "diff", "period"] {
        let src = std::fs::read_to_string(golden().join(format!("{name}.tessla"))).unwrap();
        let input = std::fs::read_to_string(golden().join(format!("{name}.input"))).unwrap();
        let spec = compile(&src);
        let mut whole = ptr::null_mut();
        let whole_status = unsafe { tessla_run(spec, c(&input).as_ptr(), 50, &mut whole) };
        let whole = take(whole);

        // Feed in pieces that cut lines at arbitrary bytes.
        let mut monitor = ptr::null_mut();
        assert_eq!(unsafe { tessla_monitor_new(spec, 50, &mut monitor) }, TesslaStatus::Ok);
        let mut text = String::new();
        let mut status = TesslaStatus::Ok;
        for piece in input.as_bytes().chunks(7) {
            let mut out = ptr::null_mut();
            status = unsafe { tessla_monitor_feed(monitor, c(std::str::from_utf8(piece).unwrap()).as_ptr(), &mut out) };
            text.push_str(&take(out));
            if status != TesslaStatus::Ok {
                break;
            }
        }
        if status == TesslaStatus::Ok {
            let mut out = ptr::null_mut();
            status = unsafe { tessla_monitor_finish(monitor, &mut out) };
            text.push_str(&take(out));
        }
        assert_eq!(text, whole, "{name}");
        assert_eq!(status, whole_status, "{name}");
        unsafe { tessla_monitor_free(monitor) };
        unsafe { tessla_spec_free(spec) };
    }
}

#[test]
fn monitor_is_independent_of_spec_handle() {
    let spec = compile(SPEC);
    let mut monitor = ptr::null_mut();
    assert_eq!(unsafe { tessla_monitor_new(spec, 0, &mut monitor) }, TesslaStatus::Ok);
    unsafe { tessla_spec_free(spec) };
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { tessla_monitor_feed(monitor, c("1: x = 1\n3: x").as_ptr(), &mut out) }, TesslaStatus::Ok);
    assert_eq!(take(out), "");
    assert_eq!(unsafe { tessla_monitor_feed(monitor, c(" = 2\n@progress 5\n").as_ptr(), &mut out) }, TesslaStatus::Ok);
    assert_eq!(take(out), "1: y = 2\n3: y = 3\n");
    assert_eq!(unsafe { tessla_monitor_finish(monitor, &mut out) }, TesslaStatus::Ok);
    assert_eq!(take(out), "@progress 5\n");
    assert_eq!(unsafe { tessla_monitor_finish(monitor, &mut out) }, TesslaStatus::Finished);
    take(out);
    unsafe { tessla_monitor_free(monitor) };
}

#[test]
fn event_limit_is_a_runtime_error_with_partial_output() {
    let spec = compile("def period := merge(const(5)(delay(period, unit)), 5)\nout period\n");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { tessla_run(spec, c("").as_ptr(), 3, &mut out) }, TesslaStatus::RuntimeError);
    assert_eq!(take(out), "0: period = 5\n5: period = 5\n10: period = 5\n@progress 15!\n");
    assert!(last_error().unwrap().contains('3'));
    unsafe { tessla_spec_free(spec) };
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(tessla_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/tessla.h")).unwrap();
    for f in [
        "tessla_spec_compile",
        "tessla_spec_free",
        "tessla_spec_flatten",
        "tessla_monitor_new",
        "tessla_monitor_feed",
        "tessla_monitor_finish",
        "tessla_monitor_free",
        "tessla_run",
        "tessla_string_free",
        "tessla_last_error",
        "tessla_version",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct TesslaSpec TesslaSpec;"));
    assert!(header.contains("TESSLA_STATUS_RUNTIME_ERROR = 3"));
}

/// Compiles a C program against the header and the static library, when a
/// C compiler and the archive are available.
#[test]
fn c_program_links_against_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let test_exe = std::env::current_exe().unwrap();
    let profile_dir = test_exe.parent().and_then(|d| d.parent()).unwrap();
    let archive = profile_dir.join("libtessla_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} not built", archive.display());
        return;
    }
    let dir = std::env::temp_dir().join(format!("tessla-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "tessla.h"
int main(void) {
    TesslaSpec *spec = NULL;
    if (tessla_spec_compile("in x: Events[Int]\ndef y := x * 2\nout y\n", &spec) != TESSLA_STATUS_OK) return 1;
    char *out = NULL;
    TesslaStatus s = tessla_run(spec, "1: x = 4\n", 0, &out);
    fputs(out, stdout);
    tessla_string_free(out);
    tessla_spec_free(spec);
    return s;
}
"#,
    )
    .unwrap();
    let exe = dir.join("main");
    let built = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success());
    assert_eq!(String::from_utf8(run.stdout).unwrap(), "1: y = 8\n");
}
