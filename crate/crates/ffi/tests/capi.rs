use std::ffi::{c_char, CStr, CString};
use std::ptr;

use selx::models::{HOTEL_2_3, TOGGLE};
use selx_ffi::*;
use serde_json::Value;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = selx_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn take_json(p: *mut c_char) -> Value {
    let v = serde_json::from_str(CStr::from_ptr(p).to_str().unwrap()).unwrap();
    selx_string_free(p);
    v
}

unsafe fn compile(src: &str) -> *mut SelxModel {
    let mut m = ptr::null_mut();
    assert_eq!(selx_model_compile(c(src).as_ptr(), false, &mut m), SelxStatus::Ok);
    assert!(!m.is_null());
    m
}

unsafe fn session(m: *const SelxModel, prop: &str, bound: usize) -> *mut SelxSession {
    let mut s = ptr::null_mut();
    let status = selx_session_create(m, c(prop).as_ptr(), bound, SelxMode::CounterExample as u32, &mut s);
    assert_eq!(status, SelxStatus::Ok);
    s
}

unsafe fn trace(s: *const SelxSession) -> Value {
    let mut out = ptr::null_mut();
    assert_eq!(selx_session_trace_json(s, &mut out), SelxStatus::Ok);
    take_json(out)
}

#[test]
fn toggle_session_through_the_c_abi() {
    unsafe {
        let m = compile(TOGGLE);
        assert_eq!(selx_model_state_count(m), 2);
        let s = session(m, "G !p", 4);
        let t = trace(s);
        assert_eq!(t["revision"], 0);
        assert_eq!(t["trace"]["loopStart"], 1);
        assert_eq!(t["trace"]["events"][0]["name"], "Set");
        assert_eq!(t["trace"]["events"][0]["args"][0], "A");

        assert_eq!(selx_session_apply(s, SelxOp::Backward as u32, ptr::null()), SelxStatus::Boundary);
        assert!(last_error().contains("start"));
        assert_eq!(selx_session_apply(s, SelxOp::AltEvent as u32, ptr::null()), SelxStatus::Ok);
        assert_eq!(selx_session_revision(s), 1);
        assert_eq!(trace(s)["trace"]["events"][0]["args"][0], "B");
        assert!(selx_last_error().is_null());
        assert_eq!(selx_session_apply(s, SelxOp::AltEvent as u32, ptr::null()), SelxStatus::NoAlternative);
        assert_eq!(selx_session_revision(s), 1);

        assert_eq!(selx_session_apply(s, SelxOp::Forward as u32, ptr::null()), SelxStatus::Ok);
        assert_eq!(selx_session_focus(s), 1);
        let mut out = ptr::null_mut();
        assert_eq!(selx_session_enabled_json(s, &mut out), SelxStatus::Ok);
        let e = take_json(out);
        assert_eq!(e["types"]["Stay"]["enabled"], true);
        assert_eq!(e["types"]["Unset"]["enabled"], true);
        assert_eq!(e["types"]["Set"]["enabled"], false);

        let unset = c("Unset");
        assert_eq!(selx_session_apply(s, SelxOp::SetType as u32, unset.as_ptr()), SelxStatus::Ok);
        assert_eq!(trace(s)["trace"]["events"][1]["type"], "Unset");
        let bogus = c("Bogus");
        assert_eq!(selx_session_apply(s, SelxOp::SetType as u32, bogus.as_ptr()), SelxStatus::UnknownType);
        assert_eq!(selx_session_apply(s, SelxOp::SetType as u32, ptr::null()), SelxStatus::NullArgument);
        assert_eq!(selx_session_apply(s, 99, ptr::null()), SelxStatus::InvalidArgument);

        selx_session_free(s);
        selx_model_free(m);
    }
}

#[test]
fn hotel_assertion_by_name() {
    unsafe {
        let m = compile(HOTEL_2_3);
        let s = session(m, "BadSafety", 10);
        let t = trace(s);
        let names: Vec<_> = t["trace"]["events"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["type"].as_str().unwrap().to_string())
            .collect();
        assert_eq!(names[..4], ["In", "Out", "In", "Entry"]);
        selx_session_free(s);
        selx_model_free(m);
    }
}

#[test]
fn errors_carry_status_message_and_location() {
    unsafe {
        let mut m = ptr::null_mut();
        let src = c("model m\nsort");
        assert_eq!(selx_model_compile(src.as_ptr(), false, &mut m), SelxStatus::ModelError);
        assert!(m.is_null());
        let (mut line, mut col) = (0usize, 0usize);
        assert!(selx_last_error_location(&mut line, &mut col));
        assert!(line >= 1);

        let m = compile(TOGGLE);
        let mut s = ptr::null_mut();
        let bad = c("G (p &&");
        let status = selx_session_create(m, bad.as_ptr(), 4, SelxMode::CounterExample as u32, &mut s);
        assert_eq!(status, SelxStatus::PropertyError);
        assert!(selx_last_error_location(&mut line, &mut col));
        assert_eq!((line, col), (1, 8));

        let holds = c("F p");
        let status = selx_session_create(m, holds.as_ptr(), 6, SelxMode::CounterExample as u32, &mut s);
        assert_eq!(status, SelxStatus::PropertyHolds);
        assert!(s.is_null());
        let witness = c("F p");
        let status = selx_session_create(m, witness.as_ptr(), 6, SelxMode::Witness as u32, &mut s);
        assert_eq!(status, SelxStatus::Ok);
        selx_session_free(s);

        let status = selx_session_create(m, holds.as_ptr(), 0, SelxMode::CounterExample as u32, &mut s);
        assert_eq!(status, SelxStatus::CheckError);
        let status = selx_session_create(m, holds.as_ptr(), 4, 7, &mut s);
        assert_eq!(status, SelxStatus::InvalidArgument);
        assert_eq!(selx_session_create(ptr::null(), holds.as_ptr(), 4, 0, &mut s), SelxStatus::NullArgument);
        assert_eq!(selx_session_trace_json(ptr::null(), &mut ptr::null_mut()), SelxStatus::NullArgument);

        let invalid = [0xffu8, 0];
        let status = selx_model_compile(invalid.as_ptr().cast(), false, &mut ptr::null_mut());
        assert_eq!(status, SelxStatus::InvalidUtf8);
        selx_model_free(m);
        selx_model_free(ptr::null_mut());
        selx_session_free(ptr::null_mut());
        selx_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(selx_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
