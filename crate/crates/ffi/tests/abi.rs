use std::ffi::{c_char, CStr, CString};
use std::ptr;

use netauction_ffi::*;

fn owned(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { na_string_free(p) };
    s
}

fn last_error() -> String {
    let p = na_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn fixture(name: &str) -> *mut NaScenario {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { na_scenario_fixture(name.as_ptr(), &mut s) }, NaStatus::Ok);
    s
}

#[test]
fn vcg_on_fig8_through_the_abi() {
    let s = fixture("fig8");
    assert_eq!(unsafe { na_scenario_agent_count(s) }, 7);
    let id = CString::new("vcg").unwrap();
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { na_run(s, id.as_ptr(), ptr::null(), 0, &mut o) }, NaStatus::Ok);
    let mut rev = ptr::null_mut();
    assert_eq!(unsafe { na_outcome_revenue(o, &mut rev) }, NaStatus::Ok);
    assert_eq!(owned(rev), "-203");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { na_outcome_to_json(o, &mut json) }, NaStatus::Ok);
    let doc: serde_json::Value = serde_json::from_str(&owned(json)).unwrap();
    assert_eq!(doc["winners"], serde_json::json!(["D", "E", "I"]));
    unsafe {
        na_outcome_free(o);
        na_scenario_free(s);
    }
}

#[test]
fn reports_overlay_changes_the_outcome() {
    let s = fixture("fig1");
    let id = CString::new("dna-mu").unwrap();
    let reports = CString::new(r#"{"schema_version":1,"invites":{"D":[]}}"#).unwrap();
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { na_run(s, id.as_ptr(), reports.as_ptr(), 0, &mut o) }, NaStatus::Ok);
    let mut json = ptr::null_mut();
    unsafe { na_outcome_to_json(o, &mut json) };
    let doc: serde_json::Value = serde_json::from_str(&owned(json)).unwrap();
    assert_eq!(doc["winners"], serde_json::json!(["A", "B", "D"]));
    unsafe {
        na_outcome_free(o);
        na_scenario_free(s);
    }
}

#[test]
fn scenario_json_round_trip() {
    let s = fixture("fig10");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { na_scenario_to_json(s, &mut json) }, NaStatus::Ok);
    let text = CString::new(owned(json)).unwrap();
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { na_scenario_from_json(text.as_ptr(), &mut back) }, NaStatus::Ok);
    assert_eq!(unsafe { na_scenario_agent_count(back) }, 4);
    unsafe {
        na_scenario_free(s);
        na_scenario_free(back);
    }
}

#[test]
fn audit_reports_failure_with_witness() {
    let s = fixture("fig1");
    let id = CString::new("dna-mu").unwrap();
    let axioms = CString::new("sp").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { na_audit(s, id.as_ptr(), axioms.as_ptr(), 0, &mut out) }, NaStatus::AuditFailed);
    let doc: serde_json::Value = serde_json::from_str(&owned(out)).unwrap();
    assert_eq!(doc["verdicts"][0]["witnesses"][0]["agent"], "D");

    let id = CString::new("dna-mu-r").unwrap();
    let axioms = CString::new("ir,sp,wbb").unwrap();
    assert_eq!(unsafe { na_audit(s, id.as_ptr(), axioms.as_ptr(), 0, &mut out) }, NaStatus::Ok);
    owned(out);

    assert_eq!(unsafe { na_audit(s, id.as_ptr(), axioms.as_ptr(), 2, &mut out) }, NaStatus::SpaceTooLarge);
    assert!(out.is_null());
    unsafe { na_scenario_free(s) };
}

#[test]
fn errors_map_to_status_codes() {
    let bad = CString::new("{not json").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { na_scenario_from_json(bad.as_ptr(), &mut s) }, NaStatus::Validation);
    assert!(s.is_null());
    assert!(last_error().contains("parse error"));

    assert_eq!(unsafe { na_scenario_from_json(ptr::null(), &mut s) }, NaStatus::InvalidArgument);
    assert_eq!(unsafe { na_scenario_from_json(bad.as_ptr(), ptr::null_mut()) }, NaStatus::InvalidArgument);

    let fig1 = fixture("fig1");
    let mut o = ptr::null_mut();
    let unknown = CString::new("nope").unwrap();
    assert_eq!(unsafe { na_run(fig1, unknown.as_ptr(), ptr::null(), 0, &mut o) }, NaStatus::InvalidArgument);
    assert!(last_error().contains("nope"));
    let nsa = CString::new("nsa").unwrap();
    assert_eq!(unsafe { na_run(fig1, nsa.as_ptr(), ptr::null(), 0, &mut o) }, NaStatus::Validation);
    assert!(o.is_null());
    unsafe { na_scenario_free(fig1) };

    // Freeing null handles is a no-op.
    unsafe {
        na_scenario_free(ptr::null_mut());
        na_outcome_free(ptr::null_mut());
        na_string_free(ptr::null_mut());
    }
    assert_eq!(na_abi_version(), NA_ABI_VERSION);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/netauction.h");
    for f in [
        "na_abi_version",
        "na_last_error_message",
        "na_scenario_from_json",
        "na_scenario_fixture",
        "na_scenario_to_json",
        "na_scenario_agent_count",
        "na_scenario_free",
        "na_run",
        "na_outcome_to_json",
        "na_outcome_revenue",
        "na_outcome_free",
        "na_audit",
        "na_string_free",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct NaScenario NaScenario;"));
    assert!(header.contains("NA_STATUS_UNBOUNDED_PAYMENT = 4"));
}
