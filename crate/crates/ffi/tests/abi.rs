use std::ffi::{c_char, CStr, CString};
use std::ptr;

use satlens_ffi::*;

fn last_error() -> String {
    let len = unsafe { satlens_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; len + 1];
    unsafe { satlens_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(satlens_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn entanglement_chain_round_trip() {
    let mut chain = ptr::null_mut();
    let status = unsafe { satlens_chain_entanglement(0.6, 120e3, 1_200e3, 800e-9, &mut chain) };
    assert_eq!(status, SatlensStatus::Ok);
    let mut count = 0usize;
    assert_eq!(unsafe { satlens_chain_relay_count(chain, &mut count) }, SatlensStatus::Ok);
    assert_eq!(count, 10);

    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { satlens_chain_run_gaussian(chain, 256, 4.0, &mut trace) }, SatlensStatus::Ok);
    let mut len = 0usize;
    assert_eq!(unsafe { satlens_trace_len(trace, &mut len) }, SatlensStatus::Ok);
    assert_eq!(len, 10);
    let (mut d, mut t, mut lt) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { satlens_trace_point(trace, 9, &mut d, &mut t, &mut lt) }, SatlensStatus::Ok);
    assert_eq!(d, 1_080e3);
    assert!((t.ln() - lt).abs() < 1e-12);
    let mut last = 0.0;
    assert_eq!(unsafe { satlens_trace_final_transmission(trace, &mut last) }, SatlensStatus::Ok);
    assert_eq!(last, t);
    assert!(t > 0.97 && t < 1.0, "{t}");

    assert_eq!(unsafe { satlens_trace_point(trace, 10, &mut d, ptr::null_mut(), ptr::null_mut()) }, SatlensStatus::OutOfRange);
    assert!(last_error().contains("index 10"));

    unsafe {
        satlens_trace_free(trace);
        satlens_chain_free(chain);
    }
}

#[test]
fn downlink_and_qubit_chains() {
    let mut chain = ptr::null_mut();
    assert_eq!(unsafe { satlens_chain_qubit(0.6, 80e3, 2_000e3, 1.0, 800e-9, &mut chain) }, SatlensStatus::Ok);
    assert_eq!(unsafe { satlens_chain_add_downlink(chain, 200e3, 0.6) }, SatlensStatus::Ok);
    unsafe { satlens_chain_free(chain) };
}

#[test]
fn errors_set_status_and_message() {
    let mut chain = ptr::null_mut();
    let status = unsafe { satlens_chain_entanglement(-1.0, 120e3, 1_200e3, 800e-9, &mut chain) };
    assert_eq!(status, SatlensStatus::InvalidArgument);
    assert!(chain.is_null());
    assert!(last_error().contains("d must be > 0"), "{}", last_error());

    let status = unsafe { satlens_chain_entanglement(0.6, 120e3, 1_200e3, 800e-9, ptr::null_mut()) };
    assert_eq!(status, SatlensStatus::NullPointer);
    let mut count = 0usize;
    assert_eq!(unsafe { satlens_chain_relay_count(ptr::null(), &mut count) }, SatlensStatus::NullPointer);
    unsafe {
        satlens_chain_free(ptr::null_mut());
        satlens_trace_free(ptr::null_mut());
    }
}

#[test]
fn truncated_message_is_terminated() {
    let mut chain = ptr::null_mut();
    unsafe { satlens_chain_entanglement(0.6, 0.0, 1.0, 800e-9, &mut chain) };
    let full = unsafe { satlens_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 8];
    let reported = unsafe { satlens_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(reported, full);
    assert_eq!(buf[7], 0);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 7);
}

#[test]
fn undersized_grid_reports_guard_band() {
    let mut chain = ptr::null_mut();
    assert_eq!(unsafe { satlens_chain_entanglement(0.6, 120e3, 1_200e3, 800e-9, &mut chain) }, SatlensStatus::Ok);
    let mut trace = ptr::null_mut();
    // A grid barely wider than the optic cannot hold the diverging beam.
    let status = unsafe { satlens_chain_run_gaussian(chain, 64, 1.05, &mut trace) };
    assert_eq!(status, SatlensStatus::GuardBand, "{}", last_error());
    assert!(trace.is_null());
    unsafe { satlens_chain_free(chain) };
}

#[test]
fn fried_parameter_and_scenario() {
    let mut r0 = 0.0;
    assert_eq!(unsafe { satlens_fried_parameter(200e3, 800e-9, 1.7e-14, 21.0, &mut r0) }, SatlensStatus::Ok);
    assert!(r0 > 0.01 && r0 < 1.0, "{r0}");
    assert_eq!(unsafe { satlens_fried_parameter(-1.0, 800e-9, 1.7e-14, 21.0, &mut r0) }, SatlensStatus::InvalidArgument);

    let toml = CString::new(
        "protocol = \"entanglement\"\nlambda = 800e-9\nd = 0.6\nL0 = 120e3\ntotal_distance = 1200e3\n[numerics]\ngrid_n = 128\noversize = 4\n",
    )
    .unwrap();
    let mut db = 0.0;
    assert_eq!(unsafe { satlens_scenario_total_db(toml.as_ptr(), &mut db) }, SatlensStatus::Ok);
    assert!(db > 9.9 && db < 10.5, "{db}");

    let bad = CString::new("protocol = \"entanglement\"\n").unwrap();
    assert_eq!(unsafe { satlens_scenario_total_db(bad.as_ptr(), &mut db) }, SatlensStatus::Config);
    assert!(last_error().contains("lambda"), "{}", last_error());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/satlens.h")).unwrap();
    for name in [
        "satlens_last_error_message",
        "satlens_version",
        "satlens_chain_entanglement",
        "satlens_chain_qubit",
        "satlens_chain_add_downlink",
        "satlens_chain_relay_count",
        "satlens_chain_free",
        "satlens_chain_run_gaussian",
        "satlens_trace_len",
        "satlens_trace_point",
        "satlens_trace_final_transmission",
        "satlens_trace_free",
        "satlens_fried_parameter",
        "satlens_scenario_total_db",
        "SATLENS_STATUS_GUARD_BAND",
        "typedef struct SatlensChain SatlensChain",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/satlens.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header])
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not found; skipping header compile check"),
        }
    }
}
