//! Calls through the exported C functions with raw pointers, the way a
//! foreign caller would.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use seqprice::generators::gen_correlated_pair;
use seqprice::io::instance_to_json;
use seqprice_ffi::*;

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { seq_string_free(p) };
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(seq_last_error()) }.to_str().unwrap().to_owned()
}

fn load_instance(json: &str) -> *mut SeqInstance {
    let json = CString::new(json).unwrap();
    let mut inst: *mut SeqInstance = ptr::null_mut();
    let code = unsafe { seq_instance_from_json(json.as_ptr(), &mut inst) };
    assert_eq!(code, SEQ_OK, "{}", last_error());
    inst
}

#[test]
fn revenue_pipeline_round_trips_exact_values() {
    let pair = gen_correlated_pair(4, 1).unwrap();
    let inst = load_instance(&instance_to_json(&pair).unwrap());

    let mut n = 0usize;
    let mut k = 0usize;
    unsafe {
        assert_eq!(seq_instance_n(inst, &mut n), SEQ_OK);
        assert_eq!(seq_instance_k(inst, &mut k), SEQ_OK);
    }
    assert_eq!((n, k), (2, 1));

    let mut json_out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { seq_instance_to_json(inst, &mut json_out) }, SEQ_OK);
    assert_eq!(take_string(json_out), instance_to_json(&pair).unwrap());

    let mut policy: *mut SeqPolicy = ptr::null_mut();
    assert_eq!(unsafe { seq_build_blind(inst, 0, &mut policy) }, SEQ_OK);

    let mut s: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { seq_exact_revenue(policy, inst, &mut s) }, SEQ_OK);
    assert_eq!(take_string(s), "25/96");
    assert_eq!(unsafe { seq_osw(inst, &mut s) }, SEQ_OK);
    assert_eq!(take_string(s), "25/48");
    assert_eq!(unsafe { seq_lp_bound(inst, &mut s) }, SEQ_OK);
    assert_eq!(take_string(s), "25/48");

    let mut dsic_policy: *mut SeqPolicy = ptr::null_mut();
    assert_eq!(unsafe { seq_build_blind(inst, 1, &mut dsic_policy) }, SEQ_OK);
    let mut findings = u64::MAX;
    assert_eq!(unsafe { seq_audit_count(dsic_policy, inst, &mut findings) }, SEQ_OK);
    assert_eq!(findings, 0);

    let mut policy_json: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { seq_policy_to_json(dsic_policy, &mut policy_json) }, SEQ_OK);
    let text = take_string(policy_json);
    let reparsed = CString::new(text).unwrap();
    let mut back: *mut SeqPolicy = ptr::null_mut();
    assert_eq!(unsafe { seq_policy_from_json(reparsed.as_ptr(), &mut back) }, SEQ_OK);
    let mut rev_a: *mut c_char = ptr::null_mut();
    let mut rev_b: *mut c_char = ptr::null_mut();
    unsafe {
        assert_eq!(seq_exact_revenue(dsic_policy, inst, &mut rev_a), SEQ_OK);
        assert_eq!(seq_exact_revenue(back, inst, &mut rev_b), SEQ_OK);
    }
    assert_eq!(take_string(rev_a), take_string(rev_b));

    unsafe {
        seq_policy_free(back);
        seq_policy_free(dsic_policy);
        seq_policy_free(policy);
        seq_instance_free(inst);
        seq_policy_free(ptr::null_mut());
        seq_instance_free(ptr::null_mut());
        seq_string_free(ptr::null_mut());
    }
}

#[test]
fn simulation_is_seed_stable_across_calls() {
    let inst = load_instance(&instance_to_json(&gen_correlated_pair(4, 2).unwrap()).unwrap());
    let mut policy: *mut SeqPolicy = ptr::null_mut();
    assert_eq!(unsafe { seq_build_blind(inst, 1, &mut policy) }, SEQ_OK);

    let mut run = |seed: u64| {
        let (mut mean, mut hw) = (0f64, 0f64);
        let code = unsafe { seq_mc_revenue(policy, inst, 300, seed, &mut mean, &mut hw) };
        assert_eq!(code, SEQ_OK, "{}", last_error());
        (mean, hw)
    };
    assert_eq!(run(7), run(7));

    unsafe {
        seq_policy_free(policy);
        seq_instance_free(inst);
    }
}

#[test]
fn audit_counts_untruthful_tables() {
    let inst = load_instance(r#"{"n": 1, "k": 1, "support": [["1"], ["2"]], "mass": ["1/2", "1/2"]}"#);
    let pol_json = CString::new(
        r#"{"kind": "direct", "n": 1, "k": 1, "rows": [
            {"profile": ["1"], "x": ["1"], "p": ["1"]},
            {"profile": ["2"], "x": ["1"], "p": ["2"]}]}"#,
    )
    .unwrap();
    let mut policy: *mut SeqPolicy = ptr::null_mut();
    assert_eq!(unsafe { seq_policy_from_json(pol_json.as_ptr(), &mut policy) }, SEQ_OK);
    let mut findings = 0u64;
    assert_eq!(unsafe { seq_audit_count(policy, inst, &mut findings) }, SEQ_OK);
    assert_eq!(findings, 2);
    unsafe {
        seq_policy_free(policy);
        seq_instance_free(inst);
    }
}

#[test]
fn error_paths_set_codes_and_messages() {
    let mut inst: *mut SeqInstance = ptr::null_mut();

    let code = unsafe { seq_instance_from_json(ptr::null(), &mut inst) };
    assert_eq!(code, SEQ_ERR_NULL_POINTER);
    assert!(last_error().contains("null pointer"), "{}", last_error());
    assert!(inst.is_null(), "out must be untouched on error");

    let bad = CString::new("{not json").unwrap();
    let code = unsafe { seq_instance_from_json(bad.as_ptr(), &mut inst) };
    assert_eq!(code, SEQ_ERR_FORMAT);
    assert!(inst.is_null());

    let bad_utf8 = [0xffu8, 0xfe, 0x00];
    let code = unsafe {
        seq_instance_from_json(bad_utf8.as_ptr() as *const c_char, &mut inst)
    };
    assert_eq!(code, SEQ_ERR_UTF8);

    // masses that do not sum to one are a distribution error, not a parse error
    let invalid = CString::new(r#"{"n": 1, "k": 1, "support": [["1"]], "mass": ["1/2"]}"#).unwrap();
    let code = unsafe { seq_instance_from_json(invalid.as_ptr(), &mut inst) };
    assert_eq!(code, SEQ_ERR_INVALID_DISTRIBUTION);
    assert!(!last_error().is_empty());

    let good = load_instance(r#"{"n": 1, "k": 1, "support": [["1"]], "mass": ["1"]}"#);
    let code = unsafe { seq_instance_to_json(good, ptr::null_mut()) };
    assert_eq!(code, SEQ_ERR_NULL_POINTER);
    unsafe { seq_instance_free(good) };
}
