//! C ABI for the mechanism laboratory.
//!
//! Conventions, mirrored in `include/seqprice.h`:
//! - Every fallible function returns a status code; `SEQ_OK` (0) means
//!   success and anything else is an error class. On error the out
//!   parameters are left untouched and a message is recorded per thread;
//!   read it with [`seq_last_error`].
//! - Handles (`SeqInstance`, `SeqPolicy`) are opaque. Release them with the
//!   matching `*_free`; the free functions accept null.
//! - Returned strings are NUL-terminated UTF-8 owned by the library.
//!   Release them with [`seq_string_free`]. Exact quantities come back as
//!   rational strings such as `"25/96"` so no precision is lost at the
//!   boundary.
//! - Instances and policies cross the boundary as JSON in the same dialect
//!   the command line tool reads and writes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use seqprice::evaluation::{
    audit_dsic, audit_expost_ir, audit_monotone_allocation, audit_price_bound,
    exact_expected_revenue, expected_osw, monte_carlo_revenue,
};
use seqprice::io::{instance_from_json, instance_to_json, policy_from_json, policy_to_json};
use seqprice::lp::{build_revenue_lp, revenue_upper_bound, solve_simplex};
use seqprice::mechanisms::{build_blind_k, make_dsic, policy_to_table, Policy};
use seqprice::rational::format_rational;
use seqprice::valuation::Instance;
use seqprice::Error;

pub const SEQ_OK: i32 = 0;
pub const SEQ_ERR_INVALID_ARGUMENT: i32 = 1;
pub const SEQ_ERR_INVALID_DISTRIBUTION: i32 = 2;
pub const SEQ_ERR_EMPTY_EVENT: i32 = 3;
pub const SEQ_ERR_UNSUPPORTED_INSTANCE: i32 = 4;
pub const SEQ_ERR_CAPACITY: i32 = 5;
pub const SEQ_ERR_COVERAGE: i32 = 6;
pub const SEQ_ERR_FORMAT: i32 = 7;
pub const SEQ_ERR_INTERNAL: i32 = 8;
pub const SEQ_ERR_IO: i32 = 9;
pub const SEQ_ERR_NULL_POINTER: i32 = 10;
pub const SEQ_ERR_UTF8: i32 = 11;

/// Opaque valuation instance handle.
pub struct SeqInstance(Instance);

/// Opaque policy handle.
pub struct SeqPolicy(Policy);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = owned);
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => SEQ_ERR_INVALID_ARGUMENT,
        Error::InvalidDistribution(_) => SEQ_ERR_INVALID_DISTRIBUTION,
        Error::EmptyEvent(_) => SEQ_ERR_EMPTY_EVENT,
        Error::UnsupportedInstance(_) => SEQ_ERR_UNSUPPORTED_INSTANCE,
        Error::Capacity(_) => SEQ_ERR_CAPACITY,
        Error::Coverage(_) => SEQ_ERR_COVERAGE,
        Error::Format(_) => SEQ_ERR_FORMAT,
        Error::Internal(_) => SEQ_ERR_INTERNAL,
        Error::Io(_) => SEQ_ERR_IO,
    }
}

fn fail(e: &Error) -> i32 {
    set_error(&e.to_string());
    code_of(e)
}

fn null_arg(what: &str) -> i32 {
    set_error(&format!("null pointer: {what}"));
    SEQ_ERR_NULL_POINTER
}

/// Runs `body`, translating panics into `SEQ_ERR_INTERNAL` so they never
/// unwind across the boundary.
fn guarded(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            SEQ_ERR_INTERNAL
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, i32> {
    if p.is_null() {
        return Err(null_arg(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        SEQ_ERR_UTF8
    })
}

fn write_string(s: String, out: *mut *mut c_char) -> i32 {
    let c = match CString::new(s.replace('\0', " ")) {
        Ok(c) => c,
        Err(_) => {
            set_error("string contained an interior NUL");
            return SEQ_ERR_INTERNAL;
        }
    };
    unsafe { *out = c.into_raw() };
    SEQ_OK
}

unsafe fn instance_ref<'a>(p: *const SeqInstance) -> Result<&'a Instance, i32> {
    if p.is_null() {
        return Err(null_arg("instance"));
    }
    Ok(&(*p).0)
}

unsafe fn policy_ref<'a>(p: *const SeqPolicy) -> Result<&'a Policy, i32> {
    if p.is_null() {
        return Err(null_arg("policy"));
    }
    Ok(&(*p).0)
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(code) => return code,
        }
    };
}

macro_rules! try_core {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail(&e),
        }
    };
}

/// Message for the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn seq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses an instance from JSON into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_instance_from_json(
    json: *const c_char,
    out: *mut *mut SeqInstance,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let text = try_ffi!(read_str(json, "json"));
        let inst = try_core!(instance_from_json(text));
        *out = Box::into_raw(Box::new(SeqInstance(inst)));
        SEQ_OK
    })
}

/// Serializes an instance back to canonical JSON.
///
/// # Safety
/// `inst` must be a live handle from this library and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_instance_to_json(
    inst: *const SeqInstance,
    out: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let inst = try_ffi!(instance_ref(inst));
        write_string(try_core!(instance_to_json(inst)), out)
    })
}

/// Number of buyers.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_instance_n(inst: *const SeqInstance, out: *mut usize) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let inst = try_ffi!(instance_ref(inst));
        *out = inst.dist.n();
        SEQ_OK
    })
}

/// Number of available items.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_instance_k(inst: *const SeqInstance, out: *mut usize) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let inst = try_ffi!(instance_ref(inst));
        *out = inst.k;
        SEQ_OK
    })
}

/// Releases an instance handle. Accepts null.
///
/// # Safety
/// `inst` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn seq_instance_free(inst: *mut SeqInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Parses a policy from JSON into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_policy_from_json(
    json: *const c_char,
    out: *mut *mut SeqPolicy,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let text = try_ffi!(read_str(json, "json"));
        let policy = try_core!(policy_from_json(text));
        *out = Box::into_raw(Box::new(SeqPolicy(policy)));
        SEQ_OK
    })
}

/// Serializes a policy back to JSON.
///
/// # Safety
/// `policy` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_policy_to_json(
    policy: *const SeqPolicy,
    out: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let policy = try_ffi!(policy_ref(policy));
        write_string(try_core!(policy_to_json(policy)), out)
    })
}

/// Releases a policy handle. Accepts null.
///
/// # Safety
/// `policy` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn seq_policy_free(policy: *mut SeqPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Builds the blind-offer policy for the instance from the optimal
/// allocation rule; with `dsic` nonzero, damps it into the strategyproof
/// variant.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_build_blind(
    inst: *const SeqInstance,
    dsic: i32,
    out: *mut *mut SeqPolicy,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let inst = try_ffi!(instance_ref(inst));
        let sol = solve_simplex(&build_revenue_lp(inst));
        let mut blind = try_core!(build_blind_k(inst, &sol.y));
        if dsic != 0 {
            blind = try_core!(make_dsic(&blind, &inst.dist));
        }
        *out = Box::into_raw(Box::new(SeqPolicy(Policy::Blind(blind))));
        SEQ_OK
    })
}

/// Exact expected revenue of the policy on the instance, as a rational
/// string.
///
/// # Safety
/// `policy` and `inst` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_exact_revenue(
    policy: *const SeqPolicy,
    inst: *const SeqInstance,
    out: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let policy = try_ffi!(policy_ref(policy));
        let inst = try_ffi!(instance_ref(inst));
        let rev = try_core!(exact_expected_revenue(policy, &inst.dist));
        write_string(format_rational(&rev), out)
    })
}

/// Monte Carlo revenue estimate with a normal-approximation 95% interval.
///
/// # Safety
/// `policy` and `inst` must be live handles; `mean` and `half_width_95`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn seq_mc_revenue(
    policy: *const SeqPolicy,
    inst: *const SeqInstance,
    trials: u64,
    seed: u64,
    mean: *mut f64,
    half_width_95: *mut f64,
) -> i32 {
    guarded(|| {
        if mean.is_null() || half_width_95.is_null() {
            return null_arg("mean/half_width_95");
        }
        let policy = try_ffi!(policy_ref(policy));
        let inst = try_ffi!(instance_ref(inst));
        let est = try_core!(monte_carlo_revenue(policy, &inst.dist, trials, seed));
        *mean = est.mean;
        *half_width_95 = est.half_width_95;
        SEQ_OK
    })
}

/// Expected optimal social welfare of the instance (best k values per
/// outcome), as a rational string.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_osw(inst: *const SeqInstance, out: *mut *mut c_char) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let inst = try_ffi!(instance_ref(inst));
        let osw = try_core!(expected_osw(&inst.dist, inst.k));
        write_string(format_rational(&osw), out)
    })
}

/// Upper bound on the revenue of any truthful mechanism for the instance,
/// as a rational string.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_lp_bound(inst: *const SeqInstance, out: *mut *mut c_char) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let inst = try_ffi!(instance_ref(inst));
        let bound = try_core!(revenue_upper_bound(inst));
        write_string(format_rational(&bound), out)
    })
}

/// Converts the policy to outcome-table form and runs the four
/// truthfulness audits, writing the total number of findings.
///
/// # Safety
/// `policy` and `inst` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seq_audit_count(
    policy: *const SeqPolicy,
    inst: *const SeqInstance,
    out: *mut u64,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return null_arg("out");
        }
        let policy = try_ffi!(policy_ref(policy));
        let inst = try_ffi!(instance_ref(inst));
        let table = try_core!(policy_to_table(policy, &inst.dist));
        let mut count = 0u64;
        count += try_core!(audit_dsic(&table, &inst.dist)).len() as u64;
        count += try_core!(audit_expost_ir(&table, &inst.dist)).len() as u64;
        count += try_core!(audit_monotone_allocation(&table, &inst.dist)).len() as u64;
        count += try_core!(audit_price_bound(&table, &inst.dist)).len() as u64;
        *out = count;
        SEQ_OK
    })
}

/// Releases a string returned by this library. Accepts null.
///
/// # Safety
/// `s` must be null or a string not freed before.
#[no_mangle]
pub unsafe extern "C" fn seq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
