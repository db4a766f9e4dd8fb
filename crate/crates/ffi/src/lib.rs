//! C ABI over the netauction engine.
//!
//! Scenarios and outcomes live behind opaque handles. Every fallible call
//! returns an [`NaStatus`]; on failure a message is available from
//! [`na_last_error_message`] on the same thread. Strings returned to the
//! caller are UTF-8, NUL-terminated, and must be released with
//! [`na_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use netauction::audit::{parse_axioms, AuditConfig, AuditError, Auditor};
use netauction::io::{reports_from_json, scenario_from_json, scenario_to_json, IoError, ResultReport};
use netauction::{fixtures, Mechanism, MechanismError, Scenario};

/// Bumped on any incompatible change to the functions below.
pub const NA_ABI_VERSION: u32 = 1;

/// Result codes. The numeric values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NaStatus {
    Ok = 0,
    /// An audit ran and at least one axiom failed.
    AuditFailed = 1,
    /// Null pointer, bad UTF-8, unknown mechanism or axiom.
    InvalidArgument = 2,
    /// Malformed or inconsistent scenario or reports.
    Validation = 3,
    /// The mechanism would charge an unbounded payment.
    UnboundedPayment = 4,
    /// The audit exceeded its evaluation budget.
    SpaceTooLarge = 5,
    /// Internal error; the library caught a panic.
    Internal = 6,
}

/// Opaque scenario handle.
pub struct NaScenario {
    inner: Scenario,
}

/// Opaque outcome handle.
pub struct NaOutcome {
    report: ResultReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Fail(NaStatus, String);

impl From<IoError> for Fail {
    fn from(e: IoError) -> Self {
        Fail(NaStatus::Validation, e.to_string())
    }
}

impl From<MechanismError> for Fail {
    fn from(e: MechanismError) -> Self {
        let status = match e {
            MechanismError::UnboundedPayment { .. } => NaStatus::UnboundedPayment,
            _ => NaStatus::Validation,
        };
        Fail(status, e.to_string())
    }
}

impl From<AuditError> for Fail {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::SpaceTooLarge { .. } => Fail(NaStatus::SpaceTooLarge, e.to_string()),
            AuditError::Mechanism(m) => m.into(),
        }
    }
}

fn guard(f: impl FnOnce() -> Result<NaStatus, Fail>) -> NaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error");
            NaStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(NaStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NaStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<NaStatus, Fail> {
    let c = CString::new(s).map_err(|_| Fail(NaStatus::Internal, "interior NUL in output".into()))?;
    unsafe { *out = c.into_raw() };
    Ok(NaStatus::Ok)
}

fn check_out<T>(out: *mut *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(NaStatus::InvalidArgument, "output pointer is null".into()));
    }
    unsafe { *out = ptr::null_mut() };
    Ok(())
}

unsafe fn scenario<'a>(s: *const NaScenario) -> Result<&'a Scenario, Fail> {
    s.as_ref()
        .map(|s| &s.inner)
        .ok_or_else(|| Fail(NaStatus::InvalidArgument, "scenario is null".into()))
}

fn mechanism(id: &str, explore_k: u32) -> Result<Mechanism, Fail> {
    Mechanism::by_id(id, explore_k as usize)
        .ok_or_else(|| Fail(NaStatus::InvalidArgument, format!("unknown mechanism `{id}`")))
}

#[no_mangle]
pub extern "C" fn na_abi_version() -> u32 {
    NA_ABI_VERSION
}

/// The message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn na_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn na_scenario_from_json(json: *const c_char, out: *mut *mut NaScenario) -> NaStatus {
    guard(|| {
        check_out(out)?;
        let inner = scenario_from_json(text(json, "json")?)?;
        *out = Box::into_raw(Box::new(NaScenario { inner }));
        Ok(NaStatus::Ok)
    })
}

/// Loads a bundled example scenario by name, e.g. `"fig1"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn na_scenario_fixture(name: *const c_char, out: *mut *mut NaScenario) -> NaStatus {
    guard(|| {
        check_out(out)?;
        let name = text(name, "name")?;
        let src = fixtures::source(name)
            .ok_or_else(|| Fail(NaStatus::InvalidArgument, format!("unknown fixture `{name}`")))?;
        let inner = scenario_from_json(src)?;
        *out = Box::into_raw(Box::new(NaScenario { inner }));
        Ok(NaStatus::Ok)
    })
}

/// Serializes a scenario back to its JSON form.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn na_scenario_to_json(scenario_: *const NaScenario, out: *mut *mut c_char) -> NaStatus {
    guard(|| {
        check_out(out)?;
        out_string(scenario_to_json(scenario(scenario_)?), out)
    })
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn na_scenario_agent_count(scenario_: *const NaScenario) -> usize {
    scenario_.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `scenario` must be null or come from this library, and not be used after.
#[no_mangle]
pub unsafe extern "C" fn na_scenario_free(scenario_: *mut NaScenario) {
    if !scenario_.is_null() {
        drop(Box::from_raw(scenario_));
    }
}

/// Runs a mechanism. `reports_json` may be null for truthful reports.
/// `explore_k` only affects `exploratory-2`; pass 0 for the default.
///
/// # Safety
/// Pointers must be valid as described; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn na_run(
    scenario_: *const NaScenario,
    mechanism_id: *const c_char,
    reports_json: *const c_char,
    explore_k: u32,
    out: *mut *mut NaOutcome,
) -> NaStatus {
    guard(|| {
        check_out(out)?;
        let s = scenario(scenario_)?;
        let id = text(mechanism_id, "mechanism")?;
        let mech = mechanism(id, if explore_k == 0 { 2 } else { explore_k })?;
        let reports = if reports_json.is_null() {
            s.truthful()
        } else {
            reports_from_json(s, text(reports_json, "reports")?)?
        };
        let outcome = mech.run(s, &reports)?;
        let report = ResultReport::new(id, s, &outcome);
        *out = Box::into_raw(Box::new(NaOutcome { report }));
        Ok(NaStatus::Ok)
    })
}

/// The outcome as a JSON result report.
///
/// # Safety
/// `outcome` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn na_outcome_to_json(outcome: *const NaOutcome, out: *mut *mut c_char) -> NaStatus {
    guard(|| {
        check_out(out)?;
        let o = outcome
            .as_ref()
            .ok_or_else(|| Fail(NaStatus::InvalidArgument, "outcome is null".into()))?;
        out_string(o.report.to_json(), out)
    })
}

/// Revenue as an exact amount string such as `"-203"` or `"7/2"`.
///
/// # Safety
/// `outcome` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn na_outcome_revenue(outcome: *const NaOutcome, out: *mut *mut c_char) -> NaStatus {
    guard(|| {
        check_out(out)?;
        let o = outcome
            .as_ref()
            .ok_or_else(|| Fail(NaStatus::InvalidArgument, "outcome is null".into()))?;
        out_string(o.report.revenue.to_string(), out)
    })
}

/// # Safety
/// `outcome` must be null or come from this library, and not be used after.
#[no_mangle]
pub unsafe extern "C" fn na_outcome_free(outcome: *mut NaOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Audits a mechanism against a comma-separated axiom list and writes the
/// verdicts as JSON. Returns `Ok` when every axiom passes and `AuditFailed`
/// otherwise; both fill `out`. A zero `budget` uses the default.
///
/// # Safety
/// Pointers must be valid as described; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn na_audit(
    scenario_: *const NaScenario,
    mechanism_id: *const c_char,
    axioms: *const c_char,
    budget: u64,
    out: *mut *mut c_char,
) -> NaStatus {
    guard(|| {
        check_out(out)?;
        let s = scenario(scenario_)?;
        let mech = mechanism(text(mechanism_id, "mechanism")?, 2)?;
        let axioms = parse_axioms(text(axioms, "axioms")?).map_err(|e| Fail(NaStatus::InvalidArgument, e))?;
        let mut config = AuditConfig::default();
        if budget > 0 {
            config.budget = budget;
        }
        let verdicts = Auditor::new(&mech, s, config)?.audit(&axioms)?;
        let pass = verdicts.iter().all(|v| v.pass);
        let doc = serde_json::json!({
            "mechanism": mech.id(),
            "pass": pass,
            "verdicts": verdicts.iter().map(|v| v.to_json(s)).collect::<Vec<_>>(),
        });
        out_string(doc.to_string(), out)?;
        Ok(if pass { NaStatus::Ok } else { NaStatus::AuditFailed })
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn na_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
