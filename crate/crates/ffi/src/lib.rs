//! C ABI over oran-core.
//!
//! Every fallible call returns an [`OranStatus`]; on failure the message is
//! available from [`oran_last_error`] on the same thread. Handles are
//! opaque and owned by the caller, who releases each with its `_free`
//! function. Strings returned as `char *` are released with
//! [`oran_string_free`]; `const char *` results are borrowed from the
//! handle and live as long as it does.

use oran_core::e2ap::{self, E2apPdu};
use oran_core::harness::{self, RunOptions, RunReport, Scenario};
use oran_core::sim::config::SimConfig;
use oran_core::sim::Sim;
use oran_core::xapps::baseline_allocation;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OranStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    MalformedPdu = 3,
    EncodeFailed = 4,
    InvalidScenario = 5,
    RunFailed = 6,
    BufferTooSmall = 7,
    InvalidArgument = 8,
    Panic = 9,
}

/// Decoded E2AP PDU.
pub struct OranPdu(E2apPdu);

/// Simulated RAN stepped by the caller.
pub struct OranSim(Sim);

/// Finished closed-loop scenario run.
pub struct OranRun {
    report: RunReport,
    hash: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(status: OranStatus, msg: impl Into<String>) -> OranStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `Panic` so it never crosses the boundary.
fn guard(f: impl FnOnce() -> OranStatus) -> OranStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(OranStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, OranStatus> {
    if p.is_null() {
        return Err(fail(OranStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(OranStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread; empty if none.
#[no_mangle]
pub extern "C" fn oran_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn oran_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Decodes one framed E2AP PDU.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oran_pdu_decode(data: *const u8, len: usize, out: *mut *mut OranPdu) -> OranStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(OranStatus::NullArgument, "`data` or `out` is null");
        }
        let bytes = std::slice::from_raw_parts(data, len);
        match e2ap::decode(bytes) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(OranPdu(p)));
                OranStatus::Ok
            }
            Err(e) => fail(OranStatus::MalformedPdu, e.to_string()),
        }
    })
}

/// Encodes `pdu` into `buf`. `*written` receives the encoded length, also
/// when `cap` is too small (status `BufferTooSmall`), so callers can size
/// a buffer with a first call passing `cap` 0.
///
/// # Safety
/// `pdu` must be a live handle; `buf` must hold `cap` writable bytes (may be
/// null when `cap` is 0); `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oran_pdu_encode(
    pdu: *const OranPdu,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> OranStatus {
    guard(|| {
        if pdu.is_null() || written.is_null() || (buf.is_null() && cap > 0) {
            return fail(OranStatus::NullArgument, "`pdu`, `buf` or `written` is null");
        }
        let bytes = match e2ap::encode(&(*pdu).0) {
            Ok(b) => b,
            Err(e) => return fail(OranStatus::EncodeFailed, e.to_string()),
        };
        *written = bytes.len();
        if bytes.len() > cap {
            return fail(OranStatus::BufferTooSmall, format!("need {} bytes", bytes.len()));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        OranStatus::Ok
    })
}

/// # Safety
/// `pdu` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_pdu_procedure_code(pdu: *const OranPdu) -> u16 {
    if pdu.is_null() {
        return 0;
    }
    (*pdu).0.procedure_code
}

/// Field-per-line text form of the PDU; free with `oran_string_free`.
///
/// # Safety
/// `pdu` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_pdu_render(pdu: *const OranPdu) -> *mut c_char {
    if pdu.is_null() {
        set_error("`pdu` is null");
        return ptr::null_mut();
    }
    owned_string(e2ap::render_debug(&(*pdu).0))
}

/// # Safety
/// `pdu` must come from `oran_pdu_decode`, or be null.
#[no_mangle]
pub unsafe extern "C" fn oran_pdu_free(pdu: *mut OranPdu) {
    if !pdu.is_null() {
        drop(Box::from_raw(pdu));
    }
}

/// Builds a simulator from the TOML topology (`[[nodes]]`, `[[cells]]`,
/// `[[ues]]`).
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oran_sim_new(config_toml: *const c_char, seed: u64, out: *mut *mut OranSim) -> OranStatus {
    guard(|| {
        if out.is_null() {
            return fail(OranStatus::NullArgument, "`out` is null");
        }
        let text = match str_arg(config_toml, "config_toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg: SimConfig = match toml::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(OranStatus::InvalidScenario, e.to_string()),
        };
        match Sim::new(&cfg, seed) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(OranSim(s)));
                OranStatus::Ok
            }
            Err(e) => fail(OranStatus::InvalidScenario, e.to_string()),
        }
    })
}

/// Advances the simulator by `ticks` milliseconds.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_sim_step(sim: *mut OranSim, ticks: u64) -> OranStatus {
    guard(|| {
        if sim.is_null() {
            return fail(OranStatus::NullArgument, "`sim` is null");
        }
        let s = &mut (*sim).0;
        s.step_n(ticks);
        s.take_events();
        OranStatus::Ok
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_sim_now(sim: *const OranSim) -> u64 {
    if sim.is_null() {
        return 0;
    }
    (*sim).0.now()
}

/// Hex SHA-256 of the simulator state; free with `oran_string_free`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_sim_state_hash(sim: *const OranSim) -> *mut c_char {
    if sim.is_null() {
        set_error("`sim` is null");
        return ptr::null_mut();
    }
    owned_string((*sim).0.state_hash())
}

/// # Safety
/// `sim` must come from `oran_sim_new`, or be null.
#[no_mangle]
pub unsafe extern "C" fn oran_sim_free(sim: *mut OranSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs a bundled scenario by name, or a scenario file by path, in process.
/// `seed` overrides the scenario's seed when `use_seed` is true.
///
/// # Safety
/// `scenario` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oran_run_scenario(
    scenario: *const c_char,
    seed: u64,
    use_seed: bool,
    out: *mut *mut OranRun,
) -> OranStatus {
    guard(|| {
        if out.is_null() {
            return fail(OranStatus::NullArgument, "`out` is null");
        }
        let name = match str_arg(scenario, "scenario") {
            Ok(n) => n,
            Err(s) => return s,
        };
        let sc = match Scenario::resolve(name) {
            Ok(s) => s,
            Err(e) => return fail(OranStatus::InvalidScenario, e.to_string()),
        };
        let mut opts = RunOptions::default();
        opts.seed = use_seed.then_some(seed);
        match harness::run(&sc, &opts) {
            Ok(report) => {
                let hash = CString::new(report.state_hash.clone()).unwrap_or_default();
                *out = Box::into_raw(Box::new(OranRun { report, hash }));
                OranStatus::Ok
            }
            Err(e) => fail(OranStatus::RunFailed, e.to_string()),
        }
    })
}

/// Final state hash, borrowed from the handle.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_run_state_hash(run: *const OranRun) -> *const c_char {
    if run.is_null() {
        return ptr::null();
    }
    (*run).hash.as_ptr()
}

/// Share of evaluation windows after warmup in which any slice missed its
/// objective.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_run_violation_rate(run: *const OranRun) -> f64 {
    if run.is_null() {
        return f64::NAN;
    }
    (*run).report.violation_rate()
}

/// The full run report as JSON; free with `oran_string_free`.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oran_run_report_json(run: *const OranRun) -> *mut c_char {
    if run.is_null() {
        set_error("`run` is null");
        return ptr::null_mut();
    }
    match serde_json::to_string(&(*run).report) {
        Ok(s) => owned_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// One CSV artifact by file name; null if the run produced no such file.
/// Free with `oran_string_free`.
///
/// # Safety
/// `run` must be a live handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn oran_run_file(run: *const OranRun, name: *const c_char) -> *mut c_char {
    if run.is_null() {
        set_error("`run` is null");
        return ptr::null_mut();
    }
    let Ok(name) = str_arg(name, "name") else {
        return ptr::null_mut();
    };
    match (*run).report.files.get(name) {
        Some(text) => owned_string(text.clone()),
        None => {
            set_error(format!("no file `{name}`"));
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `run` must come from `oran_run_scenario`, or be null.
#[no_mangle]
pub unsafe extern "C" fn oran_run_free(run: *mut OranRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Strict-priority PRB split of `capacity` over `n` slices given in
/// priority order (index 0 first).
///
/// # Safety
/// `demand` must hold `n` readable values and `split_out` `n` writable ones.
#[no_mangle]
pub unsafe extern "C" fn oran_baseline_split(
    demand: *const u32,
    n: usize,
    capacity: u32,
    split_out: *mut u32,
) -> OranStatus {
    guard(|| {
        if n == 0 {
            return fail(OranStatus::InvalidArgument, "no slices");
        }
        if demand.is_null() || split_out.is_null() {
            return fail(OranStatus::NullArgument, "`demand` or `split_out` is null");
        }
        let d = std::slice::from_raw_parts(demand, n);
        let order: Vec<usize> = (0..n).collect();
        let split = baseline_allocation(d, capacity, &order);
        ptr::copy_nonoverlapping(split.as_ptr(), split_out, n);
        OranStatus::Ok
    })
}
