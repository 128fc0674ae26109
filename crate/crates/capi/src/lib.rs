//! C ABI over the ansatz search lab. Handles are opaque pointers owned by
//! Rust; every fallible call returns a `QasStatus` (or NULL) and leaves a
//! message for `qas_last_error` on the calling thread. Strings returned by
//! `qas_*` calls belong to the caller and are released with
//! `qas_string_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qas_core::ansatz::{build_circuit, parse_proposal, render_proposal, AnsatzSpec};
use qas_core::campaign::{make_proposer, run_campaign_from};
use qas_core::config::load_config;
use qas_core::metrics::kl_divergence;
use qas_core::report::{emit_report, ReportFormat};
use qas_core::sim::StateVector;
use qas_core::storage::{init_log_dir, persist_iteration};

/// Result of a `qas_*` call. Anything but `Ok` leaves a message for
/// `qas_last_error`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QasStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// Arguments were readable but outside the domain (bad length, bad
    /// qubit count, non-UTF-8 text, ...).
    InvalidArgument = 2,
    /// Text did not match the proposal grammar.
    ParseFailed = 3,
    /// The spec could not be expanded into a circuit.
    BuildFailed = 4,
    /// Training or the campaign loop failed.
    TrainFailed = 5,
    /// Config or log I/O failed.
    IoFailed = 6,
    /// A panic was caught at the boundary; state may be stale.
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).expect("NULs stripped above");
    });
}

fn fail(status: QasStatus, message: impl std::fmt::Display) -> QasStatus {
    set_error(message);
    status
}

/// Runs `f`, converting a panic into `Internal` instead of unwinding into
/// the caller.
fn guarded(f: impl FnOnce() -> QasStatus) -> QasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(QasStatus::Internal, "internal panic"),
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string or NULL.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, QasStatus> {
    if text.is_null() {
        return Err(fail(QasStatus::NullPointer, "string argument is NULL"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(QasStatus::InvalidArgument, "string argument is not UTF-8"))
}

fn leak_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .expect("NULs stripped above")
        .into_raw()
}

/// Crate version as a static string; never freed.
#[no_mangle]
pub extern "C" fn qas_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message from the most recent failing call on this thread. Empty when
/// nothing failed yet. Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn qas_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by a `qas_*` call.
///
/// # Safety
/// `text` must be a pointer previously returned by this library and not
/// yet freed, or NULL.
#[no_mangle]
pub unsafe extern "C" fn qas_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// An ansatz specification: the ordered block tag list plus per-block
/// TwoLocal settings.
pub struct QasAnsatz {
    spec: AnsatzSpec,
}

/// Parses a proposal reply (the `improved_ansatz_list = [...]` grammar,
/// including `twolocal_config` lines). Returns NULL on failure.
///
/// # Safety
/// `reply` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_parse(reply: *const c_char) -> *mut QasAnsatz {
    let mut out = ptr::null_mut();
    guarded(|| {
        let text = match read_str(reply) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_proposal(text) {
            Ok(spec) => {
                out = Box::into_raw(Box::new(QasAnsatz { spec }));
                QasStatus::Ok
            }
            Err(e) => fail(QasStatus::ParseFailed, e),
        }
    });
    out
}

/// Builds an ansatz from raw block tags (1..=4; a TwoLocal block needs
/// settings, so tag 5 must go through `qas_ansatz_parse`). Returns NULL
/// on failure.
///
/// # Safety
/// `tags` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_from_tags(tags: *const u8, len: usize) -> *mut QasAnsatz {
    let mut out = ptr::null_mut();
    guarded(|| {
        if tags.is_null() {
            return fail(QasStatus::NullPointer, "tags is NULL");
        }
        let tags = std::slice::from_raw_parts(tags, len);
        match AnsatzSpec::from_tags(tags) {
            Ok(spec) => {
                out = Box::into_raw(Box::new(QasAnsatz { spec }));
                QasStatus::Ok
            }
            Err(e) => fail(QasStatus::InvalidArgument, e),
        }
    });
    out
}

/// Renders the spec back into the proposal grammar. Free the result with
/// `qas_string_free`. Returns NULL on failure.
///
/// # Safety
/// `ansatz` must be a live pointer from a `qas_ansatz_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_render(ansatz: *const QasAnsatz) -> *mut c_char {
    if ansatz.is_null() {
        fail(QasStatus::NullPointer, "ansatz is NULL");
        return ptr::null_mut();
    }
    leak_string(render_proposal(&(*ansatz).spec))
}

/// Number of blocks in the spec. Returns 0 for NULL.
///
/// # Safety
/// `ansatz` must be a live pointer from a `qas_ansatz_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_block_count(ansatz: *const QasAnsatz) -> usize {
    if ansatz.is_null() {
        return 0;
    }
    (*ansatz).spec.tags().len()
}

/// Trainable parameter count of the expanded circuit on `n_qubits`.
///
/// # Safety
/// `ansatz` must be live; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_param_count(
    ansatz: *const QasAnsatz,
    n_qubits: usize,
    out: *mut usize,
) -> QasStatus {
    circuit_measure(ansatz, n_qubits, out, |c| c.param_count())
}

/// Greedy-layered depth of the expanded circuit on `n_qubits`.
///
/// # Safety
/// `ansatz` must be live; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_depth(
    ansatz: *const QasAnsatz,
    n_qubits: usize,
    out: *mut usize,
) -> QasStatus {
    circuit_measure(ansatz, n_qubits, out, |c| c.depth())
}

unsafe fn circuit_measure(
    ansatz: *const QasAnsatz,
    n_qubits: usize,
    out: *mut usize,
    measure: impl Fn(&qas_core::sim::Circuit) -> usize,
) -> QasStatus {
    guarded(|| {
        if ansatz.is_null() || out.is_null() {
            return fail(QasStatus::NullPointer, "ansatz or out is NULL");
        }
        match build_circuit(&(*ansatz).spec, n_qubits) {
            Ok(circuit) => {
                *out = measure(&circuit);
                QasStatus::Ok
            }
            Err(e) => fail(QasStatus::BuildFailed, e),
        }
    })
}

/// Simulates the generator: |+...+> through the circuit at angles
/// `theta`, writing the 2^n_qubits measurement probabilities to `out`.
/// `theta_len` must equal the circuit's parameter count and `out_len`
/// must equal 2^n_qubits.
///
/// # Safety
/// `ansatz` must be live; `theta` must point to `theta_len` doubles;
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_probabilities(
    ansatz: *const QasAnsatz,
    n_qubits: usize,
    theta: *const f64,
    theta_len: usize,
    out: *mut f64,
    out_len: usize,
) -> QasStatus {
    guarded(|| {
        if ansatz.is_null() || theta.is_null() || out.is_null() {
            return fail(QasStatus::NullPointer, "ansatz, theta, or out is NULL");
        }
        let circuit = match build_circuit(&(*ansatz).spec, n_qubits) {
            Ok(c) => c,
            Err(e) => return fail(QasStatus::BuildFailed, e),
        };
        if theta_len != circuit.param_count() {
            return fail(
                QasStatus::InvalidArgument,
                format!(
                    "theta_len is {theta_len} but the circuit takes {}",
                    circuit.param_count()
                ),
            );
        }
        if out_len != 1usize << n_qubits {
            return fail(
                QasStatus::InvalidArgument,
                format!("out_len is {out_len} but 2^n_qubits is {}", 1usize << n_qubits),
            );
        }
        let theta = std::slice::from_raw_parts(theta, theta_len);
        let state = match StateVector::plus(n_qubits)
            .and_then(|s| s.apply_circuit(&circuit, theta))
        {
            Ok(s) => s,
            Err(e) => return fail(QasStatus::BuildFailed, e),
        };
        let probs = state.probabilities();
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&probs);
        QasStatus::Ok
    })
}

/// Releases an ansatz handle.
///
/// # Safety
/// `ansatz` must be a pointer from a `qas_ansatz_*` constructor, not yet
/// freed, or NULL.
#[no_mangle]
pub unsafe extern "C" fn qas_ansatz_free(ansatz: *mut QasAnsatz) {
    if !ansatz.is_null() {
        drop(Box::from_raw(ansatz));
    }
}

/// KL divergence between two length-`len` distributions (natural log,
/// zero-target clamp).
///
/// # Safety
/// `p` and `q` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qas_kl_divergence(
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> QasStatus {
    guarded(|| {
        if p.is_null() || q.is_null() || out.is_null() {
            return fail(QasStatus::NullPointer, "p, q, or out is NULL");
        }
        let p = std::slice::from_raw_parts(p, len);
        let q = std::slice::from_raw_parts(q, len);
        match kl_divergence(p, q) {
            Ok(kl) => {
                *out = kl;
                QasStatus::Ok
            }
            Err(e) => fail(QasStatus::InvalidArgument, e),
        }
    })
}

/// Runs a whole campaign from a TOML config file, logging every iteration
/// into `log_dir` (created; must not already hold a log).
///
/// # Safety
/// `config_path` and `log_dir` must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn qas_campaign_run(
    config_path: *const c_char,
    log_dir: *const c_char,
) -> QasStatus {
    guarded(|| {
        let config_path = match read_str(config_path) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let log_dir = match read_str(log_dir) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let cfg = match load_config(Path::new(config_path)) {
            Ok(cfg) => cfg,
            Err(e) => return fail(QasStatus::IoFailed, e),
        };
        if let Err(e) = init_log_dir(Path::new(log_dir), &cfg) {
            return fail(QasStatus::IoFailed, e);
        }
        let mut proposer = match make_proposer(&cfg) {
            Ok(p) => p,
            Err(e) => return fail(QasStatus::InvalidArgument, e),
        };
        let mut persist_error = None;
        let mut last = std::time::Instant::now();
        let result = run_campaign_from(&cfg, proposer.as_mut(), Vec::new(), &mut |record| {
            let now = std::time::Instant::now();
            let seconds = now.duration_since(last).as_secs_f64();
            last = now;
            if persist_error.is_none() {
                if let Err(e) = persist_iteration(Path::new(log_dir), record, seconds) {
                    persist_error = Some(e);
                }
            }
        });
        if let Some(e) = persist_error {
            return fail(QasStatus::IoFailed, e);
        }
        match result {
            Ok(_) => QasStatus::Ok,
            Err(e) => fail(QasStatus::TrainFailed, e),
        }
    })
}

/// Renders the CSV report for a campaign log. Free the result with
/// `qas_string_free`. Returns NULL on failure.
///
/// # Safety
/// `log_dir` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qas_report_csv(log_dir: *const c_char) -> *mut c_char {
    let mut out = ptr::null_mut();
    guarded(|| {
        let log_dir = match read_str(log_dir) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match emit_report(Path::new(log_dir), ReportFormat::Csv) {
            Ok(text) => {
                out = leak_string(text);
                QasStatus::Ok
            }
            Err(e) => fail(QasStatus::IoFailed, e),
        }
    });
    out
}
