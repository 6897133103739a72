//! C ABI for the Clerical interpreter.
//!
//! Programs are exposed as opaque handles. Every fallible function returns a
//! [`ClericalStatus`]; on failure a message is available from
//! [`clerical_last_error`] on the calling thread. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`clerical_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clerical::eval::{run_with_restarts, Diagnostic, EvalConfig, DEFAULT_PRECISION, DEFAULT_PRECISION_CAP};
use clerical::numerics::Precision;
use clerical::oracle::denote_program;
use clerical::parser::parse_program;
use clerical::typecheck::{elaborate, TypedProgram};

/// Result codes. Values 0 to 6 match the exit codes of the command-line
/// interpreter.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClericalStatus {
    Ok = 0,
    Internal = 1,
    StaticError = 2,
    FragmentViolation = 3,
    Deadlock = 4,
    FuelExhausted = 5,
    PrecisionCap = 6,
    InvalidArgument = 8,
}

/// A parsed and typechecked program.
pub struct ClericalProgram {
    typed: TypedProgram,
}

/// Options for [`clerical_program_run`]. Obtain defaults from
/// [`clerical_run_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClericalRunOptions {
    /// Decimal digits printed for real results; at least 1.
    pub digits: u32,
    /// Initial working precision in bits; at least 2.
    pub precision: u64,
    /// Working precision at which to give up.
    pub max_precision: u64,
    /// Condition evaluations allowed per loop instance; 0 for unlimited.
    pub fuel: u64,
    /// Steps a guard may take before the next one is scheduled; at least 1.
    pub guard_budget: u64,
    /// When true, guard polling order is shuffled using `seed`.
    pub use_seed: bool,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).expect("interior NUL bytes were removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: ClericalStatus, message: impl Into<String>) -> ClericalStatus {
    set_error(message);
    status
}

/// Runs `f`, turning panics into [`ClericalStatus::Internal`].
fn guarded(f: impl FnOnce() -> ClericalStatus) -> ClericalStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(ClericalStatus::Internal, format!("internal error: {message}"))
        }
    }
}

/// # Safety
/// `out` must be valid for writes.
unsafe fn write_string(out: *mut *mut c_char, text: &str) -> ClericalStatus {
    match CString::new(text) {
        Ok(c) => {
            *out = c.into_raw();
            ClericalStatus::Ok
        }
        Err(_) => fail(ClericalStatus::Internal, "result contains a NUL byte"),
    }
}

/// Default run options: 20 digits, 60 to 1000000 bits, no fuel limit,
/// guard budget 256, unshuffled guards.
#[no_mangle]
pub extern "C" fn clerical_run_options_default() -> ClericalRunOptions {
    ClericalRunOptions {
        digits: 20,
        precision: DEFAULT_PRECISION,
        max_precision: DEFAULT_PRECISION_CAP,
        fuel: 0,
        guard_budget: 256,
        use_seed: false,
        seed: 0,
    }
}

/// Parses and typechecks a NUL-terminated UTF-8 program.
///
/// On success stores a new handle in `*out`; release it with
/// [`clerical_program_free`].
///
/// # Safety
/// `source` must be a valid NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn clerical_program_parse(source: *const c_char, out: *mut *mut ClericalProgram) -> ClericalStatus {
    guarded(|| {
        if source.is_null() || out.is_null() {
            return fail(ClericalStatus::InvalidArgument, "null pointer argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(source).to_str() else {
            return fail(ClericalStatus::InvalidArgument, "source is not valid UTF-8");
        };
        let program = match parse_program(text) {
            Ok(p) => p,
            Err(e) => return fail(ClericalStatus::StaticError, e.to_string()),
        };
        match elaborate(&program) {
            Ok(typed) => {
                *out = Box::into_raw(Box::new(ClericalProgram { typed }));
                ClericalStatus::Ok
            }
            Err(e) => fail(ClericalStatus::StaticError, e.to_string()),
        }
    })
}

/// Releases a program handle. Null is ignored.
///
/// # Safety
/// `program` must be null or a handle from [`clerical_program_parse`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn clerical_program_free(program: *mut ClericalProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Stores the type of the main expression (`unit`, `bool`, `int` or
/// `real`) in `*out`.
///
/// # Safety
/// `program` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn clerical_program_type(program: *const ClericalProgram, out: *mut *mut c_char) -> ClericalStatus {
    guarded(|| {
        if program.is_null() || out.is_null() {
            return fail(ClericalStatus::InvalidArgument, "null pointer argument");
        }
        write_string(out, &(*program).typed.main_type().to_string())
    })
}

/// Evaluates the program, raising the working precision until the result
/// is known to `options.digits` decimals, and stores the one-line result in
/// `*out`. Passing null `options` uses the defaults.
///
/// # Safety
/// `program` must be a live handle, `options` null or valid, and `out` valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn clerical_program_run(
    program: *const ClericalProgram,
    options: *const ClericalRunOptions,
    out: *mut *mut c_char,
) -> ClericalStatus {
    guarded(|| {
        if program.is_null() || out.is_null() {
            return fail(ClericalStatus::InvalidArgument, "null pointer argument");
        }
        let opts = if options.is_null() {
            clerical_run_options_default()
        } else {
            *options
        };
        if opts.digits < 1 || opts.precision < 2 || opts.guard_budget < 1 {
            return fail(
                ClericalStatus::InvalidArgument,
                "digits and guard_budget must be at least 1, precision at least 2",
            );
        }
        let cfg = EvalConfig {
            precision: Precision::new(opts.precision),
            guard_step_budget: opts.guard_budget as usize,
            fuel: (opts.fuel > 0).then_some(opts.fuel),
            scheduler_seed: opts.use_seed.then_some(opts.seed),
            ..EvalConfig::default()
        };
        let cap = opts.max_precision.max(opts.precision);
        match run_with_restarts(&(*program).typed, opts.digits, &cfg, cap) {
            Ok(r) => write_string(out, &r.text),
            Err(d) => {
                let status = match d {
                    Diagnostic::Deadlock { .. } => ClericalStatus::Deadlock,
                    Diagnostic::FuelExhausted { .. } => ClericalStatus::FuelExhausted,
                    Diagnostic::PrecisionCap { .. } => ClericalStatus::PrecisionCap,
                    Diagnostic::Fault { .. } => ClericalStatus::Internal,
                };
                fail(status, d.to_string())
            }
        }
    })
}

/// Computes the exact denotation of a program without limits, unrolling
/// each loop `fuel` times, and stores it in `*out` in set notation such as
/// `{0, 1, ⊥}`.
///
/// # Safety
/// `program` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn clerical_program_denote(
    program: *const ClericalProgram,
    fuel: u64,
    out: *mut *mut c_char,
) -> ClericalStatus {
    guarded(|| {
        if program.is_null() || out.is_null() {
            return fail(ClericalStatus::InvalidArgument, "null pointer argument");
        }
        match denote_program(&(*program).typed, fuel) {
            Ok(d) => write_string(out, &d.to_string()),
            Err(e) => fail(ClericalStatus::FragmentViolation, e.to_string()),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn clerical_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message describing the most recent failure on this thread, or null.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn clerical_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
