//! C interface to the verifier.
//!
//! Every function returns a [`SoundabsStatus`]. On failure, a message
//! describing the last error on the calling thread is available from
//! [`soundabs_last_error`]. Handles are created by `*_new`/`*_load`
//! functions and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::time::Duration;

use soundabs::pipeline::{verify, InputTexts, Inputs, PipelineError, VerdictReport, VerifyOptions};
use soundabs::smt::{AxiomLevel, Classification, SolverConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoundabsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// A domain, QNP, mapping or constraints file did not parse or check.
    Input = 4,
    /// Task generation or encoding failed.
    Generation = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Overall verdict of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoundabsVerdict {
    True = 0,
    False = 1,
    Unknown = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoundabsTaskClass {
    Valid = 0,
    Refuted = 1,
    Unknown = 2,
}

/// Parsed inputs of one verification problem.
pub struct SoundabsInputs(Inputs);

/// The outcome of a verification run.
pub struct SoundabsReport {
    report: VerdictReport,
    json: CString,
    ids: Vec<CString>,
}

/// Verification settings. A null options pointer means the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SoundabsOptions {
    /// Solver command line, or null for `z3 -in`.
    pub solver_cmd: *const c_char,
    /// Per-task limit in seconds; zero or less means 10.
    pub timeout_secs: c_double,
    /// Worker threads; zero means one per CPU.
    pub jobs: usize,
    /// Emit only the basic closure axioms.
    pub basic_axioms: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(SoundabsStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match e {
            PipelineError::Io { .. } => SoundabsStatus::Io,
            PipelineError::Domain { .. } | PipelineError::Qnp { .. } | PipelineError::Mapping { .. } => {
                SoundabsStatus::Input
            }
            PipelineError::Vc(_) | PipelineError::Smt(_) => SoundabsStatus::Generation,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SoundabsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SoundabsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SoundabsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(SoundabsStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SoundabsStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn null(name: &str) -> Failure {
    Failure(SoundabsStatus::NullArgument, format!("{name} is null"))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn soundabs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads `domain.sexp`, `qnp.sexp`, `map.sexp` and `constraints.sexp` from
/// directory `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soundabs_inputs_load_dir(dir: *const c_char, out: *mut *mut SoundabsInputs) -> SoundabsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dir = str_arg(dir, "dir")?;
        let inputs = Inputs::load_dir(Path::new(dir))?;
        *out = Box::into_raw(Box::new(SoundabsInputs(inputs)));
        Ok(())
    })
}

/// Parses inputs from the four file contents.
///
/// # Safety
/// All strings must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soundabs_inputs_new(
    domain: *const c_char,
    qnp: *const c_char,
    mapping: *const c_char,
    constraints: *const c_char,
    out: *mut *mut SoundabsInputs,
) -> SoundabsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let texts = InputTexts {
            domain: str_arg(domain, "domain")?,
            qnp: str_arg(qnp, "qnp")?,
            mapping: str_arg(mapping, "mapping")?,
            constraints: str_arg(constraints, "constraints")?,
        };
        *out = Box::into_raw(Box::new(SoundabsInputs(Inputs::from_texts(&texts)?)));
        Ok(())
    })
}

/// # Safety
/// `inputs` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soundabs_inputs_free(inputs: *mut SoundabsInputs) {
    if !inputs.is_null() {
        drop(Box::from_raw(inputs));
    }
}

/// Number of verification tasks the inputs give rise to.
///
/// # Safety
/// `inputs` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soundabs_inputs_task_count(inputs: *const SoundabsInputs, out: *mut usize) -> SoundabsStatus {
    guard(|| {
        let inputs = inputs.as_ref().ok_or_else(|| null("inputs"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = inputs.0.tasks()?.tasks.len();
        Ok(())
    })
}

/// Generates and discharges all tasks. `options` may be null.
///
/// # Safety
/// `inputs` must be a live handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn soundabs_verify(
    inputs: *const SoundabsInputs,
    options: *const SoundabsOptions,
    out: *mut *mut SoundabsReport,
) -> SoundabsStatus {
    guard(|| {
        let inputs = inputs.as_ref().ok_or_else(|| null("inputs"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut opts = VerifyOptions::default();
        if let Some(o) = options.as_ref() {
            let cmd = if o.solver_cmd.is_null() {
                SolverConfig::DEFAULT_COMMAND
            } else {
                str_arg(o.solver_cmd, "solver_cmd")?
            };
            let timeout = if o.timeout_secs > 0.0 && o.timeout_secs.is_finite() {
                Duration::from_secs_f64(o.timeout_secs)
            } else {
                Duration::from_secs(10)
            };
            opts.solver = SolverConfig::new(cmd, timeout);
            if o.jobs > 0 {
                opts.jobs = o.jobs;
            }
            if o.basic_axioms {
                opts.level = AxiomLevel::Basic;
            }
        }
        let report = verify(&inputs.0, &opts)?;
        let json = CString::new(report.to_json()).expect("JSON has no NUL bytes");
        let ids = report.tasks.iter().map(|t| CString::new(t.id.as_str()).unwrap()).collect();
        *out = Box::into_raw(Box::new(SoundabsReport { report, json, ids }));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soundabs_report_free(report: *mut SoundabsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soundabs_report_verdict(report: *const SoundabsReport) -> SoundabsVerdict {
    use soundabs::pipeline::Aggregate;
    match report.as_ref().map(|r| r.report.aggregate) {
        Some(Aggregate::True) => SoundabsVerdict::True,
        Some(Aggregate::False) => SoundabsVerdict::False,
        _ => SoundabsVerdict::Unknown,
    }
}

/// The report as JSON, owned by the report handle.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soundabs_report_json(report: *const SoundabsReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soundabs_report_task_count(report: *const SoundabsReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.tasks.len())
}

/// Identifier and classification of task `index`. The identifier is owned
/// by the report handle.
///
/// # Safety
/// `report` must be a live handle; `id` and `class` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn soundabs_report_task(
    report: *const SoundabsReport,
    index: usize,
    id: *mut *const c_char,
    class: *mut SoundabsTaskClass,
) -> SoundabsStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if id.is_null() || class.is_null() {
            return Err(null("out"));
        }
        let t = r
            .report
            .tasks
            .get(index)
            .ok_or_else(|| Failure(SoundabsStatus::OutOfRange, format!("no task {index}")))?;
        *id = r.ids[index].as_ptr();
        *class = match t.classification {
            Classification::Valid => SoundabsTaskClass::Valid,
            Classification::Refuted => SoundabsTaskClass::Refuted,
            Classification::Unknown => SoundabsTaskClass::Unknown,
        };
        Ok(())
    })
}
