//! C ABI for the cascade-epr simulator.
//!
//! Every fallible call returns a [`CepStatus`]; on failure the message is
//! kept per thread and read back with [`cep_last_error_message`]. Runs are
//! opaque handles released with [`cep_run_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cascade_epr::analytic::{self, EprSign, VarianceMinimum};
use cascade_epr::runner::{self, RunOutput};
use cascade_epr::scenario::{Column, Engine, Scenario};
use cascade_epr::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CepStatus {
    Ok = 0,
    NullPointer = 1,
    /// Parameter outside its domain or inconsistent configuration.
    InvalidArgument = 2,
    Parse = 3,
    /// Overflow, non-finite integration state or Fock truncation.
    Numerical = 4,
    Io = 5,
    /// Index out of range or buffer too small.
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CepEngine {
    /// Use the engine named in the scenario.
    FromScenario = 0,
    Analytic = 1,
    Adiabatic = 2,
    Full = 3,
    Fock = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CepColumn {
    VarMinus = 0,
    VarPlus = 1,
    VarPSum = 2,
    VarPDiff = 3,
    N1 = 4,
    N2 = 5,
    Na1 = 6,
    Na2 = 7,
}

/// Minimum of ⟨(X₁−X₂)²⟩ over time.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CepMinimum {
    /// 0 when the variance never drops below 2.
    pub below_vacuum: i32,
    pub variance: f64,
    /// Γ₁·t at the minimum; +∞ when the infimum is approached as t → ∞.
    pub gamma1_t_min: f64,
}

/// Result of one scenario run.
pub struct CepRun {
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> CepStatus {
    match e {
        Error::Domain(_) | Error::Config(_) => CepStatus::InvalidArgument,
        Error::Parse(_) => CepStatus::Parse,
        Error::Range(_) | Error::Integration { .. } | Error::Truncation { .. } => {
            CepStatus::Numerical
        }
        Error::Io(_) => CepStatus::Io,
    }
}

fn fail(status: CepStatus, msg: impl Into<String>) -> CepStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), CepStatus>) -> CepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CepStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(CepStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: cascade_epr::Result<T>) -> Result<T, CepStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), CepStatus> {
    if p.is_null() {
        Err(fail(CepStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, name: &str) -> Result<&'a str, CepStatus> {
    non_null(s, name)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(CepStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn engine_of(e: i32, scenario: &Scenario) -> Result<Engine, CepStatus> {
    Ok(match e {
        x if x == CepEngine::FromScenario as i32 => scenario.engine,
        x if x == CepEngine::Analytic as i32 => Engine::Analytic,
        x if x == CepEngine::Adiabatic as i32 => Engine::Adiabatic,
        x if x == CepEngine::Full as i32 => Engine::Full,
        x if x == CepEngine::Fock as i32 => Engine::Fock,
        _ => return Err(fail(CepStatus::InvalidArgument, format!("unknown engine code {e}"))),
    })
}

fn column_of(c: i32) -> Result<Column, CepStatus> {
    const COLUMNS: [Column; 8] = [
        Column::VarMinus,
        Column::VarPlus,
        Column::VarPSum,
        Column::VarPDiff,
        Column::N1,
        Column::N2,
        Column::Na1,
        Column::Na2,
    ];
    usize::try_from(c)
        .ok()
        .and_then(|i| COLUMNS.get(i).copied())
        .ok_or_else(|| fail(CepStatus::InvalidArgument, format!("unknown column code {c}")))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in bytes
/// excluding the terminator; 0 after a successful call.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cep_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Closed-form ⟨(X₁∓X₂)²⟩ of the reduced model from the motional ground
/// state. `sign` is −1 for X₁−X₂ and +1 for X₁+X₂.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cep_epr_variance(
    gamma1: f64,
    gamma2: f64,
    epsilon: f64,
    t: f64,
    sign: i32,
    out: *mut f64,
) -> CepStatus {
    guard(|| {
        non_null(out, "out")?;
        let sign = match sign {
            -1 => EprSign::Minus,
            1 => EprSign::Plus,
            _ => return Err(fail(CepStatus::InvalidArgument, "sign must be -1 or +1")),
        };
        *out = lift(analytic::epr_variance(gamma1, gamma2, epsilon, t, sign))?;
        Ok(())
    })
}

/// Closed-form phonon numbers ⟨b₁†b₁⟩ and ⟨b₂†b₂⟩ at time `t`.
///
/// # Safety
/// `n1` and `n2` must point to writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cep_occupations(
    gamma1: f64,
    gamma2: f64,
    epsilon: f64,
    t: f64,
    n1: *mut f64,
    n2: *mut f64,
) -> CepStatus {
    guard(|| {
        non_null(n1, "n1")?;
        non_null(n2, "n2")?;
        *n1 = lift(analytic::occupation_mode1(gamma1, t))?;
        *n2 = lift(analytic::occupation_mode2(gamma1, gamma2, epsilon, t))?;
        Ok(())
    })
}

/// Minimum over time of ⟨(X₁−X₂)²⟩ for λ = Γ₂/Γ₁ and efficiency ε.
///
/// # Safety
/// `out` must point to a writable [`CepMinimum`].
#[no_mangle]
pub unsafe extern "C" fn cep_min_variance(lambda: f64, epsilon: f64, out: *mut CepMinimum) -> CepStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = match lift(analytic::min_variance(lambda, epsilon))? {
            VarianceMinimum::NoneBelowVacuum => CepMinimum {
                below_vacuum: 0,
                variance: f64::NAN,
                gamma1_t_min: f64::NAN,
            },
            VarianceMinimum::Below {
                variance,
                gamma1_t_min,
                ..
            } => CepMinimum {
                below_vacuum: 1,
                variance,
                gamma1_t_min,
            },
        };
        Ok(())
    })
}

fn run_parsed(scenario: &Scenario, engine: i32, out: *mut *mut CepRun) -> Result<(), CepStatus> {
    let output = lift(runner::run_scenario(scenario, engine_of(engine, scenario)?))?;
    // SAFETY: callers check `out` before parsing.
    unsafe { *out = Box::into_raw(Box::new(CepRun { output })) };
    Ok(())
}

/// Parses a TOML scenario and runs it with `engine` (a [`CepEngine`] code).
/// On success `*out` owns a new handle.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cep_run_toml(
    toml: *const c_char,
    engine: i32,
    out: *mut *mut CepRun,
) -> CepStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let text = read_str(toml, "toml")?;
        let scenario = lift(Scenario::from_toml_str(text))?;
        run_parsed(&scenario, engine, out)
    })
}

/// Reads a TOML scenario file and runs it with `engine` (a [`CepEngine`]
/// code). On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cep_run_file(
    path: *const c_char,
    engine: i32,
    out: *mut *mut CepRun,
) -> CepStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = read_str(path, "path")?;
        let scenario = lift(Scenario::from_path(Path::new(path)))?;
        run_parsed(&scenario, engine, out)
    })
}

/// Releases a run handle. Null is ignored.
///
/// # Safety
/// `run` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cep_run_free(run: *mut CepRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of curves (one per parameter set) in a run; 0 for null.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cep_run_curve_count(run: *const CepRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.curves.len())
}

/// Number of time points per curve; 0 for null.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cep_run_len(run: *const CepRun) -> usize {
    run.as_ref()
        .and_then(|r| r.output.curves.first())
        .map_or(0, |c| c.report.times.len())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), CepStatus> {
    non_null(buf, "buf")?;
    if len < src.len() {
        return Err(fail(
            CepStatus::OutOfRange,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the time grid into `buf`, which must hold [`cep_run_len`] values.
///
/// # Safety
/// `run` must be a live handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cep_run_times(run: *const CepRun, buf: *mut f64, len: usize) -> CepStatus {
    guard(|| {
        non_null(run, "run")?;
        let curve = (&(*run).output.curves)
            .first()
            .ok_or_else(|| fail(CepStatus::OutOfRange, "run has no curves"))?;
        copy_out(&curve.report.times, buf, len)
    })
}

/// Copies one series (a [`CepColumn`] code) of curve `curve` into `buf`.
///
/// # Safety
/// `run` must be a live handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cep_run_series(
    run: *const CepRun,
    curve: usize,
    column: i32,
    buf: *mut f64,
    len: usize,
) -> CepStatus {
    guard(|| {
        non_null(run, "run")?;
        let c = (&(*run).output.curves).get(curve).ok_or_else(|| {
            fail(CepStatus::OutOfRange, format!("curve index {curve} out of range"))
        })?;
        let r = &c.report;
        let series = match column_of(column)? {
            Column::VarMinus => Some(&r.var_minus),
            Column::VarPlus => Some(&r.var_plus),
            Column::VarPSum => Some(&r.var_p_sum),
            Column::VarPDiff => Some(&r.var_p_diff),
            Column::N1 => Some(&r.n1),
            Column::N2 => Some(&r.n2),
            Column::Na1 => r.cavity1.as_ref(),
            Column::Na2 => r.cavity2.as_ref(),
        }
        .ok_or_else(|| {
            fail(
                CepStatus::InvalidArgument,
                "cavity series need the full or fock engine",
            )
        })?;
        copy_out(series, buf, len)
    })
}

/// Minimum of ⟨(X₁−X₂)²⟩ along curve `curve`, with Γ₁·t when Γ₁ is
/// constant (NaN otherwise). The analytic engine reports the exact minimum.
///
/// # Safety
/// `run` must be a live handle and `out` a writable [`CepMinimum`].
#[no_mangle]
pub unsafe extern "C" fn cep_run_minimum(
    run: *const CepRun,
    curve: usize,
    out: *mut CepMinimum,
) -> CepStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(out, "out")?;
        let c = (&(*run).output.curves).get(curve).ok_or_else(|| {
            fail(CepStatus::OutOfRange, format!("curve index {curve} out of range"))
        })?;
        let s = lift(c.summary(cascade_epr::scenario::TimeAxis::Gamma1T))?;
        *out = match s.min_var_minus {
            Some(v) => CepMinimum {
                below_vacuum: 1,
                variance: v,
                gamma1_t_min: s.t_min.unwrap_or(f64::NAN),
            },
            None => CepMinimum {
                below_vacuum: 0,
                variance: f64::NAN,
                gamma1_t_min: f64::NAN,
            },
        };
        Ok(())
    })
}
