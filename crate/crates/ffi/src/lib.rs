//! C ABI over the simulation library.
//!
//! Objects cross the boundary as opaque handles created and destroyed by this
//! library. Every fallible call returns a [`CbStatus`]; the message of the last
//! failure on the calling thread is available from [`cb_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use catbattery::cli::config::with_param;
use faer::{c64, Mat};
use catbattery::evolve::{propagate_with, steady_state, InitialState, IntegratorConfig};
use catbattery::lindblad::{
    build_generator, build_liouvillian, liouvillian_spectrum, spectral_gap, thermal_occupation,
    DissipatorMode,
};
use catbattery::observables::{ergotropy, BatteryHamiltonianMode, ObservableSet};
use catbattery::{DensityMatrix, Error, HilbertSignature, ModelParams, Operator};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    PhysicsAbort = 3,
    SolverFailure = 4,
    DegenerateSteadyState = 5,
    Panic = 6,
}

/// Model parameters.
pub struct CbParams {
    inner: ModelParams,
}

/// Observables of one snapshot.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CbRow {
    pub t: f64,
    pub w_raw: f64,
    pub w_per_spin: f64,
    pub w_per_capacity: f64,
    pub e_batt: f64,
    pub e_cat: f64,
    pub e_cav: f64,
    pub trace_err: f64,
    pub min_eig: f64,
    pub purity: f64,
    /// `NaN` when the quasi-dark state is undefined.
    pub dark_overlap: f64,
}

/// Time series of a finished run.
pub struct CbRun {
    rows: Vec<CbRow>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CbStatus {
    match e {
        Error::PhysicsAbort { .. } => CbStatus::PhysicsAbort,
        Error::SolverFailure { .. } | Error::CapExceeded { .. } => CbStatus::SolverFailure,
        Error::DegenerateSteadyState { .. } => CbStatus::DegenerateSteadyState,
        _ => CbStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F: FnOnce() -> Result<(), (CbStatus, String)>>(f: F) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CbStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CbStatus, String) {
    (CbStatus::NullPointer, format!("`{what}` is null"))
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Baseline catalyst-assisted parameters. Free with [`cb_params_free`].
#[no_mangle]
pub extern "C" fn cb_params_default() -> *mut CbParams {
    Box::into_raw(Box::new(CbParams {
        inner: ModelParams::default(),
    }))
}

/// # Safety
/// `params` must be null or a handle from [`cb_params_default`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_params_free(params: *mut CbParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn field_name<'a>(name: *const c_char) -> Result<&'a str, (CbStatus, String)> {
    if name.is_null() {
        return Err(null("name"));
    }
    CStr::from_ptr(name)
        .to_str()
        .map_err(|_| (CbStatus::InvalidArgument, "name is not UTF-8".into()))
}

/// Sets a scalar parameter by field name (`"g"`, `"lambda"`, `"photon_cutoff"`, ...).
///
/// # Safety
/// `params` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cb_params_set(params: *mut CbParams, name: *const c_char, value: f64) -> CbStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        let name = field_name(name)?;
        p.inner = with_param(&p.inner, name, value).map_err(|e| (CbStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Reads a scalar parameter by field name.
///
/// # Safety
/// `params` must be a live handle, `name` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cb_params_get(params: *const CbParams, name: *const c_char, out: *mut f64) -> CbStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let name = field_name(name)?;
        let doc = serde_json::to_value(&p.inner).expect("params serialize");
        *out = doc
            .get(name)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| (CbStatus::InvalidArgument, format!("`{name}` is not a scalar parameter")))?;
        Ok(())
    })
}

/// Bose-Einstein occupation of the cavity mode.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cb_thermal_occupation(omega_c: f64, temperature: f64, k_b: f64, out: *mut f64) -> CbStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = thermal_occupation(omega_c, temperature, k_b).map_err(lib_err)?;
        Ok(())
    })
}

unsafe fn matrix(re: *const f64, im: *const f64, dim: usize, what: &str) -> Result<Operator, (CbStatus, String)> {
    if re.is_null() {
        return Err(null(what));
    }
    let re = std::slice::from_raw_parts(re, dim * dim);
    let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, dim * dim));
    let sig = HilbertSignature::new(vec![dim]).map_err(lib_err)?;
    let m = Mat::from_fn(dim, dim, |r, c| {
        c64::new(re[r * dim + c], im.map_or(0.0, |v| v[r * dim + c]))
    });
    Operator::new(m, sig).map_err(lib_err)
}

/// Ergotropy of a `dim x dim` state against a Hamiltonian, both row-major with
/// separate real and imaginary parts (`im` pointers may be null for real input).
///
/// # Safety
/// Non-null pointers must reference `dim * dim` readable values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cb_ergotropy(
    rho_re: *const f64,
    rho_im: *const f64,
    h_re: *const f64,
    h_im: *const f64,
    dim: usize,
    out: *mut f64,
) -> CbStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if dim == 0 {
            return Err((CbStatus::InvalidArgument, "dim must be positive".into()));
        }
        let rho = DensityMatrix::new(matrix(rho_re, rho_im, dim, "rho_re")?).map_err(lib_err)?;
        let h = matrix(h_re, h_im, dim, "h_re")?;
        *out = ergotropy(&rho, &h).map_err(lib_err)?.ergotropy;
        Ok(())
    })
}

/// Propagates the default initial state with fixed-step RK4 (standard
/// dissipator, battery Hamiltonian with exchange). Free the run with [`cb_run_free`].
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cb_simulate(
    params: *const CbParams,
    dt: f64,
    snapshot_stride: usize,
    t_end: f64,
    out: *mut *mut CbRun,
) -> CbStatus {
    guard(|| {
        let p = &params.as_ref().ok_or_else(|| null("params"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = IntegratorConfig {
            dt,
            snapshot_stride,
            ..IntegratorConfig::default()
        };
        let gen = build_generator(p, DissipatorMode::Standard).map_err(lib_err)?;
        let rho0 = InitialState::default().build(p).map_err(lib_err)?;
        let obs = ObservableSet::new(p, BatteryHamiltonianMode::LocalPlusExchange).map_err(lib_err)?;
        let mut rows = Vec::new();
        propagate_with(&gen, &rho0, &cfg, t_end, |t, rho, diag| {
            let r = obs.evaluate(&DensityMatrix::from_operator_unchecked(rho.clone()))?;
            rows.push(CbRow {
                t,
                w_raw: r.ergotropy,
                w_per_spin: r.ergotropy_per_spin,
                w_per_capacity: r.ergotropy_per_capacity,
                e_batt: r.battery_energy,
                e_cat: r.catalyst_energy,
                e_cav: r.cavity_energy,
                trace_err: diag.trace_error,
                min_eig: diag.min_eigenvalue,
                purity: r.purity,
                dark_overlap: r.dark_overlap,
            });
            Ok(())
        })
        .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CbRun { rows }));
        Ok(())
    })
}

/// Number of snapshots in a run (0 for null).
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cb_run_len(run: *const CbRun) -> usize {
    run.as_ref().map_or(0, |r| r.rows.len())
}

/// Copies snapshot `index` into `out`.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cb_run_row(run: *const CbRun, index: usize, out: *mut CbRow) -> CbStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = *run.rows.get(index).ok_or_else(|| {
            (
                CbStatus::InvalidArgument,
                format!("index {index} out of range for {} rows", run.rows.len()),
            )
        })?;
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from [`cb_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_run_free(run: *mut CbRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Relaxation gap of the standard-mode Liouvillian.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cb_spectral_gap(params: *const CbParams, out: *mut f64) -> CbStatus {
    guard(|| {
        let p = &params.as_ref().ok_or_else(|| null("params"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let l = build_liouvillian(p, DissipatorMode::Standard).map_err(lib_err)?;
        let s = liouvillian_spectrum(&l).map_err(lib_err)?;
        *out = spectral_gap(&s).map_err(lib_err)?;
        Ok(())
    })
}

/// Ergotropy of the unique steady state (battery Hamiltonian with exchange).
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cb_steady_ergotropy(params: *const CbParams, out: *mut f64) -> CbStatus {
    guard(|| {
        let p = &params.as_ref().ok_or_else(|| null("params"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rho = steady_state(p).map_err(lib_err)?;
        let obs = ObservableSet::new(p, BatteryHamiltonianMode::LocalPlusExchange).map_err(lib_err)?;
        *out = obs.evaluate(&rho).map_err(lib_err)?.ergotropy;
        Ok(())
    })
}
