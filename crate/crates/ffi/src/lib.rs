//! C ABI over the exact PAoII analysis.
//!
//! Every fallible call returns a [`PaoiiStatus`]. On failure a message is
//! kept per thread and can be read with [`paoii_last_error_message`].
//! Models are opaque handles created by [`paoii_model_new`] and released
//! with [`paoii_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use paoii_core::paoii::{paoii_quantile, PaoiiPmf};
use paoii_core::{Analysis, Error, SystemParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaoiiStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A parameter lies outside its domain.
    InvalidParams = 2,
    /// The solver or the PAoII recursion failed.
    Numeric = 3,
    /// The requested percentile lies beyond the certified PMF mass.
    QuantileOutOfRange = 4,
    /// The output buffer is shorter than the result.
    BufferTooSmall = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// System configuration. Probabilities are per slot.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PaoiiParams {
    pub n_sensors: u32,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub psi: f64,
    /// Joules per transmitting slot.
    pub energy_per_slot: f64,
    /// Seconds per slot.
    pub slot_duration: f64,
}

impl From<SystemParams> for PaoiiParams {
    fn from(p: SystemParams) -> Self {
        Self {
            n_sensors: p.n_sensors as u32,
            lambda: p.lambda,
            alpha: p.alpha,
            beta: p.beta,
            eps: p.eps,
            psi: p.psi,
            energy_per_slot: p.energy_per_slot,
            slot_duration: p.slot_duration,
        }
    }
}

impl From<PaoiiParams> for SystemParams {
    fn from(p: PaoiiParams) -> Self {
        Self {
            n_sensors: p.n_sensors as usize,
            lambda: p.lambda,
            alpha: p.alpha,
            beta: p.beta,
            eps: p.eps,
            psi: p.psi,
            energy_per_slot: p.energy_per_slot,
            slot_duration: p.slot_duration,
        }
    }
}

/// Solved chain for one configuration.
pub struct PaoiiModel {
    analysis: Analysis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> PaoiiStatus {
    match e {
        Error::QuantileOutOfRange { .. } => PaoiiStatus::QuantileOutOfRange,
        e if e.is_config() => PaoiiStatus::InvalidParams,
        _ => PaoiiStatus::Numeric,
    }
}

/// Runs `f`, recording any error or panic for the calling thread.
fn guard(f: impl FnOnce() -> Result<(), (PaoiiStatus, String)>) -> PaoiiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PaoiiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PaoiiStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (PaoiiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (PaoiiStatus, String) {
    (PaoiiStatus::NullPointer, format!("`{name}` is null"))
}

/// # Safety
/// `model` must be null or a live handle from [`paoii_model_new`].
unsafe fn model_ref<'a>(model: *const PaoiiModel) -> Result<&'a PaoiiModel, (PaoiiStatus, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

fn pmf(model: &PaoiiModel, t_max: usize, tail_tol: f64) -> Result<PaoiiPmf, (PaoiiStatus, String)> {
    if tail_tol.is_nan() || tail_tol < 0.0 {
        return Err((PaoiiStatus::InvalidParams, format!("tail_tol must be non-negative, got {tail_tol}")));
    }
    model.analysis.paoii_pmf(t_max, tail_tol).map_err(core_err)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn paoii_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration: 20 sensors, λ = 0.01, α = 0.9, β = 0.1,
/// ε = ψ = 0.1, 1 mJ per transmitting slot, 50 ms slots.
#[no_mangle]
pub extern "C" fn paoii_params_default() -> PaoiiParams {
    SystemParams::default().into()
}

/// Validates `params`, builds the chain and solves for its stationary law.
/// On success `*out` receives a handle the caller must free.
///
/// # Safety
/// `params` must point to a valid [`PaoiiParams`] and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_new(params: *const PaoiiParams, out: *mut *mut PaoiiModel) -> PaoiiStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let params: SystemParams = (*params.as_ref().ok_or_else(|| null("params"))?).into();
        let analysis = Analysis::solve(&params).map_err(core_err)?;
        *out = Box::into_raw(Box::new(PaoiiModel { analysis }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`paoii_model_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_free(model: *mut PaoiiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Copies the parameters the model was solved for.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_params(model: *const PaoiiModel, out: *mut PaoiiParams) -> PaoiiStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.analysis.params.into();
        Ok(())
    })
}

/// Number of aggregate chain states.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_state_count(model: *const PaoiiModel, out: *mut usize) -> PaoiiStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.analysis.space.len();
        Ok(())
    })
}

/// Fresh packets delivered per slot.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_goodput(model: *const PaoiiModel, out: *mut f64) -> PaoiiStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.analysis.metrics.goodput;
        Ok(())
    })
}

/// Mean power per node in watts.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_power(model: *const PaoiiModel, out: *mut f64) -> PaoiiStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.analysis.metrics.power;
        Ok(())
    })
}

/// PAoII PMF: `buf[t - 1] = P(θ = t)`, stopping once the remaining mass is at
/// most `tail_tol` or after `t_max` slots.
///
/// `*written` receives the PMF length. Pass a null `buf` to query it. If
/// `buf_len` is too short nothing is copied and
/// [`PaoiiStatus::BufferTooSmall`] is returned. `tail` may be null;
/// otherwise it receives the mass beyond the last slot.
///
/// # Safety
/// `model` must be a live handle, `written` writable, `buf` null or valid
/// for `buf_len` writes, `tail` null or writable.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_pmf(
    model: *const PaoiiModel,
    t_max: usize,
    tail_tol: f64,
    buf: *mut f64,
    buf_len: usize,
    written: *mut usize,
    tail: *mut f64,
) -> PaoiiStatus {
    guard(|| {
        let m = model_ref(model)?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        let pmf = pmf(m, t_max, tail_tol)?;
        *written = pmf.mass.len();
        if let Some(tail) = tail.as_mut() {
            *tail = pmf.tail;
        }
        if buf.is_null() {
            return Ok(());
        }
        if buf_len < pmf.mass.len() {
            return Err((
                PaoiiStatus::BufferTooSmall,
                format!("buffer holds {buf_len} values, PMF has {}", pmf.mass.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, pmf.mass.len()).copy_from_slice(&pmf.mass);
        Ok(())
    })
}

/// Smallest `t` with `P(θ ≤ t) ≥ q`, in slots.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn paoii_model_quantile(
    model: *const PaoiiModel,
    q: f64,
    t_max: usize,
    tail_tol: f64,
    out: *mut u64,
) -> PaoiiStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(q > 0.0 && q < 1.0) {
            return Err((PaoiiStatus::InvalidParams, format!("q must lie in (0, 1), got {q}")));
        }
        let pmf = pmf(m, t_max, tail_tol)?;
        *out = paoii_quantile(&pmf, q).map_err(core_err)? as u64;
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len` bytes. Returns the size needed
/// for the full message including the terminator, or 0 if there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn paoii_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}
