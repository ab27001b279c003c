//! C ABI over the warpspec pipeline.
//!
//! Objects are opaque handles created by `ws_*` constructors and released by
//! the matching `ws_*_free`. Every fallible call returns a [`WsStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`ws_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use warpspec::cli_io::{field_grid, parse_config, RunConfig};
use warpspec::classical::TorusSpec;
use warpspec::correction::solve_lambda;
use warpspec::field::SpinorGrid;
use warpspec::profiles::ModelParams;
use warpspec::Error;

/// Status codes; the first five match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    Numerical = 3,
    Verification = 4,
    NullPointer = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// Parsed run configuration.
pub struct WsConfig {
    inner: RunConfig,
}

/// Quantized torus with the model it was built from.
pub struct WsTorus {
    params: ModelParams,
    torus: TorusSpec,
}

/// Sampled spinor field.
pub struct WsGrid {
    inner: SpinorGrid,
}

/// Plain-data view of a torus.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WsTorusSummary {
    pub nu1: u32,
    pub nu2: i32,
    pub energy: f64,
    pub p_phi: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub period: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub action: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> WsStatus {
    match e.exit_code() {
        1 => WsStatus::Io,
        2 => WsStatus::Config,
        4 => WsStatus::Verification,
        _ => WsStatus::Numerical,
    }
}

struct Failure(WsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(WsStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> WsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside warpspec");
            WsStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ws_version() -> *const c_char {
    static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `ws_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ws_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default configuration (the built-in example).
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_config_default(out: *mut *mut WsConfig) -> WsStatus {
    guard(|| emit(out, WsConfig { inner: RunConfig::default() }))
}

/// Parses a TOML configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_config_from_str(text: *const c_char, out: *mut *mut WsConfig) -> WsStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(WsStatus::InvalidArgument, "configuration is not UTF-8".into()))?;
        emit(out, WsConfig { inner: parse_config(s)? })
    })
}

/// # Safety
/// `cfg` must come from a `ws_config_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn ws_config_free(cfg: *mut WsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Quantizes the configured torus.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_torus_quantize(cfg: *const WsConfig, out: *mut *mut WsTorus) -> WsStatus {
    guard(|| {
        let cfg = &borrow(cfg, "config")?.inner;
        let params = cfg.model_params()?;
        let torus = cfg.quantize(&params)?;
        emit(out, WsTorus { params, torus })
    })
}

/// # Safety
/// `torus` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ws_torus_summary(torus: *const WsTorus, out: *mut WsTorusSummary) -> WsStatus {
    guard(|| {
        let t = &borrow(torus, "torus")?.torus;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = WsTorusSummary {
            nu1: t.nu.0,
            nu2: t.nu.1,
            energy: t.energy,
            p_phi: t.p_phi,
            r_minus: t.r_minus,
            r_plus: t.r_plus,
            period: t.period,
            omega1: t.omega1,
            omega2: t.omega2,
            action: t.action,
        };
        Ok(())
    })
}

/// Spectral correction `lambda` on the torus.
///
/// # Safety
/// `torus` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ws_torus_lambda(torus: *const WsTorus, out: *mut f64) -> WsStatus {
    guard(|| {
        let t = borrow(torus, "torus")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = solve_lambda(&t.params, &t.torus)?;
        Ok(())
    })
}

/// # Safety
/// `torus` must come from [`ws_torus_quantize`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ws_torus_free(torus: *mut WsTorus) {
    if !torus.is_null() {
        drop(Box::from_raw(torus));
    }
}

/// Runs the full pipeline and samples the spinor field on the configured grid.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_field_grid(cfg: *const WsConfig, out: *mut *mut WsGrid) -> WsStatus {
    guard(|| {
        let cfg = &borrow(cfg, "config")?.inner;
        let (_, _, grid) = field_grid(cfg)?;
        emit(out, WsGrid { inner: grid })
    })
}

/// Grid size and window `[x_min, x_max, y_min, y_max]`; any output may be null.
///
/// # Safety
/// `grid` must be a live handle; `window`, if not null, must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn ws_grid_dims(grid: *const WsGrid, nx: *mut usize, ny: *mut usize, window: *mut f64) -> WsStatus {
    guard(|| {
        let g = &borrow(grid, "grid")?.inner;
        if !nx.is_null() {
            *nx = g.nx;
        }
        if !ny.is_null() {
            *ny = g.ny;
        }
        if !window.is_null() {
            let w = std::slice::from_raw_parts_mut(window, 4);
            w.copy_from_slice(&[g.x.0, g.x.1, g.y.0, g.y.1]);
        }
        Ok(())
    })
}

/// Copies `|Psi|^2` into `buf`, row-major with `y` increasing.
///
/// # Safety
/// `grid` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ws_grid_density(grid: *const WsGrid, buf: *mut f64, len: usize) -> WsStatus {
    guard(|| {
        let g = &borrow(grid, "grid")?.inner;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len < g.density.len() {
            return Err(Failure(
                WsStatus::InvalidArgument,
                format!("buffer holds {len} values, grid has {}", g.density.len()),
            ));
        }
        ptr::copy_nonoverlapping(g.density.as_ptr(), buf, g.density.len());
        Ok(())
    })
}

/// # Safety
/// `grid` must come from [`ws_field_grid`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ws_grid_free(grid: *mut WsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// `Ai(x)` and `Ai'(x)`; either output may be null.
///
/// # Safety
/// Non-null outputs must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ws_airy(x: f64, ai: *mut f64, ai_prime: *mut f64) -> WsStatus {
    guard(|| {
        if !x.is_finite() {
            return Err(Failure(WsStatus::InvalidArgument, format!("x = {x} is not finite")));
        }
        let v = warpspec::specfun::airy(x);
        if !ai.is_null() {
            *ai = v.ai;
        }
        if !ai_prime.is_null() {
            *ai_prime = v.ai_prime;
        }
        Ok(())
    })
}
