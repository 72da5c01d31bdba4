//! C ABI for wavephase.
//!
//! Frames and coefficient grids are opaque handles created and released
//! through this interface. Every fallible call returns a [`WpStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`wp_last_error`]. Output parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wavephase::fglim::FglimConfig;
use wavephase::gridio::{load_grid, save_grid};
use wavephase::metrics::{spectral_convergence, Method};
use wavephase::reconstruct::{reconstruct, PipelineConfig};
use wavephase::{CauchyParams, CoefficientGrid, Error, FilterBankSpec, WaveletFrame};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DimensionMismatch = 3,
    NotInvertible = 4,
    NoConvergence = 5,
    Io = 6,
    Corrupt = 7,
    Panic = 8,
}

/// Phase reconstruction method.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpMethod {
    Wpghi = 0,
    RFglim = 1,
    WFglim = 2,
}

/// Cauchy wavelet parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WpWavelet {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
}

/// Filter bank with `channels` centers spaced geometrically in
/// [`fmin`, `fmax`] Hz.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WpBank {
    pub length: usize,
    pub sample_rate: f64,
    pub channels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub decimation: usize,
}

/// Reconstruction settings; zero `max_iter` selects the default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WpReconstructOptions {
    pub method: WpMethod,
    pub seed: u64,
    pub max_iter: usize,
    pub momentum: f64,
    pub tol: f64,
}

/// Opaque analysis/synthesis frame.
pub struct WpFrame(WaveletFrame);

/// Opaque coefficient grid.
pub struct WpGrid(CoefficientGrid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> WpStatus {
    match e {
        Error::InvalidParameter(_) | Error::GridTooCoarse(_) | Error::UnsupportedAudio(_) => WpStatus::InvalidParameter,
        Error::DimensionMismatch(_) => WpStatus::DimensionMismatch,
        Error::NotInvertible(_) => WpStatus::NotInvertible,
        Error::NoConvergence { .. } => WpStatus::NoConvergence,
        Error::Io(_) | Error::Wav(_) => WpStatus::Io,
        Error::Corrupt(_) | Error::UnsupportedVersion(_) => WpStatus::Corrupt,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> WpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => WpStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            WpStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            WpStatus::Panic
        }
    }
}

unsafe fn nonnull<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn length_error(what: &str, got: usize, want: usize) -> Failure {
    Failure::Lib(Error::DimensionMismatch(format!("{what} has {got} values, expected {want}")))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a frame. On success `*out` owns a handle to release with
/// [`wp_frame_free`].
///
/// # Safety
/// `bank`, `wavelet` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wp_frame_new(bank: *const WpBank, wavelet: *const WpWavelet, out: *mut *mut WpFrame) -> WpStatus {
    guard(|| {
        let bank = nonnull(bank, "bank")?;
        let w = nonnull(wavelet, "wavelet")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let params = CauchyParams::new(w.alpha, w.beta, w.gamma_re, w.gamma_im, true)?;
        let spec = FilterBankSpec::from_range(
            bank.length,
            bank.sample_rate,
            bank.channels,
            bank.fmin,
            bank.fmax,
            bank.decimation,
            &params,
        )?;
        let frame = WaveletFrame::new(spec, params)?;
        *out = Box::into_raw(Box::new(WpFrame(frame)));
        Ok(())
    })
}

/// Releases a frame; null is ignored.
///
/// # Safety
/// `frame` must be null or a handle from [`wp_frame_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wp_frame_free(frame: *mut WpFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Writes the signal length L, channel count K and hop count N.
///
/// # Safety
/// `frame` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn wp_frame_dims(frame: *const WpFrame, length: *mut usize, channels: *mut usize, hops: *mut usize) -> WpStatus {
    guard(|| {
        let spec = nonnull(frame, "frame")?.0.spec();
        for (p, v) in [(length, spec.length), (channels, spec.channels), (hops, spec.hops())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Analyzes `len` samples into a new grid owned by `*out`.
///
/// # Safety
/// `frame` must be a live handle, `signal` must point to `len` readable
/// doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wp_frame_analyze(frame: *const WpFrame, signal: *const f64, len: usize, out: *mut *mut WpGrid) -> WpStatus {
    guard(|| {
        let frame = nonnull(frame, "frame")?;
        let signal = slice(signal, len, "signal")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let grid = frame.0.analyze(signal)?;
        *out = Box::into_raw(Box::new(WpGrid(grid)));
        Ok(())
    })
}

/// Synthesizes a grid into `len` = L samples at `out`.
///
/// # Safety
/// `frame` and `grid` must be live handles and `out` must point to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_frame_synthesize(frame: *const WpFrame, grid: *const WpGrid, out: *mut f64, len: usize) -> WpStatus {
    guard(|| {
        let frame = nonnull(frame, "frame")?;
        let grid = nonnull(grid, "grid")?;
        let out = slice_mut(out, len, "out")?;
        let want = frame.0.spec().length;
        if len != want {
            return Err(length_error("output buffer", len, want));
        }
        out.copy_from_slice(&frame.0.synthesize(&grid.0)?);
        Ok(())
    })
}

/// Recovers a signal from the magnitudes of `target` and writes it to
/// `out` (L samples). The spectral convergence of the result is stored in
/// `*sc_db` when that pointer is not null.
///
/// # Safety
/// `frame`, `target` and `options` must be valid, `out` must point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_reconstruct(
    frame: *const WpFrame,
    target: *const WpGrid,
    options: *const WpReconstructOptions,
    out: *mut f64,
    len: usize,
    sc_db: *mut f64,
) -> WpStatus {
    guard(|| {
        let frame = nonnull(frame, "frame")?;
        let target = nonnull(target, "target")?;
        let opts = nonnull(options, "options")?;
        let out = slice_mut(out, len, "out")?;
        let want = frame.0.spec().length;
        if len != want {
            return Err(length_error("output buffer", len, want));
        }
        let defaults = FglimConfig::default();
        let cfg = PipelineConfig {
            tol: opts.tol,
            seed: opts.seed,
            fglim: FglimConfig {
                max_iter: if opts.max_iter == 0 { defaults.max_iter } else { opts.max_iter },
                momentum: opts.momentum,
                ..defaults
            },
        };
        let method = match opts.method {
            WpMethod::Wpghi => Method::Wpghi,
            WpMethod::RFglim => Method::RFglim,
            WpMethod::WFglim => Method::WFglim,
        };
        let rec = reconstruct(&frame.0, &target.0.magnitude(), method, &cfg)?;
        out.copy_from_slice(&rec.signal);
        if !sc_db.is_null() {
            *sc_db = rec.sc_db;
        }
        Ok(())
    })
}

/// Default reconstruction options for a method.
#[no_mangle]
pub extern "C" fn wp_reconstruct_options_default(method: WpMethod) -> WpReconstructOptions {
    let d = PipelineConfig::default();
    WpReconstructOptions {
        method,
        seed: d.seed,
        max_iter: d.fglim.max_iter,
        momentum: d.fglim.momentum,
        tol: d.tol,
    }
}

/// Spectral convergence in dB between the magnitudes of two grids.
///
/// # Safety
/// `proposed` and `target` must be live handles and `sc_db` valid.
#[no_mangle]
pub unsafe extern "C" fn wp_spectral_convergence(proposed: *const WpGrid, target: *const WpGrid, sc_db: *mut f64) -> WpStatus {
    guard(|| {
        let p = nonnull(proposed, "proposed")?;
        let t = nonnull(target, "target")?;
        if sc_db.is_null() {
            return Err(Failure::Null("sc_db"));
        }
        *sc_db = spectral_convergence(&p.0.magnitude(), &t.0.magnitude())?;
        Ok(())
    })
}

/// Writes K and N of a grid.
///
/// # Safety
/// `grid` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn wp_grid_dims(grid: *const WpGrid, channels: *mut usize, hops: *mut usize) -> WpStatus {
    guard(|| {
        let (k, n) = nonnull(grid, "grid")?.0.wavelet.dim();
        if !channels.is_null() {
            *channels = k;
        }
        if !hops.is_null() {
            *hops = n;
        }
        Ok(())
    })
}

/// Copies the coefficient moduli as a row-major (K + 1) × N matrix: the K
/// wavelet rows followed by the lowpass row.
///
/// # Safety
/// `grid` must be a live handle and `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_grid_magnitude(grid: *const WpGrid, out: *mut f64, len: usize) -> WpStatus {
    guard(|| {
        let grid = &nonnull(grid, "grid")?.0;
        let out = slice_mut(out, len, "out")?;
        let (k, n) = grid.wavelet.dim();
        if len != (k + 1) * n {
            return Err(length_error("output buffer", len, (k + 1) * n));
        }
        for (o, c) in out.iter_mut().zip(grid.wavelet.iter()) {
            *o = c.norm();
        }
        for (o, v) in out[k * n..].iter_mut().zip(&grid.lowpass) {
            *o = v.abs();
        }
        Ok(())
    })
}

/// Saves a grid in the binary DCWT format.
///
/// # Safety
/// `grid` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn wp_grid_save(grid: *const WpGrid, path: *const c_char) -> WpStatus {
    guard(|| {
        let grid = nonnull(grid, "grid")?;
        let path = path_arg(path)?;
        save_grid(path, &grid.0)?;
        Ok(())
    })
}

/// Loads a grid saved by [`wp_grid_save`] into a new handle at `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wp_grid_load(path: *const c_char, out: *mut *mut WpGrid) -> WpStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let grid = load_grid(path)?;
        *out = Box::into_raw(Box::new(WpGrid(grid)));
        Ok(())
    })
}

/// Releases a grid; null is ignored.
///
/// # Safety
/// `grid` must be null or a live handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wp_grid_free(grid: *mut WpGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, Failure> {
    if path.is_null() {
        return Err(Failure::Null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidParameter("path is not valid UTF-8".into())))
}
