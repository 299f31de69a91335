//! C ABI for `cohspace`.
//!
//! Objects cross the boundary as opaque handles created by `coh_*_new` /
//! `coh_*_build` and released by the matching `coh_*_free`. Every fallible
//! call returns a [`CohStatus`]; on failure the message is kept per thread
//! and can be copied out with [`coh_last_error`].
//!
//! Points are passed as flat arrays of `double` pairs `(re, im)`, `dim`
//! pairs per point. Matrices come back row-major as interleaved pairs.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cohspace::error::CohError;
use cohspace::kernel::{check_coherence, gram_matrix, KernelSpace, Point, SpaceDescriptor};
use cohspace::linalg::C64;
use cohspace::quantum_space::{build_quantum_space, QuantumBasis};
use cohspace::spectra::{solve_implicit_spectrum, ModelSpec, ScanOptions, SpectrumResult};

/// Status codes; one per library error kind.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    InvalidPoint = 10,
    CoherenceViolation = 11,
    KernelNotPsd = 12,
    Numerical = 13,
    OutOfSpan = 14,
    SpanEscape = 15,
    StepSize = 16,
    Stiffness = 17,
    DegenerateMetric = 18,
    IntegratorFailure = 19,
    Truncation = 20,
    Normalization = 21,
    ModelDegeneracy = 22,
    NonClosing = 23,
    StatePositivity = 24,
    Precondition = 25,
    Domain = 26,
    Dimension = 27,
    CheckFailed = 28,
    Config = 29,
    Io = 30,
    IndexOutOfRange = 31,
}

impl From<&CohError> for CohStatus {
    fn from(e: &CohError) -> Self {
        match e {
            CohError::InvalidPoint { .. } => CohStatus::InvalidPoint,
            CohError::CoherenceViolation { .. } => CohStatus::CoherenceViolation,
            CohError::KernelNotPsd { .. } => CohStatus::KernelNotPsd,
            CohError::Numerical(_) => CohStatus::Numerical,
            CohError::OutOfSpan { .. } => CohStatus::OutOfSpan,
            CohError::SpanEscape { .. } => CohStatus::SpanEscape,
            CohError::StepSize(_) => CohStatus::StepSize,
            CohError::Stiffness { .. } => CohStatus::Stiffness,
            CohError::DegenerateMetric { .. } => CohStatus::DegenerateMetric,
            CohError::IntegratorFailure(_) => CohStatus::IntegratorFailure,
            CohError::Truncation(_) => CohStatus::Truncation,
            CohError::Normalization(_) => CohStatus::Normalization,
            CohError::ModelDegeneracy { .. } => CohStatus::ModelDegeneracy,
            CohError::NonClosing(_) => CohStatus::NonClosing,
            CohError::StatePositivity(_) => CohStatus::StatePositivity,
            CohError::Precondition(_) => CohStatus::Precondition,
            CohError::Domain(_) => CohStatus::Domain,
            CohError::Dimension(_) => CohStatus::Dimension,
            CohError::CheckFailed(_) => CohStatus::CheckFailed,
            CohError::Config(_) => CohStatus::Config,
            CohError::Io(_) => CohStatus::Io,
        }
    }
}

/// Opaque coherent space.
pub struct CohSpace {
    inner: KernelSpace,
}

/// Opaque quantum basis built from sampled points.
pub struct CohBasis {
    inner: QuantumBasis,
}

/// Opaque solved spectrum.
pub struct CohSpectrum {
    inner: SpectrumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CohStatus, String);

impl From<CohError> for Failure {
    fn from(e: CohError) -> Self {
        Failure(CohStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CohStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CohStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CohStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside cohspace".into());
            CohStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CohStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn points_arg(data: *const f64, n_points: usize, dim: usize) -> Result<Vec<Point>, Failure> {
    if n_points == 0 {
        return Ok(Vec::new());
    }
    if data.is_null() {
        return Err(null("points"));
    }
    let flat = std::slice::from_raw_parts(data, 2 * n_points * dim);
    Ok(flat
        .chunks(2 * dim)
        .map(|p| Point::new(p.chunks(2).map(|v| C64::new(v[0], v[1])).collect()))
        .collect())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure(CohStatus::Config, e.to_string()))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, 0 if
/// there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn coh_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn coh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a space from its JSON descriptor, e.g. `{"kind":"spin","exponent":2}`.
///
/// # Safety
/// `descriptor` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coh_space_new(descriptor: *const c_char, out: *mut *mut CohSpace) -> CohStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d: SpaceDescriptor = parse_json(str_arg(descriptor, "descriptor")?)?;
        let inner = d.build()?;
        *out = Box::into_raw(Box::new(CohSpace { inner }));
        Ok(())
    })
}

/// # Safety
/// `space` must come from [`coh_space_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coh_space_free(space: *mut CohSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of complex label coordinates, 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coh_space_label_dim(space: *const CohSpace) -> usize {
    space.as_ref().map_or(0, |s| s.inner.label_dim())
}

/// `K(z, z2)`.
///
/// # Safety
/// `z` and `z2` must hold `2 * dim` doubles each; `out_re`, `out_im` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn coh_space_eval(
    space: *const CohSpace,
    z: *const f64,
    z2: *const f64,
    dim: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> CohStatus {
    guard(|| {
        let s = handle(space, "space")?;
        let a = points_arg(z, 1, dim)?;
        let b = points_arg(z2, 1, dim)?;
        let (re, im) = (out_arg(out_re, "out_re")?, out_arg(out_im, "out_im")?);
        let v = s.inner.eval(&a[0], &b[0])?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Hermitian Gram matrix of `n_points` points, written row-major into
/// `out` (`2 * n_points * n_points` doubles).
///
/// # Safety
/// `points` must hold `2 * n_points * dim` doubles and `out` must be
/// writable for the size above.
#[no_mangle]
pub unsafe extern "C" fn coh_space_gram(
    space: *const CohSpace,
    points: *const f64,
    n_points: usize,
    dim: usize,
    out: *mut f64,
) -> CohStatus {
    guard(|| {
        let s = handle(space, "space")?;
        let pts = points_arg(points, n_points, dim)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let g = gram_matrix(&s.inner, &pts)?;
        let dst = std::slice::from_raw_parts_mut(out, 2 * n_points * n_points);
        for i in 0..n_points {
            for j in 0..n_points {
                let v = g[(i, j)];
                dst[2 * (i * n_points + j)] = v.re;
                dst[2 * (i * n_points + j) + 1] = v.im;
            }
        }
        Ok(())
    })
}

/// Positive-semidefiniteness test of the Gram matrix at relative tolerance
/// `tol`. A failed test is not an error: `*out_passed` is set to 0.
///
/// # Safety
/// As for [`coh_space_gram`]; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn coh_space_check(
    space: *const CohSpace,
    points: *const f64,
    n_points: usize,
    dim: usize,
    tol: f64,
    out_min_eigenvalue: *mut f64,
    out_passed: *mut i32,
) -> CohStatus {
    guard(|| {
        let s = handle(space, "space")?;
        let pts = points_arg(points, n_points, dim)?;
        let (m, p) = (out_arg(out_min_eigenvalue, "out_min_eigenvalue")?, out_arg(out_passed, "out_passed")?);
        let v = check_coherence(&s.inner, &pts, tol)?;
        *m = v.min_eigenvalue;
        *p = v.passed as i32;
        Ok(())
    })
}

/// Quantum space spanned by the given points.
///
/// # Safety
/// As for [`coh_space_gram`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coh_basis_build(
    space: *const CohSpace,
    points: *const f64,
    n_points: usize,
    dim: usize,
    tol: f64,
    out: *mut *mut CohBasis,
) -> CohStatus {
    guard(|| {
        let s = handle(space, "space")?;
        let pts = points_arg(points, n_points, dim)?;
        let out = out_arg(out, "out")?;
        let inner = build_quantum_space(&s.inner, &pts, tol)?;
        *out = Box::into_raw(Box::new(CohBasis { inner }));
        Ok(())
    })
}

/// Rank of the basis, 0 for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coh_basis_rank(basis: *const CohBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.inner.rank())
}

/// # Safety
/// `basis` must come from [`coh_basis_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coh_basis_free(basis: *mut CohBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Discrete spectrum of a catalog model on `[lo, hi]`, e.g.
/// `{"model":"oscillator","hbar_omega":1}`.
///
/// # Safety
/// `model` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coh_spectrum_solve(
    model: *const c_char,
    lo: f64,
    hi: f64,
    tol: f64,
    out: *mut *mut CohSpectrum,
) -> CohStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec: ModelSpec = parse_json(str_arg(model, "model")?)?;
        let m = spec.build()?;
        let inner = solve_implicit_spectrum(&m, (lo, hi), ScanOptions::new(tol))?;
        *out = Box::into_raw(Box::new(CohSpectrum { inner }));
        Ok(())
    })
}

/// Number of discrete levels, 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coh_spectrum_len(spectrum: *const CohSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.discrete.len())
}

/// Energy and quantum number of level `index`.
///
/// # Safety
/// `spectrum` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn coh_spectrum_level(
    spectrum: *const CohSpectrum,
    index: usize,
    out_energy: *mut f64,
    out_n: *mut usize,
) -> CohStatus {
    guard(|| {
        let s = handle(spectrum, "spectrum")?;
        let (e, n) = (out_arg(out_energy, "out_energy")?, out_arg(out_n, "out_n")?);
        let root = s.inner.discrete.get(index).ok_or_else(|| {
            Failure(
                CohStatus::IndexOutOfRange,
                format!("level {index} of {}", s.inner.discrete.len()),
            )
        })?;
        *e = root.energy;
        *n = root.n;
        Ok(())
    })
}

/// # Safety
/// `spectrum` must come from [`coh_spectrum_solve`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn coh_spectrum_free(spectrum: *mut CohSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Runs a command-line config (see `formats.md`) and returns its payload
/// as a string to be released with [`coh_string_free`]. Output paths in
/// the config are ignored. A failed verification still yields the payload
/// together with [`CohStatus::CheckFailed`] or [`CohStatus::KernelNotPsd`].
///
/// # Safety
/// `config` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coh_run(config: *const c_char, out: *mut *mut c_char) -> CohStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let v: serde_json::Value = parse_json(str_arg(config, "config")?)?;
        let cfg = cohspace::cli::RunConfig::from_value(v).map_err(|m| Failure(CohStatus::Config, m))?;
        let r = cohspace::cli::run(&cfg)?;
        let text = String::from_utf8(r.payload).map_err(|_| Failure(CohStatus::InvalidUtf8, "payload".into()))?;
        *out = CString::new(text)
            .map_err(|_| Failure(CohStatus::InvalidUtf8, "payload contains NUL".into()))?
            .into_raw();
        match r.failure {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
