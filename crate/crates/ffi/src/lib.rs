//! C ABI over the geodsig library.
//!
//! Every function returns a [`GeodsigStatus`]; results come back through out
//! pointers. On failure the thread-local last error holds the error kind and
//! message until the next call on the same thread. Objects are opaque handles
//! that must be released with their `_free` function; strings returned by the
//! library are released with [`geodsig_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use geodsig::intervene::{pca_project, perturb, NoiseKind, NoiseSpec, SvdMethod};
use geodsig::signatures::dump_signature;
use geodsig::spectral::RandomizedParams;
use geodsig::stats::{partial_correlation, pearson, pearson_pvalue};
use geodsig::{effdim_trace, extract_signature, total_compression, ActivationMatrix, Dump, Error};
use geodsig::{GeometrySignature, SignatureRecord};
use nalgebra::DMatrix;

/// Outcome of a call. Values are stable across releases.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodsigStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Manifest, CSV or invariant problems in the input files.
    MalformedInput = 4,
    /// The dump lacks a head, labels or a requested column.
    MissingData = 5,
    ShapeMismatch = 6,
    /// Degenerate data, non-finite values or solver failure.
    Numerical = 7,
    /// The library panicked; the handle arguments should not be reused.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodsigNoiseKind {
    Gaussian = 0,
    Uniform = 1,
    Dropout = 2,
    SaltPepper = 3,
}

fn noise_kind(code: i32) -> Result<NoiseKind, Failure> {
    Ok(match code {
        c if c == GeodsigNoiseKind::Gaussian as i32 => NoiseKind::Gaussian,
        c if c == GeodsigNoiseKind::Uniform as i32 => NoiseKind::Uniform,
        c if c == GeodsigNoiseKind::Dropout as i32 => NoiseKind::Dropout,
        c if c == GeodsigNoiseKind::SaltPepper as i32 => NoiseKind::SaltPepper,
        c => return Err(Failure::Invalid(format!("unknown noise kind {c}"))),
    })
}

/// Scalar summary of a signature.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeodsigSummary {
    pub total_compression: f64,
    pub input_effdim: f64,
    pub output_effdim: f64,
    pub bottleneck_effdim: f64,
    pub max_effdim: f64,
    pub depth: usize,
    pub sample_count: usize,
}

/// Dense matrix of f64 values.
pub struct GeodsigMatrix {
    data: DMatrix<f64>,
}

/// An opened activation dump.
pub struct GeodsigDump {
    dump: Dump,
}

/// A computed signature, with model metadata when it came from a dump.
pub struct GeodsigSignature {
    signature: GeometrySignature,
    record: Option<SignatureRecord>,
}

struct LastError {
    kind: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_last_error(kind: &str, message: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { kind: clean(kind), message: clean(message) }));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_for(err: &Error) -> GeodsigStatus {
    use GeodsigStatus as S;
    if err.is_numerical() {
        return S::Numerical;
    }
    match err {
        Error::MissingFile(_) | Error::Io { .. } => S::Io,
        Error::MalformedManifest(_)
        | Error::InvariantViolation(_)
        | Error::ShortFile { .. }
        | Error::MalformedCsv(_)
        | Error::TooFewLayers(_)
        | Error::MixedSampleCounts { .. } => S::MalformedInput,
        Error::HeadAbsent | Error::LabelsAbsent | Error::UnknownColumn(_) | Error::NoCommonEpochs => S::MissingData,
        Error::ShapeMismatch(_)
        | Error::LengthMismatch(..)
        | Error::LabelOutOfRange { .. }
        | Error::RankRequestTooLarge { .. }
        | Error::LayerOutOfRange(_) => S::ShapeMismatch,
        _ => S::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::Lib(err)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn guard(body: impl FnOnce() -> Outcome) -> GeodsigStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GeodsigStatus::Ok,
        Ok(Err(Failure::Null(arg))) => {
            set_last_error("NullPointer", &format!("argument `{arg}` is null"));
            GeodsigStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_last_error("InvalidArgument", &msg);
            GeodsigStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(err))) => {
            set_last_error(err.kind(), &err.to_string());
            status_for(&err)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error("Panic", &msg);
            GeodsigStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or(Failure::Null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn path_arg(p: *const c_char, name: &'static str) -> Result<PathBuf, Failure> {
    let s = unsafe { borrow(p, name) }?;
    let s = unsafe { CStr::from_ptr(s) };
    s.to_str().map(PathBuf::from).map_err(|_| Failure::Invalid(format!("`{name}` is not valid UTF-8")))
}

fn limit(sample_limit: usize) -> Option<usize> {
    (sample_limit > 0).then_some(sample_limit)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn geodsig_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Kind of the last error on this thread (for example "TooFewLayers"), or
/// NULL after a successful call. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn geodsig_last_error_kind() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |l| l.kind.as_ptr()))
}

/// Message of the last error on this thread, or NULL.
#[no_mangle]
pub extern "C" fn geodsig_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |l| l.message.as_ptr()))
}

/// Release a string returned by the library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn geodsig_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Copy a row-major `rows x cols` buffer into a new matrix.
#[no_mangle]
pub unsafe extern "C" fn geodsig_matrix_new(
    rows: usize,
    cols: usize,
    row_major: *const f64,
    out: *mut *mut GeodsigMatrix,
) -> GeodsigStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let len = rows.checked_mul(cols).ok_or_else(|| Failure::Invalid("rows * cols overflows".into()))?;
        let values = unsafe { slice(row_major, len, "row_major") }?;
        *out = Box::into_raw(Box::new(GeodsigMatrix { data: DMatrix::from_row_slice(rows, cols, values) }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn geodsig_matrix_free(matrix: *mut GeodsigMatrix) {
    if !matrix.is_null() {
        drop(unsafe { Box::from_raw(matrix) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn geodsig_matrix_shape(
    matrix: *const GeodsigMatrix,
    rows: *mut usize,
    cols: *mut usize,
) -> GeodsigStatus {
    guard(|| {
        let m = unsafe { borrow(matrix, "matrix") }?;
        *unsafe { out_ref(rows, "rows") }? = m.data.nrows();
        *unsafe { out_ref(cols, "cols") }? = m.data.ncols();
        Ok(())
    })
}

/// Copy the matrix into `out` in row-major order. `len` must equal rows * cols.
#[no_mangle]
pub unsafe extern "C" fn geodsig_matrix_read(matrix: *const GeodsigMatrix, out: *mut f64, len: usize) -> GeodsigStatus {
    guard(|| {
        let m = unsafe { borrow(matrix, "matrix") }?;
        if len != m.data.len() {
            return Err(Error::ShapeMismatch(format!("buffer holds {len} values, matrix has {}", m.data.len())).into());
        }
        if len == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(out, len) };
        let cols = m.data.ncols();
        for (i, v) in dst.iter_mut().enumerate() {
            *v = m.data[(i / cols, i % cols)];
        }
        Ok(())
    })
}

/// Effective dimension of the matrix's rows. `degenerate` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn geodsig_effdim(
    matrix: *const GeodsigMatrix,
    out: *mut f64,
    degenerate: *mut bool,
) -> GeodsigStatus {
    guard(|| {
        let m = unsafe { borrow(matrix, "matrix") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let v = effdim_trace(&m.data)?;
        *out = v.value;
        if let Some(flag) = unsafe { degenerate.as_mut() } {
            *flag = v.degenerate;
        }
        Ok(())
    })
}

/// `ln(d_last / d_first)`.
#[no_mangle]
pub unsafe extern "C" fn geodsig_total_compression(d_first: f64, d_last: f64, out: *mut f64) -> GeodsigStatus {
    guard(|| {
        *unsafe { out_ref(out, "out") }? = total_compression(d_first, d_last)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn geodsig_pearson(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> GeodsigStatus {
    guard(|| {
        let (x, y) = unsafe { (slice(x, n, "x")?, slice(y, n, "y")?) };
        *unsafe { out_ref(out, "out") }? = pearson(x, y)?;
        Ok(())
    })
}

/// Two-sided p-value of a Pearson correlation `r` over `n` pairs.
#[no_mangle]
pub unsafe extern "C" fn geodsig_pearson_pvalue(r: f64, n: usize, out: *mut f64) -> GeodsigStatus {
    guard(|| {
        *unsafe { out_ref(out, "out") }? = pearson_pvalue(r, n)?;
        Ok(())
    })
}

/// Correlation of `g` and `a` controlling for `p`.
#[no_mangle]
pub unsafe extern "C" fn geodsig_partial_correlation(
    g: *const f64,
    a: *const f64,
    p: *const f64,
    n: usize,
    out: *mut f64,
) -> GeodsigStatus {
    guard(|| {
        let (g, a, p) = unsafe { (slice(g, n, "g")?, slice(a, n, "a")?, slice(p, n, "p")?) };
        *unsafe { out_ref(out, "out") }? = partial_correlation(g, a, p)?;
        Ok(())
    })
}

/// Perturbed copy of `matrix`. `kind` is a `GeodsigNoiseKind` value.
/// Deterministic in `seed`.
#[no_mangle]
pub unsafe extern "C" fn geodsig_perturb(
    matrix: *const GeodsigMatrix,
    kind: i32,
    level: f64,
    seed: u64,
    out: *mut *mut GeodsigMatrix,
) -> GeodsigStatus {
    guard(|| {
        let m = unsafe { borrow(matrix, "matrix") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let spec = NoiseSpec { kind: noise_kind(kind)?, level, seed };
        *out = Box::into_raw(Box::new(GeodsigMatrix { data: perturb(&m.data, &spec)? }));
        Ok(())
    })
}

/// Reconstruction of `matrix` from the fewest principal components reaching
/// `threshold` of the variance. `components_kept` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn geodsig_pca_project(
    matrix: *const GeodsigMatrix,
    threshold: f64,
    out: *mut *mut GeodsigMatrix,
    components_kept: *mut usize,
) -> GeodsigStatus {
    guard(|| {
        let m = unsafe { borrow(matrix, "matrix") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let proj = pca_project(&m.data, threshold, SvdMethod::Auto, RandomizedParams::default())?;
        if let Some(k) = unsafe { components_kept.as_mut() } {
            *k = proj.components_kept;
        }
        *out = Box::into_raw(Box::new(GeodsigMatrix { data: proj.projected }));
        Ok(())
    })
}

/// Open a dump directory and validate its manifest.
#[no_mangle]
pub unsafe extern "C" fn geodsig_dump_open(dir: *const c_char, out: *mut *mut GeodsigDump) -> GeodsigStatus {
    guard(|| {
        let dir = unsafe { path_arg(dir, "dir") }?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = Box::into_raw(Box::new(GeodsigDump { dump: Dump::open(dir)? }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn geodsig_dump_free(dump: *mut GeodsigDump) {
    if !dump.is_null() {
        drop(unsafe { Box::from_raw(dump) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn geodsig_dump_shape(
    dump: *const GeodsigDump,
    depth: *mut usize,
    sample_count: *mut usize,
) -> GeodsigStatus {
    guard(|| {
        let d = unsafe { borrow(dump, "dump") }?;
        *unsafe { out_ref(depth, "depth") }? = d.dump.depth();
        *unsafe { out_ref(sample_count, "sample_count") }? = d.dump.sample_count();
        Ok(())
    })
}

/// Load layer `index`. A `sample_limit` of 0 loads every row.
#[no_mangle]
pub unsafe extern "C" fn geodsig_dump_load_layer(
    dump: *const GeodsigDump,
    index: usize,
    sample_limit: usize,
    seed: u64,
    out: *mut *mut GeodsigMatrix,
) -> GeodsigStatus {
    guard(|| {
        let d = unsafe { borrow(dump, "dump") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let layer = d.dump.load_layer(index, limit(sample_limit), seed)?;
        *out = Box::into_raw(Box::new(GeodsigMatrix { data: layer.data }));
        Ok(())
    })
}

/// Signature of a dump. A `sample_limit` of 0 uses every row.
#[no_mangle]
pub unsafe extern "C" fn geodsig_dump_signature(
    dump: *const GeodsigDump,
    sample_limit: usize,
    seed: u64,
    out: *mut *mut GeodsigSignature,
) -> GeodsigStatus {
    guard(|| {
        let d = unsafe { borrow(dump, "dump") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let record = dump_signature(&d.dump, limit(sample_limit), seed)?;
        *out = Box::into_raw(Box::new(GeodsigSignature { signature: record.signature.clone(), record: Some(record) }));
        Ok(())
    })
}

/// Signature of `count` layers given input first.
#[no_mangle]
pub unsafe extern "C" fn geodsig_signature_from_layers(
    layers: *const *const GeodsigMatrix,
    count: usize,
    out: *mut *mut GeodsigSignature,
) -> GeodsigStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        if count > 0 && layers.is_null() {
            return Err(Failure::Null("layers"));
        }
        let ptrs = if count == 0 { &[][..] } else { unsafe { std::slice::from_raw_parts(layers, count) } };
        let mats = ptrs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let m = unsafe { borrow(p, "layers[i]") }?;
                Ok(ActivationMatrix::new(m.data.clone()).with_layer_index(i))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        *out = Box::into_raw(Box::new(GeodsigSignature { signature: extract_signature(&mats)?, record: None }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn geodsig_signature_free(signature: *mut GeodsigSignature) {
    if !signature.is_null() {
        drop(unsafe { Box::from_raw(signature) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn geodsig_signature_summary(
    signature: *const GeodsigSignature,
    out: *mut GeodsigSummary,
) -> GeodsigStatus {
    guard(|| {
        let s = &unsafe { borrow(signature, "signature") }?.signature;
        *unsafe { out_ref(out, "out") }? = GeodsigSummary {
            total_compression: s.total_compression,
            input_effdim: s.input_effdim(),
            output_effdim: s.output_effdim,
            bottleneck_effdim: s.bottleneck_effdim,
            max_effdim: s.max_effdim,
            depth: s.depth,
            sample_count: s.sample_count,
        };
        Ok(())
    })
}

/// Copy the per-layer effective dimensions into `out`, which must hold
/// exactly `depth` values.
#[no_mangle]
pub unsafe extern "C" fn geodsig_signature_layer_effdims(
    signature: *const GeodsigSignature,
    out: *mut f64,
    len: usize,
) -> GeodsigStatus {
    guard(|| {
        let values = &unsafe { borrow(signature, "signature") }?.signature.per_layer_effdim;
        if len != values.len() {
            return Err(
                Error::ShapeMismatch(format!("buffer holds {len} values, signature has {}", values.len())).into()
            );
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(values);
        Ok(())
    })
}

/// JSON rendering, the same document the command-line tool writes. Release
/// with [`geodsig_string_free`].
#[no_mangle]
pub unsafe extern "C" fn geodsig_signature_to_json(
    signature: *const GeodsigSignature,
    out: *mut *mut c_char,
) -> GeodsigStatus {
    guard(|| {
        let s = unsafe { borrow(signature, "signature") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let text = match &s.record {
            Some(record) => record.to_json(),
            None => serde_json::to_string_pretty(&s.signature).expect("signature serializes"),
        };
        *out = into_c_string(text);
        Ok(())
    })
}
