//! C ABI over the fusion library.
//!
//! Objects are opaque handles created by `qfuse_*_new`/`qfuse_*_read` style
//! functions and released with the matching `*_free`. Fallible calls return a
//! [`QfuseStatus`]; the message of the last failure on the calling thread is
//! available from [`qfuse_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use qfuse::fusion::{fuse, FuseConfig};
use qfuse::patch::build_dictionary;
use qfuse::pipeline::{from_quaternion, read_image, to_quaternion, write_png, RgbImage, RunConfig};
use qfuse::qfed::decompose;
use qfuse::quat::QuaternionMatrix;
use qfuse::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QfuseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

/// Dataset presets for the decomposition weights.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QfusePreset {
    Lytro = 0,
    Mffw = 1,
    MfiWhu = 2,
}

/// Quaternion image; color images are pure quaternions `r·i + g·j + b·k`.
pub struct QfuseImage {
    q: QuaternionMatrix,
}

/// Fusion parameters.
pub struct QfuseConfig {
    cfg: FuseConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> QfuseStatus {
    match e {
        Error::ShapeMismatch { .. } | Error::PatchTooLarge { .. } | Error::TooFewInputs { .. } => {
            QfuseStatus::ShapeMismatch
        }
        Error::InvalidParameter(_) | Error::Config(_) => QfuseStatus::InvalidArgument,
        Error::Io { .. } | Error::Image { .. } | Error::Format { .. } => QfuseStatus::Io,
        _ => QfuseStatus::Numerical,
    }
}

struct Fail(QfuseStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QfuseStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QfuseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QfuseStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QfuseStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(QfuseStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn boxed(q: QuaternionMatrix) -> *mut QfuseImage {
    Box::into_raw(Box::new(QfuseImage { q }))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qfuse_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qfuse_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an image from `width·height` interleaved row-major RGB triples in
/// `[0, 1]` (values outside are clamped).
///
/// # Safety
/// `rgb` must point to `3·width·height` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_from_rgb(
    rgb: *const f64,
    width: usize,
    height: usize,
    out: *mut *mut QfuseImage,
) -> QfuseStatus {
    guard(|| {
        if rgb.is_null() {
            return Err(null("rgb"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = width.checked_mul(height).and_then(|n| n.checked_mul(3));
        let Some(len) = len.filter(|&n| n > 0) else {
            return Err(Fail(
                QfuseStatus::InvalidArgument,
                "image must be non-empty".into(),
            ));
        };
        let data = std::slice::from_raw_parts(rgb, len);
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let img = RgbImage::new(width, height, pixels)?;
        *out = boxed(to_quaternion(&img));
        Ok(())
    })
}

/// Reads a PNG or JPEG file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_read(
    path: *const c_char,
    out: *mut *mut QfuseImage,
) -> QfuseStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = boxed(to_quaternion(&read_image(&path)?));
        Ok(())
    })
}

/// Writes the imaginary parts as an 8-bit RGB PNG.
///
/// # Safety
/// `img` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_write_png(
    img: *const QfuseImage,
    path: *const c_char,
) -> QfuseStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        let path = path_arg(path)?;
        write_png(&from_quaternion(&img.q), &path)?;
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_width(img: *const QfuseImage) -> usize {
    img.as_ref().map_or(0, |i| i.q.cols())
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_height(img: *const QfuseImage) -> usize {
    img.as_ref().map_or(0, |i| i.q.rows())
}

/// Copies interleaved RGB (the i, j, k parts clamped to `[0, 1]`) into `out`,
/// which must hold `len ≥ 3·width·height` doubles.
///
/// # Safety
/// `img` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_to_rgb(
    img: *const QfuseImage,
    out: *mut f64,
    len: usize,
) -> QfuseStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rgb = from_quaternion(&img.q);
        let need = 3 * rgb.pixels().len();
        if len < need {
            return Err(Fail(
                QfuseStatus::InvalidArgument,
                format!("buffer holds {len} values, need {need}"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (d, p) in dst.chunks_exact_mut(3).zip(rgb.pixels()) {
            d.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Copies the raw quaternions, row-major, as `(real, i, j, k)` quadruples into
/// `out`, which must hold `len ≥ 4·width·height` doubles.
///
/// # Safety
/// `img` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_quaternions(
    img: *const QfuseImage,
    out: *mut f64,
    len: usize,
) -> QfuseStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (m, n) = img.q.shape();
        if len < 4 * m * n {
            return Err(Fail(
                QfuseStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", 4 * m * n),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, 4 * m * n);
        for r in 0..m {
            for c in 0..n {
                let o = 4 * (r * n + c);
                dst[o..o + 4].copy_from_slice(&img.q.get(r, c).to_array());
            }
        }
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn qfuse_image_free(img: *mut QfuseImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Default parameters.
#[no_mangle]
pub extern "C" fn qfuse_config_new() -> *mut QfuseConfig {
    Box::into_raw(Box::new(QfuseConfig {
        cfg: FuseConfig::default(),
    }))
}

/// Parameters from a flat JSON run configuration (for example
/// `{"preset": "mffw", "max_iter": 30}`); path fields are ignored.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfuse_config_from_json(
    json: *const c_char,
    out: *mut *mut QfuseConfig,
) -> QfuseStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Fail(QfuseStatus::InvalidArgument, "json is not UTF-8".into()))?;
        let run: RunConfig = serde_json::from_str(text)
            .map_err(|e| Fail(QfuseStatus::InvalidArgument, e.to_string()))?;
        let cfg = run.fuse_config()?;
        *out = Box::into_raw(Box::new(QfuseConfig { cfg }));
        Ok(())
    })
}

/// Sets `(α, β, λ)` from a preset.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qfuse_config_set_preset(
    cfg: *mut QfuseConfig,
    preset: QfusePreset,
) -> QfuseStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let p = match preset {
            QfusePreset::Lytro => qfuse::pipeline::Preset::Lytro,
            QfusePreset::Mffw => qfuse::pipeline::Preset::Mffw,
            QfusePreset::MfiWhu => qfuse::pipeline::Preset::MfiWhu,
        };
        (cfg.cfg.qfed.alpha, cfg.cfg.qfed.beta, cfg.cfg.qfed.lambda) = p.weights();
        Ok(())
    })
}

/// Caps the decomposition iterations.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qfuse_config_set_max_iter(
    cfg: *mut QfuseConfig,
    max_iter: usize,
) -> QfuseStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        if max_iter == 0 {
            return Err(Fail(
                QfuseStatus::InvalidArgument,
                "max_iter must be at least 1".into(),
            ));
        }
        cfg.cfg.qfed.max_iter = max_iter;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn qfuse_config_free(cfg: *mut QfuseConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Fuses `n ≥ 2` equally sized images. A null `cfg` means defaults.
///
/// # Safety
/// `inputs` must point to `n` live image handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfuse_fuse(
    inputs: *const *const QfuseImage,
    n: usize,
    cfg: *const QfuseConfig,
    out: *mut *mut QfuseImage,
) -> QfuseStatus {
    guard(|| {
        if inputs.is_null() {
            return Err(null("inputs"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let handles = std::slice::from_raw_parts(inputs, n);
        let images = handles
            .iter()
            .map(|h| {
                h.as_ref()
                    .map(|i| i.q.clone())
                    .ok_or_else(|| null("input image"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let default = FuseConfig::default();
        let cfg = cfg.as_ref().map_or(&default, |c| &c.cfg);
        let res = fuse(&images, cfg)?;
        *out = boxed(res.fused);
        Ok(())
    })
}

/// Splits an image into base, detail and noise layers (`I = B + D + E`).
/// Any of the output pointers may be null to discard that layer;
/// `iterations` (nullable) receives the iteration count.
///
/// # Safety
/// `img` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qfuse_decompose(
    img: *const QfuseImage,
    cfg: *const QfuseConfig,
    base: *mut *mut QfuseImage,
    detail: *mut *mut QfuseImage,
    noise: *mut *mut QfuseImage,
    iterations: *mut usize,
) -> QfuseStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        let default = FuseConfig::default();
        let cfg = cfg.as_ref().map_or(&default, |c| &c.cfg);
        let side = cfg.qfed.patch_side;
        let dict = build_dictionary(side * side, cfg.qfed.atom_count)?;
        let res = decompose(&img.q, &cfg.qfed, &dict)?;
        for (dst, layer) in [(base, res.b), (detail, res.d), (noise, res.e)] {
            if !dst.is_null() {
                *dst = boxed(layer);
            }
        }
        if !iterations.is_null() {
            *iterations = res.iterations;
        }
        Ok(())
    })
}
