//! C interface to `dimmatch`.
//!
//! Images and similarity fields are opaque handles owned by the caller and
//! released with their `_free` function. Every fallible call returns a
//! [`DimStatus`]; on failure [`dim_last_error`] describes the problem until the
//! next failing call on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dimmatch::bench::{correspondence_map, AdditionalKind, MatchConfig, Method};
use dimmatch::conv::ConvMode;
use dimmatch::dim::{self, DimParams, PatchSpec};
use dimmatch::keypoints::{select_additional, SelectionStrategy};
use dimmatch::zncc::zncc_match;
use dimmatch::{BoundingBox, Colorspace, Error, Image, Plane};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    DegenerateTemplate = 4,
    DimensionMismatch = 5,
    OutOfBounds = 6,
    Internal = 7,
}

/// Convolution backend selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimConvMode {
    Auto = 0,
    Direct = 1,
    Fourier = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimColorspace {
    Gray = 0,
    Rgb = 1,
    CieLab = 2,
    Hsv = 3,
}

/// Additional-template placement strategy.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimStrategy {
    MaxCorrelation = 0,
    Keypoint = 1,
    Random = 2,
}

/// Axis-aligned box: top-left corner and size in pixels.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

/// Matcher settings. Start from `dim_params_default()`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimMatchParams {
    pub epsilon2: f64,
    /// Values <= 0 derive epsilon1 from the template bank.
    pub epsilon1: f64,
    /// 0 selects the default schedule.
    pub iterations: usize,
    pub lambda: f64,
    pub sigma_scale: f64,
    pub conv_mode: DimConvMode,
    /// Colourspace colour images are converted to.
    pub colorspace: DimColorspace,
}

/// Opaque image handle.
pub struct DimImage(Image);

/// Opaque handle to a set of same-size similarity maps.
pub struct DimField {
    maps: Vec<Plane>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> DimStatus {
    match e {
        Error::Io { .. } | Error::ImageCodec { .. } | Error::Csv { .. } | Error::Dataset { .. } => DimStatus::Io,
        Error::DegenerateTemplate(_) => DimStatus::DegenerateTemplate,
        Error::DimensionMismatch(_) | Error::KernelTooLarge { .. } | Error::PadTooLarge { .. } => {
            DimStatus::DimensionMismatch
        }
        Error::OutOfBounds { .. } => DimStatus::OutOfBounds,
        _ => DimStatus::InvalidArgument,
    }
}

struct Failure(DimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DimStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(DimStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            DimStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a pointer obtained from this library or null
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and supplied by the caller for writing
    unsafe { out.write(value) };
    Ok(())
}

fn to_box(b: DimBox) -> Result<BoundingBox, Failure> {
    Ok(BoundingBox::new(b.x, b.y, b.w, b.h)?)
}

fn from_box(b: BoundingBox) -> DimBox {
    DimBox {
        x: b.x,
        y: b.y,
        w: b.w,
        h: b.h,
    }
}

fn colorspace(c: DimColorspace) -> Colorspace {
    match c {
        DimColorspace::Gray => Colorspace::Gray,
        DimColorspace::Rgb => Colorspace::Rgb,
        DimColorspace::CieLab => Colorspace::CieLab,
        DimColorspace::Hsv => Colorspace::Hsv,
    }
}

fn to_params(p: &DimMatchParams) -> Result<DimParams, Failure> {
    let params = DimParams {
        epsilon2: p.epsilon2,
        epsilon1: (p.epsilon1 > 0.0).then_some(p.epsilon1),
        iterations: (p.iterations > 0).then_some(p.iterations),
        lambda: p.lambda,
        sigma_scale: p.sigma_scale,
        conv_mode: match p.conv_mode {
            DimConvMode::Auto => ConvMode::Auto,
            DimConvMode::Direct => ConvMode::Direct,
            DimConvMode::Fourier => ConvMode::Fourier,
        },
        colorspace: colorspace(p.colorspace),
        ..DimParams::default()
    };
    params.validate()?;
    Ok(params)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread (empty if none). Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default matcher settings.
#[no_mangle]
pub extern "C" fn dim_params_default() -> DimMatchParams {
    let d = DimParams::default();
    DimMatchParams {
        epsilon2: d.epsilon2,
        epsilon1: 0.0,
        iterations: 0,
        lambda: d.lambda,
        sigma_scale: d.sigma_scale,
        conv_mode: DimConvMode::Auto,
        colorspace: DimColorspace::CieLab,
    }
}

/// Creates an image from `width * height * channels` interleaved samples in
/// `[0, 1]`. `channels` is 1 or 3.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dim_image_new(
    width: usize,
    height: usize,
    channels: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut DimImage,
) -> DimStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if width.checked_mul(height).and_then(|n| n.checked_mul(channels)) != Some(len) {
            return Err(invalid(format!("{len} samples for a {width}x{height}x{channels} image")));
        }
        // SAFETY: caller guarantees `len` readable values
        let samples = unsafe { std::slice::from_raw_parts(data, len) };
        let img = Image::from_interleaved(width, height, channels, samples)?;
        unsafe { write_out(out, Box::into_raw(Box::new(DimImage(img))), "out") }
    })
}

/// Loads a PNG, PNM or JPEG file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dim_image_load(path: *const c_char, out: *mut *mut DimImage) -> DimStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        // SAFETY: caller guarantees a NUL-terminated string
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let img = dimmatch::io::load_image(path)?;
        unsafe { write_out(out, Box::into_raw(Box::new(DimImage(img))), "out") }
    })
}

/// Releases an image. Null is ignored.
///
/// # Safety
/// `img` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dim_image_free(img: *mut DimImage) {
    if !img.is_null() {
        // SAFETY: pointer came from Box::into_raw
        drop(unsafe { Box::from_raw(img) });
    }
}

/// # Safety
/// `img` must be a live handle; output pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn dim_image_dims(
    img: *const DimImage,
    width: *mut usize,
    height: *mut usize,
    channels: *mut usize,
) -> DimStatus {
    guard(|| {
        let img = unsafe { deref(img, "img") }?;
        for (p, v) in [(width, img.0.width()), (height, img.0.height()), (channels, img.0.channels())] {
            if !p.is_null() {
                // SAFETY: non-null caller pointer
                unsafe { p.write(v) };
            }
        }
        Ok(())
    })
}

fn field_handle(maps: Vec<Plane>) -> *mut DimField {
    Box::into_raw(Box::new(DimField { maps }))
}

/// DIM similarity of the `target` region of `source` over `query`, with
/// `n_additional` further regions of `source` competing as non-target
/// templates. Map 0 of the result belongs to the target.
///
/// # Safety
/// Handles must be live; `additional` must hold `n_additional` boxes (may be
/// null when zero); `params` may be null for defaults; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dim_match(
    query: *const DimImage,
    source: *const DimImage,
    target: DimBox,
    additional: *const DimBox,
    n_additional: usize,
    params: *const DimMatchParams,
    out: *mut *mut DimField,
) -> DimStatus {
    guard(|| {
        let query = unsafe { deref(query, "query") }?;
        let source = unsafe { deref(source, "source") }?;
        let params = match unsafe { params.as_ref() } {
            Some(p) => to_params(p)?,
            None => DimParams::default(),
        };
        let extra: &[DimBox] = if n_additional == 0 {
            &[]
        } else if additional.is_null() {
            return Err(null("additional"));
        } else {
            // SAFETY: caller guarantees `n_additional` boxes
            unsafe { std::slice::from_raw_parts(additional, n_additional) }
        };
        let specs = extra
            .iter()
            .map(|b| Ok(PatchSpec::new(&source.0, to_box(*b)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        let field = dim::match_templates(&query.0, PatchSpec::new(&source.0, to_box(target)?), &specs, &params)?;
        unsafe { write_out(out, field_handle(field.into_maps()), "out") }
    })
}

/// DIM with additional templates chosen automatically from `source`.
///
/// # Safety
/// As [`dim_match`].
#[no_mangle]
pub unsafe extern "C" fn dim_match_auto(
    query: *const DimImage,
    source: *const DimImage,
    target: DimBox,
    strategy: DimStrategy,
    max_additional: usize,
    seed: u64,
    params: *const DimMatchParams,
    out: *mut *mut DimField,
) -> DimStatus {
    guard(|| {
        let query = unsafe { deref(query, "query") }?;
        let source = unsafe { deref(source, "source") }?;
        let cfg = MatchConfig {
            method: Method::Dim,
            params: match unsafe { params.as_ref() } {
                Some(p) => to_params(p)?,
                None => DimParams::default(),
            },
            additional: match strategy {
                DimStrategy::MaxCorrelation => AdditionalKind::MaxCorrelation,
                DimStrategy::Keypoint => AdditionalKind::Keypoint,
                DimStrategy::Random => AdditionalKind::Random,
            },
            max_additional,
            seed,
            ..MatchConfig::default()
        };
        let (map, _) = correspondence_map(&source.0, &to_box(target)?, &query.0, &cfg, None)?;
        unsafe { write_out(out, field_handle(vec![map]), "out") }
    })
}

/// Summed per-channel ZNCC of the `target` region of `source` over `query`,
/// after converting colour images to `space`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dim_zncc_match(
    query: *const DimImage,
    source: *const DimImage,
    target: DimBox,
    space: DimColorspace,
    out: *mut *mut DimField,
) -> DimStatus {
    guard(|| {
        let query = unsafe { deref(query, "query") }?;
        let source = unsafe { deref(source, "source") }?;
        let tpl = source.0.crop(&to_box(target)?)?;
        let space = if query.0.is_color() { colorspace(space) } else { Colorspace::Gray };
        let m = zncc_match(&query.0, &tpl, space)?;
        unsafe { write_out(out, field_handle(vec![m.map]), "out") }
    })
}

/// Number of maps and their size.
///
/// # Safety
/// `field` must be live; output pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn dim_field_info(
    field: *const DimField,
    count: *mut usize,
    width: *mut usize,
    height: *mut usize,
) -> DimStatus {
    guard(|| {
        let f = unsafe { deref(field, "field") }?;
        let (w, h) = f.maps.first().map_or((0, 0), Plane::dims);
        for (p, v) in [(count, f.maps.len()), (width, w), (height, h)] {
            if !p.is_null() {
                // SAFETY: non-null caller pointer
                unsafe { p.write(v) };
            }
        }
        Ok(())
    })
}

fn map_of(f: &DimField, index: usize) -> Result<&Plane, Failure> {
    f.maps
        .get(index)
        .ok_or_else(|| invalid(format!("map {index} of {}", f.maps.len())))
}

/// Copies map `index` row by row into `buffer` (`len` = width * height).
///
/// # Safety
/// `field` must be live; `buffer` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dim_field_copy(
    field: *const DimField,
    index: usize,
    buffer: *mut f64,
    len: usize,
) -> DimStatus {
    guard(|| {
        let f = unsafe { deref(field, "field") }?;
        let m = map_of(f, index)?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if len != m.len() {
            return Err(invalid(format!("buffer holds {len} values, map has {}", m.len())));
        }
        // SAFETY: caller guarantees `len` writable values
        unsafe { ptr::copy_nonoverlapping(m.data().as_ptr(), buffer, len) };
        Ok(())
    })
}

/// Location and value of the largest entry of map `index` (first in raster
/// order on ties).
///
/// # Safety
/// `field` must be live; output pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn dim_field_argmax(
    field: *const DimField,
    index: usize,
    x: *mut usize,
    y: *mut usize,
    score: *mut f64,
) -> DimStatus {
    guard(|| {
        let f = unsafe { deref(field, "field") }?;
        let (mx, my, v) = map_of(f, index)?.argmax();
        // SAFETY: each pointer checked for null before writing
        unsafe {
            if !x.is_null() {
                x.write(mx);
            }
            if !y.is_null() {
                y.write(my);
            }
            if !score.is_null() {
                score.write(v);
            }
        }
        Ok(())
    })
}

/// Releases a field. Null is ignored.
///
/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dim_field_free(field: *mut DimField) {
    if !field.is_null() {
        // SAFETY: pointer came from Box::into_raw
        drop(unsafe { Box::from_raw(field) });
    }
}

/// Chooses up to `capacity` non-overlapping boxes of the target's size that
/// avoid the target; `written` receives the count.
///
/// # Safety
/// `img` must be live; `boxes` must hold `capacity` writable boxes (may be
/// null when zero); `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dim_select_additional(
    img: *const DimImage,
    target: DimBox,
    strategy: DimStrategy,
    seed: u64,
    boxes: *mut DimBox,
    capacity: usize,
    written: *mut usize,
) -> DimStatus {
    guard(|| {
        let img = unsafe { deref(img, "img") }?;
        if capacity > 0 && boxes.is_null() {
            return Err(null("boxes"));
        }
        let s = match strategy {
            DimStrategy::MaxCorrelation => SelectionStrategy::MaxCorrelation,
            DimStrategy::Keypoint => SelectionStrategy::Keypoint,
            DimStrategy::Random => SelectionStrategy::Random { seed },
        };
        let found = select_additional(&img.0, &to_box(target)?, &s, capacity)?;
        for (i, b) in found.iter().enumerate() {
            // SAFETY: i < found.len() <= capacity
            unsafe { boxes.add(i).write(from_box(*b)) };
        }
        unsafe { write_out(written, found.len(), "written") }
    })
}

/// Intersection over union; NaN if either box has a non-positive size.
#[no_mangle]
pub extern "C" fn dim_iou(a: DimBox, b: DimBox) -> f64 {
    match (to_box(a), to_box(b)) {
        (Ok(a), Ok(b)) => dimmatch::eval::iou(&a, &b),
        _ => f64::NAN,
    }
}
