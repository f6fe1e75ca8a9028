//! C ABI over the tablegrid toolkit.
//!
//! Images and genotypes cross the boundary as opaque handles created by the
//! `tg_*` constructors and released with the matching `*_free` function.
//! Fallible calls return a [`TgStatus`]; on failure a description is
//! available from [`tg_last_error_message`] on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tablegrid::deskew::{crop_offsets, deskew_iterative};
use tablegrid::render::{render_skeleton, BorderStyle};
use tablegrid::xycut::{estimate_structure, luminance, EstimatorParams};
use tablegrid::{io, validate_genotype, Axis, Canvas, Error, RasterImage, TableGenotype};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    InvalidData = 4,
    NoTable = 5,
    NoSkewStructure = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque raster image handle.
pub struct TgImage(RasterImage);

/// Opaque table genotype handle.
pub struct TgGenotype(TableGenotype);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<Vec<u8>>) {
    let msg = CString::new(msg).unwrap_or_else(|_| c"error message contained NUL".to_owned());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> TgStatus {
    match e {
        Error::Io { .. } | Error::Image { source: image::ImageError::IoError(_), .. } => TgStatus::Io,
        Error::NoTable { .. } | Error::NoLines => TgStatus::NoTable,
        Error::NoSkewStructure => TgStatus::NoSkewStructure,
        Error::InvalidParam(_) | Error::EmptyRange(_) | Error::CropTooLarge { .. } | Error::BufferSize { .. } => {
            TgStatus::InvalidArgument
        }
        _ => TgStatus::InvalidData,
    }
}

fn fail(status: TgStatus, msg: impl Into<Vec<u8>>) -> TgStatus {
    set_last_error(msg);
    status
}

fn from_error(e: Error) -> TgStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, converting panics into [`TgStatus::Panic`].
fn guard(f: impl FnOnce() -> TgStatus) -> TgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(TgStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, TgStatus> {
    if s.is_null() {
        return Err(fail(TgStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(TgStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, TgStatus> {
    p.as_ref().ok_or_else(|| fail(TgStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), TgStatus> {
    if p.is_null() {
        Err(fail(TgStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! core {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Rounded Rec. 601 luminance of an RGB triple.
#[no_mangle]
pub extern "C" fn tg_luminance(r: u8, g: u8, b: u8) -> u8 {
    luminance(r, g, b)
}

/// Top-left offsets of a centered `target_w` x `target_h` crop.
#[no_mangle]
pub unsafe extern "C" fn tg_crop_offsets(
    width: u32,
    height: u32,
    target_w: u32,
    target_h: u32,
    out_x: *mut u32,
    out_y: *mut u32,
) -> TgStatus {
    guard(|| {
        tri!(out_arg(out_x, "out_x"));
        tri!(out_arg(out_y, "out_y"));
        let (x, y) = core!(crop_offsets(width, height, target_w, target_h));
        *out_x = x;
        *out_y = y;
        TgStatus::Ok
    })
}

/// Reads a PNG (or any supported format) from `path`.
#[no_mangle]
pub unsafe extern "C" fn tg_image_load(path: *const c_char, out: *mut *mut TgImage) -> TgStatus {
    guard(|| {
        let path = tri!(str_arg(path, "path"));
        tri!(out_arg(out, "out"));
        let img = core!(io::read_image(Path::new(path)));
        *out = Box::into_raw(Box::new(TgImage(img)));
        TgStatus::Ok
    })
}

/// Copies a row-major 8-bit grayscale buffer into a new image.
#[no_mangle]
pub unsafe extern "C" fn tg_image_from_gray(
    width: u32,
    height: u32,
    data: *const u8,
    len: usize,
    out: *mut *mut TgImage,
) -> TgStatus {
    guard(|| {
        if data.is_null() {
            return fail(TgStatus::NullPointer, "data is null");
        }
        tri!(out_arg(out, "out"));
        let pixels = std::slice::from_raw_parts(data, len).to_vec();
        let img = core!(RasterImage::from_raw(width, height, 1, pixels));
        *out = Box::into_raw(Box::new(TgImage(img)));
        TgStatus::Ok
    })
}

/// Writes the image as PNG.
#[no_mangle]
pub unsafe extern "C" fn tg_image_save_png(img: *const TgImage, path: *const c_char) -> TgStatus {
    guard(|| {
        let img = tri!(ref_arg(img, "img"));
        let path = tri!(str_arg(path, "path"));
        core!(io::write_png(Path::new(path), &img.0));
        TgStatus::Ok
    })
}

/// Image width in pixels, 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tg_image_width(img: *const TgImage) -> u32 {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// Image height in pixels, 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tg_image_height(img: *const TgImage) -> u32 {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// Channels per pixel (1 gray, 3 RGB), 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tg_image_channels(img: *const TgImage) -> u8 {
    img.as_ref().map_or(0, |i| i.0.channels())
}

/// Pointer to the row-major pixel bytes (`width * height * channels`),
/// valid while the handle lives. Null for null.
#[no_mangle]
pub unsafe extern "C" fn tg_image_data(img: *const TgImage) -> *const u8 {
    img.as_ref().map_or(ptr::null(), |i| i.0.pixels().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn tg_image_free(img: *mut TgImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Renders a skeleton of `genotype` on a `canvas_w` x `canvas_h` canvas.
/// `blurry` selects the gray falloff border style.
#[no_mangle]
pub unsafe extern "C" fn tg_render_skeleton(
    genotype: *const TgGenotype,
    blurry: bool,
    canvas_w: u32,
    canvas_h: u32,
    out: *mut *mut TgImage,
) -> TgStatus {
    guard(|| {
        let g = tri!(ref_arg(genotype, "genotype"));
        tri!(out_arg(out, "out"));
        let style = if blurry { BorderStyle::blurry() } else { BorderStyle::solid() };
        let img = core!(render_skeleton(&g.0, &style, Canvas::new(canvas_w, canvas_h)));
        *out = Box::into_raw(Box::new(TgImage(img)));
        TgStatus::Ok
    })
}

/// Estimates the table structure of a skeleton image. Pixels at or below
/// `threshold` count as black; scanlines need a run of at least
/// `min_frac` times the longest run.
#[no_mangle]
pub unsafe extern "C" fn tg_estimate_structure(
    skeleton: *const TgImage,
    threshold: u8,
    min_frac: f64,
    out: *mut *mut TgGenotype,
) -> TgStatus {
    guard(|| {
        let img = tri!(ref_arg(skeleton, "skeleton"));
        tri!(out_arg(out, "out"));
        let params = EstimatorParams { threshold, min_frac, ..EstimatorParams::default() };
        let g = core!(estimate_structure(&img.0, &params));
        *out = Box::into_raw(Box::new(TgGenotype(g)));
        TgStatus::Ok
    })
}

/// Deskews an image with up to `passes` Hough passes searching within
/// `max_angle` degrees. Writes the corrected image and the total correction
/// in degrees.
#[no_mangle]
pub unsafe extern "C" fn tg_deskew(
    img: *const TgImage,
    passes: u32,
    max_angle: f64,
    out: *mut *mut TgImage,
    out_angle: *mut f64,
) -> TgStatus {
    guard(|| {
        let img = tri!(ref_arg(img, "img"));
        tri!(out_arg(out, "out"));
        tri!(out_arg(out_angle, "out_angle"));
        let (rotated, report) = core!(deskew_iterative(&img.0, passes as usize, max_angle));
        *out = Box::into_raw(Box::new(TgImage(rotated)));
        *out_angle = report.estimated_angle;
        TgStatus::Ok
    })
}

/// Builds a genotype from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn tg_genotype_from_json(json: *const c_char, out: *mut *mut TgGenotype) -> TgStatus {
    guard(|| {
        let json = tri!(str_arg(json, "json"));
        tri!(out_arg(out, "out"));
        let g: TableGenotype = match serde_json::from_str(json) {
            Ok(g) => g,
            Err(e) => return fail(TgStatus::InvalidData, e.to_string()),
        };
        *out = Box::into_raw(Box::new(TgGenotype(g)));
        TgStatus::Ok
    })
}

/// Serializes a genotype to JSON. Release the string with [`tg_string_free`].
#[no_mangle]
pub unsafe extern "C" fn tg_genotype_to_json(genotype: *const TgGenotype, out: *mut *mut c_char) -> TgStatus {
    guard(|| {
        let g = tri!(ref_arg(genotype, "genotype"));
        tri!(out_arg(out, "out"));
        let json = match serde_json::to_string(&g.0) {
            Ok(s) => s,
            Err(e) => return fail(TgStatus::InvalidData, e.to_string()),
        };
        *out = tri!(CString::new(json).map_err(|_| fail(TgStatus::InvalidData, "NUL in JSON"))).into_raw();
        TgStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn tg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Checks that the genotype is well formed and fits the canvas.
#[no_mangle]
pub unsafe extern "C" fn tg_genotype_validate(genotype: *const TgGenotype, canvas_w: u32, canvas_h: u32) -> TgStatus {
    guard(|| {
        let g = tri!(ref_arg(genotype, "genotype"));
        match validate_genotype(&g.0, Canvas::new(canvas_w, canvas_h)) {
            Ok(()) => TgStatus::Ok,
            Err(e) => fail(TgStatus::InvalidData, e.to_string()),
        }
    })
}

/// Number of nonzero row heights, 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tg_genotype_rows(genotype: *const TgGenotype) -> usize {
    genotype.as_ref().map_or(0, |g| g.0.effective_rows())
}

/// Number of nonzero column widths, 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tg_genotype_cols(genotype: *const TgGenotype) -> usize {
    genotype.as_ref().map_or(0, |g| g.0.effective_cols())
}

#[no_mangle]
pub unsafe extern "C" fn tg_genotype_origin(genotype: *const TgGenotype, out_x: *mut i32, out_y: *mut i32) -> TgStatus {
    guard(|| {
        let g = tri!(ref_arg(genotype, "genotype"));
        tri!(out_arg(out_x, "out_x"));
        tri!(out_arg(out_y, "out_y"));
        *out_x = g.0.origin_x;
        *out_y = g.0.origin_y;
        TgStatus::Ok
    })
}

unsafe fn copy_extents(
    genotype: *const TgGenotype,
    axis: Axis,
    buf: *mut i32,
    cap: usize,
    out_len: *mut usize,
) -> TgStatus {
    guard(|| {
        let g = tri!(ref_arg(genotype, "genotype"));
        tri!(out_arg(out_len, "out_len"));
        let extents = g.0.effective_extents(axis);
        *out_len = extents.len();
        if cap < extents.len() {
            return fail(TgStatus::BufferTooSmall, format!("need {} entries, buffer holds {cap}", extents.len()));
        }
        if !extents.is_empty() {
            tri!(out_arg(buf, "buf"));
            ptr::copy_nonoverlapping(extents.as_ptr(), buf, extents.len());
        }
        TgStatus::Ok
    })
}

/// Copies the nonzero row heights into `buf` and writes their count to
/// `out_len`. With a short buffer, only the count is written and
/// [`TgStatus::BufferTooSmall`] is returned.
#[no_mangle]
pub unsafe extern "C" fn tg_genotype_row_heights(
    genotype: *const TgGenotype,
    buf: *mut i32,
    cap: usize,
    out_len: *mut usize,
) -> TgStatus {
    copy_extents(genotype, Axis::Horizontal, buf, cap, out_len)
}

/// Column counterpart of [`tg_genotype_row_heights`].
#[no_mangle]
pub unsafe extern "C" fn tg_genotype_col_widths(
    genotype: *const TgGenotype,
    buf: *mut i32,
    cap: usize,
    out_len: *mut usize,
) -> TgStatus {
    copy_extents(genotype, Axis::Vertical, buf, cap, out_len)
}

#[no_mangle]
pub unsafe extern "C" fn tg_genotype_free(genotype: *mut TgGenotype) {
    if !genotype.is_null() {
        drop(Box::from_raw(genotype));
    }
}
