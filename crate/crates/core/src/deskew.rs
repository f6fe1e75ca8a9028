//! Rotation, Hough-based skew estimation, iterative deskewing and centre
//! cropping.
//!
//! Angles are in degrees; positive angles rotate clockwise on screen (y axis
//! pointing down). A line with slope `tan(a)` in image coordinates is reported
//! as skew `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RasterImage;
use crate::xycut::{binarize, DEFAULT_THRESHOLD};

pub const DEFAULT_PASSES: usize = 5;
pub const DEFAULT_MAX_ANGLE: f64 = 35.0;
/// Hough angle resolution in degrees.
pub const ANGLE_STEP: f64 = 0.1;
/// Minimum length of a traced edge for it to vote.
pub const MIN_EDGE_RUN: u32 = 20;
/// Estimates below this magnitude end the iteration.
pub const EARLY_STOP: f64 = 0.1;

/// Output size of a rotation: the rotated bounding box rounded up plus a
/// one-pixel white border on each side.
pub fn rotated_dims(width: u32, height: u32, degrees: f64) -> (u32, u32) {
    if is_identity_angle(degrees) {
        return (width, height);
    }
    let (s, c) = degrees.to_radians().sin_cos();
    let (s, c) = (s.abs(), c.abs());
    let w = width as f64 * c + height as f64 * s;
    let h = width as f64 * s + height as f64 * c;
    ((w - 1e-9).ceil() as u32 + 2, (h - 1e-9).ceil() as u32 + 2)
}

fn is_identity_angle(degrees: f64) -> bool {
    degrees.rem_euclid(360.0) == 0.0
}

/// Rotates about the image centre onto a grown canvas, filling uncovered
/// area with white. Bilinear sampling; samples outside the source are white.
pub fn rotate(img: &RasterImage, degrees: f64) -> RasterImage {
    if is_identity_angle(degrees) {
        return img.clone();
    }
    let (w, h) = img.dims();
    let (nw, nh) = rotated_dims(w, h, degrees);
    let ch = img.channels() as usize;
    let (s, c) = degrees.to_radians().sin_cos();
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let (ncx, ncy) = (nw as f64 / 2.0, nh as f64 / 2.0);
    let src = img.pixels();
    let stride = w as usize * ch;
    let sample = |x: i64, y: i64, k: usize| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            255.0
        } else {
            src[y as usize * stride + x as usize * ch + k] as f64
        }
    };
    let mut out = Vec::with_capacity(nw as usize * nh as usize * ch);
    for oy in 0..nh {
        let dy = oy as f64 + 0.5 - ncy;
        for ox in 0..nw {
            let dx = ox as f64 + 0.5 - ncx;
            // Inverse of the clockwise rotation.
            let sx = c * dx + s * dy + cx - 0.5;
            let sy = -s * dx + c * dy + cy - 0.5;
            let x0 = sx.floor();
            let y0 = sy.floor();
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            for k in 0..ch {
                let top = sample(x0, y0, k) * (1.0 - fx) + sample(x0 + 1, y0, k) * fx;
                let bottom = sample(x0, y0 + 1, k) * (1.0 - fx) + sample(x0 + 1, y0 + 1, k) * fx;
                out.push((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::from_raw(nw, nh, img.channels(), out).expect("rotated buffer size")
}

/// Top-edge pixels (black with white directly above) that belong to a traced
/// edge of at least `min_run` pixels. An edge is traced left to right with
/// one-pixel vertical steps allowed.
fn edge_points(img: &RasterImage, min_run: u32) -> Result<Vec<(f64, f64)>> {
    let bin = binarize(img, DEFAULT_THRESHOLD)?;
    let (w, h) = (bin.width() as usize, bin.height() as usize);
    if w == 0 || h < 2 {
        return Ok(Vec::new());
    }
    let bits = bin.bits();
    let is_edge = |x: usize, y: usize| y > 0 && bits[y * w + x] && !bits[(y - 1) * w + x];
    let mut fwd = vec![0u16; w * h];
    let mut bwd = vec![0u16; w * h];
    let best_neighbour = |len: &[u16], x: usize, y: usize| -> u16 {
        let lo = y.saturating_sub(1);
        let hi = (y + 1).min(h - 1);
        (lo..=hi).map(|yy| len[yy * w + x]).max().unwrap_or(0)
    };
    for x in (0..w).rev() {
        for y in 0..h {
            if is_edge(x, y) {
                let next = if x + 1 < w { best_neighbour(&fwd, x + 1, y) } else { 0 };
                fwd[y * w + x] = next.saturating_add(1);
            }
        }
    }
    for x in 0..w {
        for y in 0..h {
            if is_edge(x, y) {
                let prev = if x > 0 { best_neighbour(&bwd, x - 1, y) } else { 0 };
                bwd[y * w + x] = prev.saturating_add(1);
            }
        }
    }
    let mut pts = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if fwd[i] > 0 && (fwd[i] as u32 + bwd[i] as u32 - 1) >= min_run {
                pts.push((x as f64, y as f64));
            }
        }
    }
    Ok(pts)
}

/// Dominant near-horizontal line angle in `[-max_angle, max_angle]`.
///
/// Each long top edge pixel votes in a Hough accumulator over angles at
/// [`ANGLE_STEP`] resolution and 1 px offsets; the angle whose offset
/// histogram has the largest sum of squared counts wins.
pub fn estimate_skew(img: &RasterImage, max_angle: f64) -> Result<f64> {
    if !max_angle.is_finite() || max_angle < 0.0 {
        return Err(Error::InvalidParam(format!("max_angle {max_angle} must be >= 0")));
    }
    let pts = edge_points(img, MIN_EDGE_RUN)?;
    if pts.is_empty() {
        return Err(Error::NoSkewStructure);
    }
    let steps = (max_angle / ANGLE_STEP).round() as i64;
    let (w, h) = img.dims();
    let offset = w as f64 + 1.0;
    let bins = (w + h) as usize + 3;
    let mut hist = vec![0u32; bins];
    let mut best = (f64::NEG_INFINITY, 0.0f64);
    for k in -steps..=steps {
        let angle = k as f64 * ANGLE_STEP;
        let (s, c) = angle.to_radians().sin_cos();
        hist.iter_mut().for_each(|v| *v = 0);
        for &(x, y) in &pts {
            let rho = y * c - x * s + offset;
            hist[rho.round() as usize] += 1;
        }
        let score: f64 = hist.iter().map(|&v| (v as f64) * (v as f64)).sum();
        // Ties resolve toward the smaller magnitude angle.
        if score > best.0 || (score == best.0 && angle.abs() < best.1.abs()) {
            best = (score, angle);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewReport {
    /// Total skew removed, in degrees.
    pub estimated_angle: f64,
    pub passes_applied: usize,
    /// Skew still measured on the output.
    pub residual_angle: f64,
    pub pre_dims: (u32, u32),
    pub post_dims: (u32, u32),
}

/// Repeats estimate + back-rotation up to `passes` times, stopping once the
/// measured skew is below [`EARLY_STOP`].
///
/// Corrections accumulate and each pass re-rotates the original image by the
/// running total, so interpolation blur is applied once.
pub fn deskew_iterative(img: &RasterImage, passes: usize, max_angle: f64) -> Result<(RasterImage, SkewReport)> {
    let mut total = 0.0;
    let mut applied = 0;
    let mut current = img.clone();
    let mut residual = None;
    for pass in 0..passes {
        let est = match estimate_skew(&current, max_angle) {
            Ok(a) => a,
            Err(e) if pass == 0 => return Err(e),
            Err(_) => break,
        };
        if est.abs() < EARLY_STOP {
            residual = Some(est);
            break;
        }
        total += est;
        applied += 1;
        current = rotate(img, -total);
    }
    let residual_angle = match residual {
        Some(r) => r,
        None => estimate_skew(&current, max_angle).unwrap_or(0.0),
    };
    let report = SkewReport {
        estimated_angle: total,
        passes_applied: applied,
        residual_angle,
        pre_dims: img.dims(),
        post_dims: current.dims(),
    };
    Ok((current, report))
}

/// Upper-left corner of a centred crop: half the size difference, rounded down.
pub fn crop_offsets(width: u32, height: u32, target_w: u32, target_h: u32) -> Result<(u32, u32)> {
    if target_w > width || target_h > height {
        return Err(Error::CropTooLarge { target_w, target_h, width, height });
    }
    Ok(((width - target_w) / 2, (height - target_h) / 2))
}

pub fn crop_center(img: &RasterImage, target_w: u32, target_h: u32) -> Result<RasterImage> {
    let (x0, y0) = crop_offsets(img.width(), img.height(), target_w, target_h)?;
    let ch = img.channels() as usize;
    let stride = img.width() as usize * ch;
    let mut out = Vec::with_capacity(target_w as usize * target_h as usize * ch);
    for y in y0..y0 + target_h {
        let start = y as usize * stride + x0 as usize * ch;
        out.extend_from_slice(&img.pixels()[start..start + target_w as usize * ch]);
    }
    RasterImage::from_raw(target_w, target_h, img.channels(), out)
}
