//! Skeleton sources: a degrader that imitates imperfect generated skeletons,
//! and a loader for skeletons produced outside this crate.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{Axis, Canvas, RasterImage, TableGenotype};
use crate::render::IntRange;
use crate::rng::seeded;
use crate::xycut::{binarize, project, to_luminance, DEFAULT_THRESHOLD};

/// Artifact and jitter settings for [`degrade`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub artifact_count_range: IntRange,
    /// Artifact length as a fraction of the longest true line of the same
    /// orientation.
    pub artifact_len_frac: f64,
    pub artifact_thickness: u32,
    pub gray_jitter_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            artifact_count_range: IntRange::new(2, 6),
            artifact_len_frac: 0.2,
            artifact_thickness: 3,
            gray_jitter_sigma: 0.0,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn identity() -> Self {
        Self { artifact_count_range: IntRange::fixed(0), gray_jitter_sigma: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.artifact_count_range.lo > self.artifact_count_range.hi {
            return Err(Error::EmptyRange("artifact_count_range"));
        }
        if self.artifact_count_range.lo < 0 {
            return Err(Error::InvalidParam("artifact count must be non-negative".into()));
        }
        if !self.artifact_len_frac.is_finite() || self.artifact_len_frac < 0.0 {
            return Err(Error::InvalidParam(format!("artifact_len_frac {} must be >= 0", self.artifact_len_frac)));
        }
        if !self.gray_jitter_sigma.is_finite() || self.gray_jitter_sigma < 0.0 {
            return Err(Error::InvalidParam(format!("gray_jitter_sigma {} must be >= 0", self.gray_jitter_sigma)));
        }
        Ok(())
    }
}

const PLACEMENT_ATTEMPTS: usize = 200;

/// Adds short dark line artifacts and intensity jitter to a skeleton.
///
/// Artifacts are axis-aligned, placed uniformly at random on white space so
/// they never touch an existing line or an earlier artifact. An artifact with
/// no free placement after a bounded number of draws is dropped.
pub fn degrade(skeleton: &RasterImage, p: &NoiseParams) -> Result<RasterImage> {
    p.validate()?;
    let mut img = to_luminance(skeleton)?;
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return Ok(img);
    }
    let mut rng = seeded(p.seed);
    let count = rng.gen_range(p.artifact_count_range.lo..=p.artifact_count_range.hi);
    if count > 0 {
        let bin = binarize(&img, DEFAULT_THRESHOLD)?;
        let longest_h = project(&bin, Axis::Horizontal)?.max_run();
        let longest_v = project(&bin, Axis::Vertical)?.max_run();
        let thick = p.artifact_thickness.max(1);
        for _ in 0..count {
            let horizontal = rng.gen_bool(0.5);
            let longest = if horizontal { longest_h } else { longest_v };
            let len = (p.artifact_len_frac * longest as f64).round() as u32;
            if len == 0 {
                continue;
            }
            let (aw, ah) = if horizontal { (len, thick) } else { (thick, len) };
            if aw > w || ah > h {
                continue;
            }
            for _ in 0..PLACEMENT_ATTEMPTS {
                let x = rng.gen_range(0..=w - aw);
                let y = rng.gen_range(0..=h - ah);
                if region_is_white(&img, x, y, aw, ah) {
                    img.darken_rect(x as i64, y as i64, aw as i64, ah as i64, 0);
                    break;
                }
            }
        }
    }
    if p.gray_jitter_sigma > 0.0 {
        let normal = Normal::new(0.0, p.gray_jitter_sigma).map_err(|e| Error::InvalidParam(format!("jitter: {e}")))?;
        for px in img.pixels_mut() {
            let v = *px as f64 + normal.sample(&mut rng);
            *px = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(img)
}

/// True when the rectangle grown by one pixel on each side is pure white.
fn region_is_white(img: &RasterImage, x: u32, y: u32, w: u32, h: u32) -> bool {
    let x0 = x.saturating_sub(1);
    let y0 = y.saturating_sub(1);
    let x1 = (x + w + 1).min(img.width());
    let y1 = (y + h + 1).min(img.height());
    (y0..y1).all(|yy| (x0..x1).all(|xx| img.gray(xx, yy) == 255))
}

/// Bilinear resampling with pixel-centre alignment. Same-size input is
/// returned unchanged.
pub fn resample_bilinear(img: &RasterImage, target_w: u32, target_h: u32) -> Result<RasterImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidParam(format!("zero target size {target_w}x{target_h}")));
    }
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    if (w, h) == (target_w, target_h) {
        return Ok(img.clone());
    }
    let ch = img.channels() as usize;
    let sx = w as f64 / target_w as f64;
    let sy = h as f64 / target_h as f64;
    let src = img.pixels();
    let stride = w as usize * ch;
    let axis_samples = |n: u32, scale: f64, limit: u32| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (limit - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(limit as usize - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis_samples(target_w, sx, w);
    let ys = axis_samples(target_h, sy, h);
    let mut out = Vec::with_capacity(target_w as usize * target_h as usize * ch);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..ch {
                let p = |x: usize, y: usize| src[y * stride + x * ch + c] as f64;
                let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                out.push((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::from_raw(target_w, target_h, img.channels(), out)
}

/// Loads an externally produced skeleton and resamples it to the target size.
pub fn load_external(path: &Path, target_w: u32, target_h: u32) -> Result<RasterImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidParam(format!("zero target size {target_w}x{target_h}")));
    }
    let img = io::read_image(path)?;
    resample_bilinear(&img, target_w, target_h)
}

/// Maps a genotype estimated in `space` coordinates into `target` coordinates.
///
/// Divider positions are scaled and rounded, then differenced, so rounding
/// errors do not accumulate along the table.
pub fn scale_genotype(g: &TableGenotype, space: Canvas, target: Canvas) -> TableGenotype {
    let sx = target.width as f64 / space.width as f64;
    let sy = target.height as f64 / space.height as f64;
    let scale_axis = |axis: Axis, s: f64| -> (i32, Vec<i32>) {
        let pos: Vec<i32> = g.divider_positions(axis).iter().map(|&p| (p as f64 * s).round() as i32).collect();
        let mut ext: Vec<i32> = pos.windows(2).map(|w| w[1] - w[0]).collect();
        ext.resize(g.extents(axis).len().max(ext.len()), 0);
        (pos[0], ext)
    };
    let (origin_x, col_widths) = scale_axis(Axis::Vertical, sx);
    let (origin_y, row_heights) = scale_axis(Axis::Horizontal, sy);
    TableGenotype {
        max_rows: row_heights.len(),
        max_cols: col_widths.len(),
        origin_x,
        origin_y,
        row_heights,
        col_widths,
    }
}

/// A `<stem>.scan.png` / `<stem>.skel.png` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonPair {
    pub stem: String,
    pub scan: PathBuf,
    pub skeleton: PathBuf,
}

/// Pairs scans in `scans_dir` with skeletons in `skeletons_dir` by stem,
/// sorted by stem. Scans without a skeleton are skipped.
pub fn find_pairs(scans_dir: &Path, skeletons_dir: &Path) -> Result<Vec<SkeletonPair>> {
    let read = std::fs::read_dir(scans_dir).map_err(|source| Error::Io { path: scans_dir.into(), source })?;
    let mut pairs = Vec::new();
    for entry in read {
        let entry = entry.map_err(|source| Error::Io { path: scans_dir.into(), source })?;
        let name = entry.file_name();
        let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".scan.png")) else {
            continue;
        };
        let skeleton = skeletons_dir.join(format!("{stem}.skel.png"));
        if skeleton.is_file() {
            pairs.push(SkeletonPair { stem: stem.to_string(), scan: entry.path(), skeleton });
        }
    }
    pairs.sort_by(|a, b| a.stem.cmp(&b.stem));
    Ok(pairs)
}
