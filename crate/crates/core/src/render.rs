//! Random table generation: genotype sampling per configuration, scan and
//! skeleton rendering, and on-disk dataset generation.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{validate_genotype, Axis, Canvas, RasterImage, TableGenotype, CORE_THICKNESS};
use crate::rng::{derive_seed, seeded};

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: i32,
    pub hi: i32,
}

impl IntRange {
    pub const fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: i32) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: i32) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn check(&self, what: &'static str) -> Result<()> {
        if self.lo > self.hi {
            Err(Error::EmptyRange(what))
        } else {
            Ok(())
        }
    }

    fn sample(&self, rng: &mut impl rand::Rng) -> i32 {
        rng.gen_range(self.lo..=self.hi)
    }
}

/// Sampling ranges for one family of tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub name: String,
    pub row_range: IntRange,
    pub col_range: IntRange,
    pub x_offset_range: IntRange,
    pub y_offset_range: IntRange,
    pub row_height_range: IntRange,
    pub col_width_range: IntRange,
    pub word_len_range: IntRange,
    pub words_per_cell_range: IntRange,
    pub font_size: i32,
    /// Probability that an interior divider is drawn in a scan.
    pub divider_visibility: f64,
}

impl TableConfig {
    pub const BUILTIN_NAMES: [&'static str; 4] = ["base", "larger_font", "smaller_font", "short_cells"];

    pub fn base() -> Self {
        Self {
            name: "base".into(),
            row_range: IntRange::new(2, 6),
            col_range: IntRange::new(2, 6),
            x_offset_range: IntRange::new(0, 70),
            y_offset_range: IntRange::new(0, 70),
            row_height_range: IntRange::new(40, 90),
            col_width_range: IntRange::new(70, 100),
            word_len_range: IntRange::new(5, 9),
            words_per_cell_range: IntRange::new(2, 4),
            font_size: 10,
            divider_visibility: 0.5,
        }
    }

    pub fn larger_font() -> Self {
        Self { name: "larger_font".into(), font_size: 18, ..Self::base() }
    }

    pub fn smaller_font() -> Self {
        Self { name: "smaller_font".into(), font_size: 6, ..Self::base() }
    }

    pub fn short_cells() -> Self {
        Self {
            name: "short_cells".into(),
            row_range: IntRange::new(4, 10),
            col_range: IntRange::new(4, 10),
            row_height_range: IntRange::fixed(20),
            col_width_range: IntRange::new(40, 60),
            word_len_range: IntRange::new(1, 4),
            words_per_cell_range: IntRange::fixed(1),
            ..Self::base()
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "base" => Some(Self::base()),
            "larger_font" => Some(Self::larger_font()),
            "smaller_font" => Some(Self::smaller_font()),
            "short_cells" => Some(Self::short_cells()),
            _ => None,
        }
    }

    pub fn all_builtin() -> Vec<Self> {
        vec![Self::base(), Self::larger_font(), Self::smaller_font(), Self::short_cells()]
    }

    pub fn validate(&self) -> Result<()> {
        self.row_range.check("row_range")?;
        self.col_range.check("col_range")?;
        self.x_offset_range.check("x_offset_range")?;
        self.y_offset_range.check("y_offset_range")?;
        self.row_height_range.check("row_height_range")?;
        self.col_width_range.check("col_width_range")?;
        self.word_len_range.check("word_len_range")?;
        self.words_per_cell_range.check("words_per_cell_range")?;
        if self.row_range.lo < 1 || self.col_range.lo < 1 {
            return Err(Error::InvalidParam(format!("{}: tables need at least one row and column", self.name)));
        }
        if self.row_height_range.lo < 1 || self.col_width_range.lo < 1 {
            return Err(Error::InvalidParam(format!("{}: extents must be positive", self.name)));
        }
        if self.x_offset_range.lo < 0 || self.y_offset_range.lo < 0 {
            return Err(Error::InvalidParam(format!("{}: offsets must be non-negative", self.name)));
        }
        if self.font_size < 1 || self.word_len_range.lo < 0 || self.words_per_cell_range.lo < 0 {
            return Err(Error::InvalidParam(format!("{}: bad text parameters", self.name)));
        }
        if !(0.0..=1.0).contains(&self.divider_visibility) {
            return Err(Error::InvalidParam(format!("{}: divider_visibility outside [0,1]", self.name)));
        }
        Ok(())
    }
}

/// Border rendering style for skeletons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorderStyle {
    pub core_thickness: u32,
    pub blurry: bool,
    pub blur_radius: u32,
    pub spread: u32,
}

impl BorderStyle {
    pub const fn solid() -> Self {
        Self { core_thickness: CORE_THICKNESS, blurry: false, blur_radius: 7, spread: 3 }
    }

    pub const fn blurry() -> Self {
        Self { core_thickness: CORE_THICKNESS, blurry: true, blur_radius: 7, spread: 3 }
    }

    /// Distance beyond the core edge at which the falloff reaches white.
    pub fn reach(&self) -> u32 {
        if self.blurry {
            self.blur_radius + self.spread
        } else {
            0
        }
    }

    /// Intensity for a pixel at Chebyshev distance `d` from the nearest core.
    fn lut(&self) -> Vec<u8> {
        let reach = self.reach();
        (0..=reach)
            .map(|d| {
                if d == reach && reach > 0 || (reach == 0 && d > 0) {
                    255
                } else if d == 0 {
                    0
                } else {
                    (255.0 * d as f64 / reach as f64).round() as u8
                }
            })
            .collect()
    }
}

impl Default for BorderStyle {
    fn default() -> Self {
        Self::blurry()
    }
}

impl std::str::FromStr for BorderStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solid" => Ok(Self::solid()),
            "blurry" => Ok(Self::blurry()),
            _ => Err(format!("unknown border style {s:?} (expected solid or blurry)")),
        }
    }
}

/// Samples a genotype whose every quantity lies in the configured range and
/// which fits the canvas.
///
/// Draws that overflow the canvas are rejected and redrawn.
pub fn sample_genotype(config: &TableConfig, canvas: Canvas, seed: u64) -> Result<TableGenotype> {
    config.validate()?;
    let mut rng = seeded(seed);
    let max_rows = config.row_range.hi as usize;
    let max_cols = config.col_range.hi as usize;
    for _ in 0..10_000 {
        let rows = config.row_range.sample(&mut rng) as usize;
        let cols = config.col_range.sample(&mut rng) as usize;
        let origin_x = config.x_offset_range.sample(&mut rng);
        let origin_y = config.y_offset_range.sample(&mut rng);
        let mut row_heights: Vec<i32> = (0..rows).map(|_| config.row_height_range.sample(&mut rng)).collect();
        let mut col_widths: Vec<i32> = (0..cols).map(|_| config.col_width_range.sample(&mut rng)).collect();
        row_heights.resize(max_rows, 0);
        col_widths.resize(max_cols, 0);
        let g = TableGenotype { max_rows, max_cols, origin_x, origin_y, row_heights, col_widths };
        if validate_genotype(&g, canvas).is_ok() {
            return Ok(g);
        }
    }
    Err(Error::InvalidParam(format!("configuration {} does not fit a {canvas} canvas", config.name)))
}

/// Distance from `v` to the half-open interval `[lo, hi)`.
#[inline]
fn interval_dist(v: i64, lo: i64, hi: i64) -> u32 {
    if v < lo {
        (lo - v) as u32
    } else if v >= hi {
        (v - hi + 1) as u32
    } else {
        0
    }
}

/// Per-scanline distance to the nearest divider core along one axis.
fn core_distances(len: u32, positions: &[i32], thickness: u32, cap: u32) -> Vec<u32> {
    (0..len as i64)
        .map(|v| {
            positions
                .iter()
                .map(|&p| interval_dist(v, p as i64, p as i64 + thickness as i64))
                .min()
                .unwrap_or(u32::MAX)
                .min(cap)
        })
        .collect()
}

/// Reusable skeleton rasteriser.
///
/// Every horizontal divider spans the same x range, so the Chebyshev
/// distance to the nearest horizontal core separates into a column term and
/// a row term; likewise for vertical dividers.
pub(crate) fn rasterize_skeleton(g: &TableGenotype, style: &BorderStyle, canvas: Canvas, out: &mut Vec<u8>) {
    let t = style.core_thickness;
    let cap = style.reach().max(1);
    let lut = style.lut();
    let hpos = g.divider_positions(Axis::Horizontal);
    let vpos = g.divider_positions(Axis::Vertical);
    let x_lo = g.origin_x as i64;
    let x_hi = x_lo + g.span(Axis::Vertical) + t as i64;
    let y_lo = g.origin_y as i64;
    let y_hi = y_lo + g.span(Axis::Horizontal) + t as i64;

    // Row terms.
    let to_hline = core_distances(canvas.height, &hpos, t, cap);
    let y_span: Vec<u32> = (0..canvas.height as i64).map(|y| interval_dist(y, y_lo, y_hi).min(cap)).collect();
    // Column terms.
    let to_vline = core_distances(canvas.width, &vpos, t, cap);
    let x_span: Vec<u32> = (0..canvas.width as i64).map(|x| interval_dist(x, x_lo, x_hi).min(cap)).collect();

    let w = canvas.width as usize;
    out.clear();
    out.resize(w * canvas.height as usize, 255);
    for (y, row) in out.chunks_exact_mut(w).enumerate() {
        let dyh = to_hline[y];
        let dys = y_span[y];
        if dyh >= cap && dys >= cap {
            continue;
        }
        for (x, px) in row.iter_mut().enumerate() {
            let d = dyh.max(x_span[x]).min(dys.max(to_vline[x]));
            if d < cap {
                *px = lut[d as usize];
            }
        }
    }
}

/// Renders every divider and the outer border, without text.
pub fn render_skeleton(g: &TableGenotype, style: &BorderStyle, canvas: Canvas) -> Result<RasterImage> {
    validate_genotype(g, canvas)?;
    let mut buf = Vec::new();
    rasterize_skeleton(g, style, canvas, &mut buf);
    RasterImage::from_raw(canvas.width, canvas.height, 1, buf)
}

/// Renders a scan: outer border, a random subset of interior dividers, and
/// dark blocks standing in for words.
pub fn render_scan(g: &TableGenotype, config: &TableConfig, canvas: Canvas, seed: u64) -> Result<RasterImage> {
    validate_genotype(g, canvas)?;
    config.validate()?;
    let mut rng = seeded(seed);
    let mut img = RasterImage::white(canvas);
    let t = CORE_THICKNESS as i64;
    let hpos = g.divider_positions(Axis::Horizontal);
    let vpos = g.divider_positions(Axis::Vertical);
    let x0 = g.origin_x as i64;
    let y0 = g.origin_y as i64;
    let width = g.span(Axis::Vertical) + t;
    let height = g.span(Axis::Horizontal) + t;

    for (i, &y) in hpos.iter().enumerate() {
        let outer = i == 0 || i + 1 == hpos.len();
        if outer || rng.gen_bool(config.divider_visibility) {
            img.darken_rect(x0, y as i64, width, t, 0);
        }
    }
    for (i, &x) in vpos.iter().enumerate() {
        let outer = i == 0 || i + 1 == vpos.len();
        if outer || rng.gen_bool(config.divider_visibility) {
            img.darken_rect(x as i64, y0, t, height, 0);
        }
    }

    const PAD: i64 = 2;
    let font = config.font_size as i64;
    let line_advance = (font as f64 * 1.2).round() as i64;
    for r in 0..hpos.len() - 1 {
        for c in 0..vpos.len() - 1 {
            // Cell interior, excluding the borders on its top/left edges.
            let left = vpos[c] as i64 + t;
            let right = vpos[c + 1] as i64;
            let top = hpos[r] as i64 + t;
            let bottom = hpos[r + 1] as i64;
            let words = config.words_per_cell_range.sample(&mut rng);
            let (mut cx, mut cy) = (left + PAD, top + PAD);
            for _ in 0..words {
                let len = config.word_len_range.sample(&mut rng) as f64;
                let ww = (0.6 * font as f64 * len).round() as i64;
                if cx > left + PAD && cx + ww > right - PAD {
                    cx = left + PAD;
                    cy += line_advance;
                }
                // Clip to the cell interior.
                let x_end = (cx + ww).min(right - PAD);
                let y_end = (cy + font).min(bottom - PAD);
                if x_end > cx && y_end > cy {
                    img.darken_rect(cx, cy, x_end - cx, y_end - cy, 0);
                }
                cx += ww + font;
            }
        }
    }
    Ok(img)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scan_path: PathBuf,
    pub skeleton_path: PathBuf,
    pub genotype_path: PathBuf,
    pub config_name: String,
    pub seed: u64,
}

impl ManifestEntry {
    /// File stem shared by the scan/skeleton pair (`<stem>.scan.png`).
    pub fn stem(&self) -> String {
        let name = self.scan_path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        name.strip_suffix(".scan.png").unwrap_or(name).to_string()
    }
}

/// Index of a generated dataset. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub canvas: Canvas,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<LoadedManifest> {
        let manifest: DatasetManifest = io::read_json(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedManifest { root, manifest })
    }
}

/// A manifest together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

impl LoadedManifest {
    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn load_genotype(&self, entry: &ManifestEntry) -> Result<TableGenotype> {
        io::read_json(&self.resolve(&entry.genotype_path))
    }

    pub fn load_skeleton(&self, entry: &ManifestEntry) -> Result<RasterImage> {
        io::read_image(&self.resolve(&entry.skeleton_path))
    }

    pub fn load_scan(&self, entry: &ManifestEntry) -> Result<RasterImage> {
        io::read_image(&self.resolve(&entry.scan_path))
    }
}

/// One generated table held in memory.
#[derive(Debug, Clone)]
pub struct TableSample {
    pub config_name: String,
    pub seed: u64,
    pub genotype: TableGenotype,
    pub scan: RasterImage,
    pub skeleton: RasterImage,
}

/// Deterministic per-entry seed for entry `index` of configuration `config_index`.
pub fn entry_seed(seed: u64, config_index: usize, index: usize) -> u64 {
    derive_seed(derive_seed(seed, config_index as u64), index as u64)
}

/// Samples and renders one table from an entry seed.
pub fn generate_sample(config: &TableConfig, canvas: Canvas, style: &BorderStyle, seed: u64) -> Result<TableSample> {
    let genotype = sample_genotype(config, canvas, seed)?;
    let scan = render_scan(&genotype, config, canvas, derive_seed(seed, 1))?;
    let skeleton = render_skeleton(&genotype, style, canvas)?;
    Ok(TableSample { config_name: config.name.clone(), seed, genotype, scan, skeleton })
}

/// Generates `per_config` tables for each configuration in memory, in
/// manifest order.
pub fn generate_samples(
    configs: &[TableConfig],
    per_config: usize,
    canvas: Canvas,
    seed: u64,
    style: &BorderStyle,
) -> Result<Vec<TableSample>> {
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..per_config).map(move |i| (c, i))).collect();
    jobs.par_iter().map(|&(c, i)| generate_sample(&configs[c], canvas, style, entry_seed(seed, c, i))).collect()
}

/// Writes scan/skeleton/genotype triples and `manifest.json` into `out_dir`.
pub fn generate_dataset(
    configs: &[TableConfig],
    per_config: usize,
    out_dir: &Path,
    canvas: Canvas,
    seed: u64,
    style: &BorderStyle,
) -> Result<DatasetManifest> {
    for c in configs {
        c.validate()?;
    }
    io::create_dir_all(out_dir)?;
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..per_config).map(move |i| (c, i))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(c, i)| {
            let config = &configs[c];
            let sample = generate_sample(config, canvas, style, entry_seed(seed, c, i))?;
            let stem = format!("{}_{:05}", config.name, i);
            let entry = ManifestEntry {
                scan_path: format!("{stem}.scan.png").into(),
                skeleton_path: format!("{stem}.skel.png").into(),
                genotype_path: format!("{stem}.json").into(),
                config_name: config.name.clone(),
                seed: sample.seed,
            };
            io::write_png(&out_dir.join(&entry.scan_path), &sample.scan)?;
            io::write_png(&out_dir.join(&entry.skeleton_path), &sample.skeleton)?;
            io::write_json(&out_dir.join(&entry.genotype_path), &sample.genotype)?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest { canvas, entries };
    io::write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
