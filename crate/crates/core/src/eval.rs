//! Per-table comparison, aggregated metrics, and the rotation sweep.
//!
//! Errors are `truth - predicted`; relative errors divide by the truth.
//! Count-error averages cover only tables whose count is wrong. Origin and
//! extent averages cover only tables where both counts are right, so a missed
//! row is not also charged as an origin or height error.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deskew::{crop_center, deskew_iterative, rotate, DEFAULT_MAX_ANGLE, DEFAULT_PASSES};
use crate::error::{Error, Result};
use crate::ga::{evolve, GaParams};
use crate::model::{Axis, RasterImage, TableGenotype};
use crate::render::{LoadedManifest, ManifestEntry};
use crate::rng::derive_seed;
use crate::skeleton::{degrade, load_external, NoiseParams};
use crate::xycut::{estimate_structure, EstimatorParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableComparison {
    pub row_count_correct: bool,
    pub col_count_correct: bool,
    pub row_count_error: i64,
    pub col_count_error: i64,
    /// Present only when both counts are correct.
    pub x0_error: Option<i64>,
    pub y0_error: Option<i64>,
    pub row_height_errors: Option<Vec<i64>>,
    pub col_width_errors: Option<Vec<i64>>,
    pub row_height_rel_errors: Option<Vec<f64>>,
    pub col_width_rel_errors: Option<Vec<f64>>,
}

impl TableComparison {
    pub fn error_free(&self) -> bool {
        self.row_count_correct && self.col_count_correct
    }
}

/// Compares effective structures. Extents are matched index-wise over
/// effective rows/columns in truth order.
pub fn compare(truth: &TableGenotype, predicted: &TableGenotype) -> TableComparison {
    let row_count_error = truth.effective_rows() as i64 - predicted.effective_rows() as i64;
    let col_count_error = truth.effective_cols() as i64 - predicted.effective_cols() as i64;
    let both = row_count_error == 0 && col_count_error == 0;
    let extent_errors = |axis: Axis| -> (Vec<i64>, Vec<f64>) {
        truth
            .effective_extents(axis)
            .into_iter()
            .zip(predicted.effective_extents(axis))
            .map(|(t, p)| {
                let e = t as i64 - p as i64;
                (e, e as f64 / t as f64)
            })
            .unzip()
    };
    let (rows, cols) =
        if both { (Some(extent_errors(Axis::Horizontal)), Some(extent_errors(Axis::Vertical))) } else { (None, None) };
    TableComparison {
        row_count_correct: row_count_error == 0,
        col_count_correct: col_count_error == 0,
        row_count_error,
        col_count_error,
        x0_error: both.then(|| truth.origin_x as i64 - predicted.origin_x as i64),
        y0_error: both.then(|| truth.origin_y as i64 - predicted.origin_y as i64),
        row_height_errors: rows.as_ref().map(|r| r.0.clone()),
        col_width_errors: cols.as_ref().map(|c| c.0.clone()),
        row_height_rel_errors: rows.map(|r| r.1),
        col_width_rel_errors: cols.map(|c| c.1),
    }
}

/// Aggregated metrics for one configuration. `None` marks an empty
/// inclusion subset (printed as `-`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config_name: String,
    pub n_tables: usize,
    pub pct_correct_rows: f64,
    pub pct_correct_cols: f64,
    pub avg_row_count_error: Option<f64>,
    pub avg_col_count_error: Option<f64>,
    pub avg_x0_error: Option<f64>,
    pub avg_y0_error: Option<f64>,
    /// Percent.
    pub avg_row_height_rel_error: Option<f64>,
    /// Percent.
    pub avg_col_width_rel_error: Option<f64>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Folds comparisons into the metric suite.
///
/// Relative extent errors are averaged per table first, then across tables.
pub fn aggregate(comparisons: &[TableComparison], config_name: &str) -> Result<MetricsReport> {
    if comparisons.is_empty() {
        return Err(Error::EmptyInput("no comparisons to aggregate"));
    }
    let n = comparisons.len() as f64;
    let pct = |f: fn(&TableComparison) -> bool| 100.0 * comparisons.iter().filter(|c| f(c)).count() as f64 / n;
    let correct = || comparisons.iter().filter(|c| c.error_free());
    Ok(MetricsReport {
        config_name: config_name.to_string(),
        n_tables: comparisons.len(),
        pct_correct_rows: pct(|c| c.row_count_correct),
        pct_correct_cols: pct(|c| c.col_count_correct),
        avg_row_count_error: mean(
            comparisons.iter().filter(|c| !c.row_count_correct).map(|c| c.row_count_error as f64),
        ),
        avg_col_count_error: mean(
            comparisons.iter().filter(|c| !c.col_count_correct).map(|c| c.col_count_error as f64),
        ),
        avg_x0_error: mean(correct().filter_map(|c| c.x0_error).map(|e| e as f64)),
        avg_y0_error: mean(correct().filter_map(|c| c.y0_error).map(|e| e as f64)),
        avg_row_height_rel_error: mean(
            correct().filter_map(|c| c.row_height_rel_errors.as_deref().and_then(|v| mean(v.iter().copied()))),
        )
        .map(|v| 100.0 * v),
        avg_col_width_rel_error: mean(
            correct().filter_map(|c| c.col_width_rel_errors.as_deref().and_then(|v| mean(v.iter().copied()))),
        )
        .map(|v| 100.0 * v),
    })
}

fn opt_cell(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(v) => format!("{v:.decimals$}"),
        None => "-".to_string(),
    }
}

pub const METRICS_HEADER: &str = "config,n_tables,pct_correct_rows,pct_correct_cols,avg_row_count_error,\
avg_col_count_error,avg_x0_error,avg_y0_error,avg_row_height_rel_error_pct,avg_col_width_rel_error_pct";

/// One CSV row per report. Percentages carry one decimal, other averages two.
pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{:.1},{:.1},{},{},{},{},{},{}",
            r.config_name,
            r.n_tables,
            r.pct_correct_rows,
            r.pct_correct_cols,
            opt_cell(r.avg_row_count_error, 2),
            opt_cell(r.avg_col_count_error, 2),
            opt_cell(r.avg_x0_error, 2),
            opt_cell(r.avg_y0_error, 2),
            opt_cell(r.avg_row_height_rel_error, 1),
            opt_cell(r.avg_col_width_rel_error, 1),
        );
    }
    s
}

/// Structure recovery settings shared by evaluation and sweeps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOptions {
    pub estimator: EstimatorParams,
    /// Degrade the skeleton before estimation.
    pub noise: Option<NoiseParams>,
    /// Refine the projection estimate.
    pub ga: Option<GaParams>,
}

/// Estimates a genotype from a skeleton, with optional degradation and GA
/// refinement. `entry_seed` decorrelates noise and GA runs across tables.
pub fn recover_structure(skeleton: &RasterImage, opts: &PipelineOptions, entry_seed: u64) -> Result<TableGenotype> {
    let degraded;
    let skeleton = match &opts.noise {
        Some(noise) => {
            let p = NoiseParams { seed: derive_seed(noise.seed, entry_seed), ..*noise };
            degraded = degrade(skeleton, &p)?;
            &degraded
        }
        None => skeleton,
    };
    let initial = estimate_structure(skeleton, &opts.estimator)?;
    match &opts.ga {
        Some(ga) => {
            let p = GaParams { seed: derive_seed(ga.seed, entry_seed), ..ga.clone() };
            Ok(evolve(&initial, skeleton, &p)?.best)
        }
        None => Ok(initial),
    }
}

/// A table whose structure could not be recovered is scored as an empty
/// prediction: all rows and columns missed.
fn compare_outcome(truth: &TableGenotype, predicted: Result<TableGenotype>) -> Result<TableComparison> {
    match predicted {
        Ok(p) => Ok(compare(truth, &p)),
        Err(Error::NoTable { .. } | Error::NoLines | Error::NoSkewStructure) => {
            Ok(compare(truth, &TableGenotype::new(0, 0, vec![], vec![])))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryResult {
    pub config_name: String,
    pub stem: String,
    pub comparison: Option<TableComparison>,
    /// Set when the entry could not be processed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub entries: Vec<EntryResult>,
    /// One report per configuration, in first-appearance order.
    pub reports: Vec<MetricsReport>,
}

impl Evaluation {
    pub fn skipped(&self) -> usize {
        self.entries.iter().filter(|e| e.error.is_some()).count()
    }
}

fn group_reports(entries: &[EntryResult]) -> Result<Vec<MetricsReport>> {
    let mut names: Vec<&str> = Vec::new();
    for e in entries {
        if !names.contains(&e.config_name.as_str()) {
            names.push(&e.config_name);
        }
    }
    names
        .into_iter()
        .filter_map(|name| {
            let comps: Vec<TableComparison> =
                entries.iter().filter(|e| e.config_name == name).filter_map(|e| e.comparison.clone()).collect();
            (!comps.is_empty()).then(|| aggregate(&comps, name))
        })
        .collect()
}

/// Runs the recovery pipeline over a manifest and scores every entry.
///
/// With `external_skeletons`, skeletons are read from `<dir>/<stem>.skel.png`
/// and resampled to the manifest canvas instead of using the rendered ones.
pub fn evaluate_manifest(
    manifest: &LoadedManifest,
    opts: &PipelineOptions,
    external_skeletons: Option<&Path>,
) -> Result<Evaluation> {
    let canvas = manifest.manifest.canvas;
    let entries: Vec<EntryResult> = manifest
        .manifest
        .entries
        .par_iter()
        .map(|entry| {
            let run = || -> Result<TableComparison> {
                let truth = manifest.load_genotype(entry)?;
                let skeleton = match external_skeletons {
                    Some(dir) => {
                        load_external(&dir.join(format!("{}.skel.png", entry.stem())), canvas.width, canvas.height)?
                    }
                    None => manifest.load_skeleton(entry)?,
                };
                compare_outcome(&truth, recover_structure(&skeleton, opts, entry.seed))
            };
            entry_result(entry, run())
        })
        .collect();
    let reports = group_reports(&entries)?;
    Ok(Evaluation { entries, reports })
}

fn entry_result(entry: &ManifestEntry, r: Result<TableComparison>) -> EntryResult {
    let (comparison, error) = match r {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    EntryResult { config_name: entry.config_name.clone(), stem: entry.stem(), comparison, error }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub estimator: EstimatorParams,
    pub passes: usize,
    pub max_angle: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { estimator: EstimatorParams::default(), passes: DEFAULT_PASSES, max_angle: DEFAULT_MAX_ANGLE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub angle: f64,
    pub deskew_enabled: bool,
    pub error_free_pct: f64,
    /// Mean absolute row-height error plus mean absolute column-width error
    /// (pixels) over error-free tables.
    pub pixel_error: Option<f64>,
    pub n_tables: usize,
    pub n_skipped: usize,
    /// `|angle - total correction|`, deskew mode only.
    pub mean_abs_residual: Option<f64>,
    pub max_abs_residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

struct SweepEntry {
    comparison: TableComparison,
    residual: Option<f64>,
}

fn mean_abs(errors: &[i64]) -> Option<f64> {
    mean(errors.iter().map(|&e| e.unsigned_abs() as f64))
}

/// Rotates one table by `angle`, optionally deskews, and scores the estimate.
///
/// The deskew correction is measured on the rotated scan and applied to the
/// rotated skeleton, which is then cropped back to the canvas.
fn sweep_entry(
    manifest: &LoadedManifest,
    entry: &ManifestEntry,
    angle: f64,
    deskew_enabled: bool,
    opts: &SweepOptions,
) -> Result<SweepEntry> {
    let canvas = manifest.manifest.canvas;
    let truth = manifest.load_genotype(entry)?;
    let skeleton = rotate(&manifest.load_skeleton(entry)?, angle);
    if !deskew_enabled {
        let comparison = compare_outcome(&truth, estimate_structure(&skeleton, &opts.estimator))?;
        return Ok(SweepEntry { comparison, residual: None });
    }
    let scan = rotate(&manifest.load_scan(entry)?, angle);
    let correction = match deskew_iterative(&scan, opts.passes, opts.max_angle) {
        Ok((_, report)) => report.estimated_angle,
        Err(Error::NoSkewStructure) => 0.0,
        Err(e) => return Err(e),
    };
    let restored = crop_center(&rotate(&skeleton, -correction), canvas.width, canvas.height)?;
    let comparison = compare_outcome(&truth, estimate_structure(&restored, &opts.estimator))?;
    Ok(SweepEntry { comparison, residual: Some(angle - correction) })
}

/// Evaluates the manifest at each rotation angle.
pub fn rotation_sweep(
    manifest: &LoadedManifest,
    angles: &[f64],
    deskew_enabled: bool,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    if angles.is_empty() {
        return Err(Error::EmptyInput("no sweep angles"));
    }
    let mut rows = Vec::with_capacity(angles.len());
    for &angle in angles {
        let results: Vec<Result<SweepEntry>> = manifest
            .manifest
            .entries
            .par_iter()
            .map(|e| sweep_entry(manifest, e, angle, deskew_enabled, opts))
            .collect();
        let ok: Vec<&SweepEntry> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
        let n_skipped = results.len() - ok.len();
        let n = ok.len();
        let error_free: Vec<&TableComparison> = ok.iter().map(|e| &e.comparison).filter(|c| c.error_free()).collect();
        let error_free_pct = if n == 0 { 0.0 } else { 100.0 * error_free.len() as f64 / n as f64 };
        let row_err = mean(error_free.iter().filter_map(|c| c.row_height_errors.as_deref().and_then(mean_abs)));
        let col_err = mean(error_free.iter().filter_map(|c| c.col_width_errors.as_deref().and_then(mean_abs)));
        let pixel_error = row_err.zip(col_err).map(|(r, c)| r + c);
        let residuals: Vec<f64> = ok.iter().filter_map(|e| e.residual.map(f64::abs)).collect();
        rows.push(SweepRow {
            angle,
            deskew_enabled,
            error_free_pct,
            pixel_error,
            n_tables: n,
            n_skipped,
            mean_abs_residual: mean(residuals.iter().copied()),
            max_abs_residual: residuals.iter().copied().reduce(f64::max),
        });
    }
    Ok(SweepReport { rows })
}

pub const SWEEP_HEADER: &str = "angle,deskew_enabled,error_free_pct,pixel_error";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{:.1},{}", r.angle, r.deskew_enabled, r.error_free_pct, opt_cell(r.pixel_error, 2));
    }
    s
}

/// Two stacked line plots (error-free % and pixel error against angle), one
/// series per deskew mode.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    const W: f64 = 640.0;
    const PANEL_H: f64 = 220.0;
    const MARGIN: f64 = 50.0;
    let (amin, amax) =
        rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.angle), hi.max(r.angle)));
    let span = if amax > amin { amax - amin } else { 1.0 };
    let x = |a: f64| MARGIN + (a - amin) / span * (W - 2.0 * MARGIN);
    let max_px = rows.iter().filter_map(|r| r.pixel_error).fold(1.0f64, f64::max);
    let mut s = String::new();
    let total_h = 2.0 * PANEL_H + 2.0 * MARGIN;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total_h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (panel, (title, ymax)) in
        [("error-free tables (%)", 100.0), ("pixel error (px)", max_px)].into_iter().enumerate()
    {
        let top = MARGIN / 2.0 + panel as f64 * (PANEL_H + MARGIN);
        let bottom = top + PANEL_H;
        let y = |v: f64| bottom - v / ymax * PANEL_H;
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">{title}</text>"#, top - 6.0);
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="black" points="{MARGIN},{top} {MARGIN},{bottom} {},{bottom}"/>"#,
            W - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{amin}</text><text x="{}" y="{}">{amax}</text>"#,
            x(amin) - 8.0,
            bottom + 14.0,
            x(amax) - 8.0,
            bottom + 14.0
        );
        let _ = writeln!(s, r#"<text x="4" y="{}">{ymax:.0}</text><text x="30" y="{bottom}">0</text>"#, top + 4.0);
        for (deskew, color) in [(false, "#c0392b"), (true, "#2c7bb6")] {
            let pts: Vec<String> = rows
                .iter()
                .filter(|r| r.deskew_enabled == deskew)
                .filter_map(|r| {
                    let v = if panel == 0 { Some(r.error_free_pct) } else { r.pixel_error };
                    v.map(|v| format!("{:.1},{:.1}", x(r.angle), y(v)))
                })
                .collect();
            if !pts.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    pts.join(" ")
                );
            }
        }
    }
    let legend_y = total_h - 8.0;
    let _ = writeln!(
        s,
        r##"<text x="{MARGIN}" y="{legend_y}" fill="#c0392b">no deskew</text><text x="{}" y="{legend_y}" fill="#2c7bb6">deskew</text>"##,
        MARGIN + 90.0
    );
    s.push_str("</svg>\n");
    s
}
