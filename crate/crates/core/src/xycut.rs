//! Projection-based structure estimation.
//!
//! The skeleton is reduced to luminance, binarized, and each scanline is
//! summarised by its longest contiguous black run. Scanlines whose run is at
//! least a fraction of the longest run are grouped into bands, and each band's
//! centroid becomes a divider.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Axis, BinaryImage, RasterImage, TableGenotype};

pub const DEFAULT_THRESHOLD: u8 = 125;
pub const DEFAULT_MIN_FRAC: f64 = 0.25;

/// Luminance of one RGB pixel, rounded to nearest.
#[inline]
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8
}

/// Converts to a single-channel luminance image. Gray input is returned as is.
pub fn to_luminance(img: &RasterImage) -> Result<RasterImage> {
    match img.channels() {
        1 => Ok(img.clone()),
        3 => {
            let px: Vec<u8> = img.pixels().chunks_exact(3).map(|p| luminance(p[0], p[1], p[2])).collect();
            RasterImage::from_raw(img.width(), img.height(), 1, px)
        }
        c => Err(Error::UnsupportedChannels(c)),
    }
}

/// Pixels strictly above `threshold` are white, everything else black.
///
/// RGB input is reduced to luminance first.
pub fn binarize(img: &RasterImage, threshold: u8) -> Result<BinaryImage> {
    let gray = to_luminance(img)?;
    let bits = gray.pixels().iter().map(|&v| v <= threshold).collect();
    Ok(BinaryImage::from_bits(gray.width(), gray.height(), bits))
}

/// Longest black run per scanline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionProfile {
    pub axis: Axis,
    pub run_lengths: Vec<u32>,
}

impl ProjectionProfile {
    pub fn max_run(&self) -> u32 {
        self.run_lengths.iter().copied().max().unwrap_or(0)
    }
}

fn longest_run(iter: impl Iterator<Item = bool>) -> u32 {
    let (mut best, mut cur) = (0u32, 0u32);
    for black in iter {
        if black {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Projects a binary image: `Horizontal` yields one entry per row (y),
/// `Vertical` one entry per column (x).
pub fn project(bin: &BinaryImage, axis: Axis) -> Result<ProjectionProfile> {
    let (w, h) = (bin.width() as usize, bin.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let bits = bin.bits();
    let run_lengths = match axis {
        Axis::Horizontal => bits.chunks_exact(w).map(|row| longest_run(row.iter().copied())).collect(),
        Axis::Vertical => {
            // Column-wise runs computed in one row-major sweep.
            let mut cur = vec![0u32; w];
            let mut best = vec![0u32; w];
            for row in bits.chunks_exact(w) {
                for ((c, b), &black) in cur.iter_mut().zip(best.iter_mut()).zip(row) {
                    if black {
                        *c += 1;
                        *b = (*b).max(*c);
                    } else {
                        *c = 0;
                    }
                }
            }
            best
        }
    };
    Ok(ProjectionProfile { axis, run_lengths })
}

/// Divider positions along one axis.
///
/// Scanlines with a run of at least `min_frac` times the longest run are
/// accepted; each contiguous band of accepted scanlines yields its centroid,
/// rounded to the nearest pixel.
///
/// A band cut off by the image border is narrower than the bands inside the
/// image. When such a band is narrower than the median interior band, its
/// position is measured from its inner edge using the median width.
pub fn detect_dividers(profile: &ProjectionProfile, min_frac: f64) -> Result<Vec<i32>> {
    let max = profile.max_run();
    if max == 0 {
        return Err(Error::NoLines);
    }
    let cutoff = min_frac * max as f64;
    let n = profile.run_lengths.len();
    let mut bands: Vec<(usize, usize)> = Vec::new();
    let mut band_start: Option<usize> = None;
    for i in 0..=n {
        let accepted = i < n && profile.run_lengths[i] as f64 >= cutoff;
        match (accepted, band_start) {
            (true, None) => band_start = Some(i),
            (false, Some(start)) => {
                bands.push((start, i - 1));
                band_start = None;
            }
            _ => {}
        }
    }
    let mut interior: Vec<usize> =
        bands.iter().filter(|&&(s, e)| s > 0 && e + 1 < n).map(|&(s, e)| e - s + 1).collect();
    interior.sort_unstable();
    let reference = interior.get(interior.len().saturating_sub(1) / 2).copied();
    let out = bands
        .iter()
        .map(|&(start, end)| {
            let width = end - start + 1;
            let half = |w: usize| (w - 1) as f64 / 2.0;
            let centre = match reference {
                Some(w) if width < w && start == 0 && end + 1 < n => end as f64 - half(w),
                Some(w) if width < w && end + 1 == n && start > 0 => start as f64 + half(w),
                _ => (start + end) as f64 / 2.0,
            };
            centre.round() as i32
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    pub threshold: u8,
    pub min_frac: f64,
    /// Minimum extent lists lengths of the returned genotype.
    pub max_rows: usize,
    pub max_cols: usize,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, min_frac: DEFAULT_MIN_FRAC, max_rows: 0, max_cols: 0 }
    }
}

/// Both divider sets of a skeleton.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DividerSet {
    pub horizontal_positions: Vec<i32>,
    pub vertical_positions: Vec<i32>,
}

pub fn find_dividers(skeleton: &RasterImage, params: &EstimatorParams) -> Result<DividerSet> {
    let bin = binarize(skeleton, params.threshold)?;
    let rows = project(&bin, Axis::Horizontal)?;
    let cols = project(&bin, Axis::Vertical)?;
    let horizontal_positions = detect_dividers(&rows, params.min_frac).unwrap_or_default();
    let vertical_positions = detect_dividers(&cols, params.min_frac).unwrap_or_default();
    Ok(DividerSet { horizontal_positions, vertical_positions })
}

/// Estimates the genotype of a skeleton image.
///
/// The outermost bands are the table border, so the origin is the first
/// centroid on each axis and extents are successive centroid differences.
pub fn estimate_structure(skeleton: &RasterImage, params: &EstimatorParams) -> Result<TableGenotype> {
    let d = find_dividers(skeleton, params)?;
    genotype_from_dividers(&d, params.max_rows, params.max_cols)
}

pub fn genotype_from_dividers(d: &DividerSet, max_rows: usize, max_cols: usize) -> Result<TableGenotype> {
    let (hs, vs) = (&d.horizontal_positions, &d.vertical_positions);
    if hs.len() < 2 || vs.len() < 2 {
        return Err(Error::NoTable { horizontal: hs.len(), vertical: vs.len() });
    }
    let diffs = |p: &[i32]| p.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    let mut g = TableGenotype::new(vs[0], hs[0], diffs(hs), diffs(vs));
    g.pad_to(max_rows, max_cols);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Canvas;
    use crate::render::{render_skeleton, sample_genotype, BorderStyle, TableConfig};
    use proptest::prelude::*;

    fn bin_from_fn(w: u32, h: u32, f: impl Fn(u32, u32) -> bool) -> BinaryImage {
        let bits = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        BinaryImage::from_bits(w, h, bits)
    }

    #[test]
    fn luminance_fixed_points_and_hand_value() {
        assert_eq!(luminance(255, 255, 255), 255);
        assert_eq!(luminance(0, 0, 0), 0);
        assert_eq!(luminance(100, 150, 200), 141);
    }

    #[test]
    fn gray_passes_through_and_bad_channels_fail() {
        let g = RasterImage::new_gray(3, 2, 77);
        assert_eq!(to_luminance(&g).unwrap(), g);
        let rgb = RasterImage::from_raw(1, 1, 3, vec![100, 150, 200]).unwrap();
        assert_eq!(to_luminance(&rgb).unwrap().pixels(), &[141]);
    }

    #[test]
    fn threshold_boundary() {
        let img = RasterImage::from_raw(4, 1, 1, vec![126, 125, 0, 255]).unwrap();
        let bin = binarize(&img, 125).unwrap();
        assert_eq!(bin.bits(), &[false, true, true, false]);
    }

    #[test]
    fn projection_of_white_is_zero() {
        let bin = bin_from_fn(20, 10, |_, _| false);
        assert!(project(&bin, Axis::Horizontal).unwrap().run_lengths.iter().all(|&r| r == 0));
        assert!(project(&bin, Axis::Vertical).unwrap().run_lengths.iter().all(|&r| r == 0));
    }

    #[test]
    fn projection_of_single_row() {
        let bin = bin_from_fn(30, 20, |_, y| y == 10);
        let p = project(&bin, Axis::Horizontal).unwrap();
        assert_eq!(p.run_lengths.len(), 20);
        assert_eq!(p.run_lengths[10], 30);
        assert_eq!(p.run_lengths.iter().filter(|&&r| r > 0).count(), 1);
        let v = project(&bin, Axis::Vertical).unwrap();
        assert_eq!(v.run_lengths, vec![1; 30]);
    }

    #[test]
    fn projection_uses_longest_run_not_mass() {
        let bin = bin_from_fn(20, 1, |x, _| matches!(x, 0..=3 | 5..=7 | 10..=19));
        assert_eq!(project(&bin, Axis::Horizontal).unwrap().run_lengths, vec![10]);
    }

    #[test]
    fn empty_image_is_an_error() {
        let bin = BinaryImage::from_bits(0, 0, vec![]);
        assert!(matches!(project(&bin, Axis::Horizontal), Err(Error::EmptyImage)));
    }

    fn profile(len: usize, runs: &[(usize, u32)]) -> ProjectionProfile {
        let mut run_lengths = vec![0; len];
        for &(i, r) in runs {
            run_lengths[i] = r;
        }
        ProjectionProfile { axis: Axis::Horizontal, run_lengths }
    }

    #[test]
    fn short_lines_are_rejected() {
        let p = profile(50, &[(5, 100), (40, 24)]);
        assert_eq!(detect_dividers(&p, 0.25).unwrap(), vec![5]);
    }

    #[test]
    fn cutoff_is_inclusive() {
        let p = profile(50, &[(5, 100), (40, 25)]);
        assert_eq!(detect_dividers(&p, 0.25).unwrap(), vec![5, 40]);
    }

    #[test]
    fn band_collapses_to_centroid() {
        let p = profile(20, &[(9, 50), (10, 50), (11, 50)]);
        assert_eq!(detect_dividers(&p, 0.25).unwrap(), vec![10]);
    }

    #[test]
    fn clipped_border_band_uses_interior_width() {
        let band = |from: usize, to: usize| (from..to).map(|i| (i, 80)).collect::<Vec<_>>();
        let runs: Vec<(usize, u32)> = [band(0, 7), band(40, 51), band(90, 101), band(145, 150)].concat();
        assert_eq!(detect_dividers(&profile(150, &runs), 0.25).unwrap(), vec![1, 45, 95, 150]);
    }

    #[test]
    fn lone_clipped_band_keeps_centroid() {
        let runs: Vec<(usize, u32)> = (0..4).map(|i| (i, 80)).collect();
        assert_eq!(detect_dividers(&profile(50, &runs), 0.25).unwrap(), vec![2]);
    }

    #[test]
    fn blurry_table_touching_page_edge() {
        let g = TableGenotype::new(0, 1, vec![41, 60], vec![75, 98]);
        let img = render_skeleton(&g, &BorderStyle::blurry(), Canvas::A4).unwrap();
        let est = estimate_structure(&img, &EstimatorParams::default()).unwrap();
        assert_eq!((est.origin_x, est.origin_y), (1, 2));
        assert_eq!((est.row_heights, est.col_widths), (g.row_heights, g.col_widths));
    }

    #[test]
    fn no_lines_is_an_error() {
        assert!(matches!(detect_dividers(&profile(10, &[]), 0.25), Err(Error::NoLines)));
    }

    #[test]
    fn skeleton_bands_sit_on_dividers() {
        let g = TableGenotype::new(20, 30, vec![50, 60], vec![100]);
        let style = BorderStyle::blurry();
        let img = render_skeleton(&g, &style, Canvas::A4).unwrap();
        let p = project(&binarize(&img, 125).unwrap(), Axis::Horizontal).unwrap();
        // Blurry cores binarize into 3 + 2*4 = 11 px bands centred on the core.
        for &y in &[30usize, 80, 140] {
            for dy in 0..11 {
                assert!(p.run_lengths[y - 4 + dy] > 50, "row {} should be in band", y - 4 + dy);
            }
            assert!(p.run_lengths[y - 5] < 50);
            assert!(p.run_lengths[y + 7] < 50);
        }
    }

    #[test]
    fn solid_round_trip_three_by_two() {
        let g = TableGenotype::new(40, 60, vec![50, 70, 45], vec![90, 80]);
        let img = render_skeleton(&g, &BorderStyle::solid(), Canvas::A4).unwrap();
        let est = estimate_structure(&img, &EstimatorParams::default()).unwrap();
        assert_eq!((est.effective_rows(), est.effective_cols()), (3, 2));
        for (a, b) in est.row_heights.iter().zip(&g.row_heights) {
            assert!((a - b).abs() <= 2);
        }
        for (a, b) in est.col_widths.iter().zip(&g.col_widths) {
            assert!((a - b).abs() <= 2);
        }
        assert!((est.origin_x - g.origin_x).abs() <= 2 && (est.origin_y - g.origin_y).abs() <= 2);
    }

    #[test]
    fn white_image_has_no_table() {
        let img = RasterImage::white(Canvas::A4);
        assert!(matches!(estimate_structure(&img, &EstimatorParams::default()), Err(Error::NoTable { .. })));
    }

    #[test]
    fn estimate_pads_to_requested_maxima() {
        let g = TableGenotype::new(40, 60, vec![50, 70], vec![90]);
        let img = render_skeleton(&g, &BorderStyle::solid(), Canvas::A4).unwrap();
        let params = EstimatorParams { max_rows: 6, max_cols: 4, ..Default::default() };
        let est = estimate_structure(&img, &params).unwrap();
        assert_eq!((est.max_rows, est.max_cols), (6, 4));
        assert_eq!(est.row_heights, vec![50, 70, 0, 0, 0, 0]);
    }

    #[test]
    fn solid_round_trip_all_configs() {
        let mut n = 0;
        for cfg in TableConfig::all_builtin() {
            for seed in 0..100 {
                let g = sample_genotype(&cfg, Canvas::A4, 500 + seed).unwrap();
                let img = render_skeleton(&g, &BorderStyle::solid(), Canvas::A4).unwrap();
                let est = estimate_structure(&img, &EstimatorParams::default()).unwrap();
                assert_eq!(
                    (est.effective_rows(), est.effective_cols()),
                    (g.effective_rows(), g.effective_cols()),
                    "{} seed {}",
                    cfg.name,
                    seed
                );
                assert_eq!(est.effective_extents(Axis::Horizontal), g.effective_extents(Axis::Horizontal));
                assert_eq!(est.effective_extents(Axis::Vertical), g.effective_extents(Axis::Vertical));
                n += 1;
            }
        }
        assert_eq!(n, 400);
    }

    proptest! {
        #[test]
        fn black_set_grows_with_threshold(px in prop::collection::vec(any::<u8>(), 1..64), t1 in any::<u8>(), t2 in any::<u8>()) {
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let img = RasterImage::from_raw(px.len() as u32, 1, 1, px).unwrap();
            let a = binarize(&img, lo).unwrap();
            let b = binarize(&img, hi).unwrap();
            for (x, y) in a.bits().iter().zip(b.bits()) {
                prop_assert!(!*x || *y);
            }
        }

        #[test]
        fn dividers_increase_and_ignore_white_padding(
            runs in prop::collection::vec(0u32..200, 1..120),
            pad in 0usize..20,
        ) {
            let runs: Vec<u32> = std::iter::once(0).chain(runs).chain(std::iter::once(0)).collect();
            let p = ProjectionProfile { axis: Axis::Horizontal, run_lengths: runs.clone() };
            if let Ok(d) = detect_dividers(&p, 0.25) {
                prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
                let mut padded = runs.clone();
                padded.extend(std::iter::repeat(0).take(pad));
                let p2 = ProjectionProfile { axis: Axis::Horizontal, run_lengths: padded };
                prop_assert_eq!(detect_dividers(&p2, 0.25).unwrap(), d.clone());
                // Accepted scanlines all meet the cutoff.
                let max = p.max_run() as f64;
                for &pos in &d {
                    prop_assert!(runs[pos as usize] as f64 >= 0.25 * max);
                }
            }
        }
    }
}
