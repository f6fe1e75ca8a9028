//! Table genotype, pixel buffers and canvas geometry shared by every stage.
//!
//! A divider at nominal coordinate `p` occupies pixels `[p, p + CORE_THICKNESS)`.
//! The outer border sits at the origin, so a table with total width `W`
//! covers `[x0, x0 + W + CORE_THICKNESS)` horizontally.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, GenotypeError, Result};

/// Thickness of a rendered border line in pixels.
pub const CORE_THICKNESS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Rows: horizontal dividers, positions along y.
    Horizontal,
    /// Columns: vertical dividers, positions along x.
    Vertical,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Horizontal => f.write_str("row"),
            Axis::Vertical => f.write_str("column"),
        }
    }
}

/// Page size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Canvas {
    /// A4 at 72 ppi.
    pub const A4: Canvas = Canvas { width: 595, height: 842 };

    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Self::A4
    }
}

impl fmt::Display for Canvas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Canvas {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let width: u32 = w.trim().parse().map_err(|e| format!("bad width {w:?}: {e}"))?;
        let height: u32 = h.trim().parse().map_err(|e| format!("bad height {h:?}: {e}"))?;
        if width == 0 || height == 0 {
            return Err(format!("canvas dimensions must be positive, got {s}"));
        }
        Ok(Self { width, height })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

/// Latent table structure.
///
/// `row_heights` has `max_rows` entries and `col_widths` has `max_cols`
/// entries. Zero entries encode absent rows/columns; the effective count is
/// the number of strictly positive entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TableGenotype {
    pub max_rows: usize,
    pub max_cols: usize,
    pub origin_x: i32,
    pub origin_y: i32,
    pub row_heights: Vec<i32>,
    pub col_widths: Vec<i32>,
}

impl TableGenotype {
    /// Builds a genotype whose maxima equal the list lengths.
    pub fn new(origin_x: i32, origin_y: i32, row_heights: Vec<i32>, col_widths: Vec<i32>) -> Self {
        Self { max_rows: row_heights.len(), max_cols: col_widths.len(), origin_x, origin_y, row_heights, col_widths }
    }

    pub fn effective_rows(&self) -> usize {
        self.row_heights.iter().filter(|&&h| h > 0).count()
    }

    pub fn effective_cols(&self) -> usize {
        self.col_widths.iter().filter(|&&w| w > 0).count()
    }

    pub fn extents(&self, axis: Axis) -> &[i32] {
        match axis {
            Axis::Horizontal => &self.row_heights,
            Axis::Vertical => &self.col_widths,
        }
    }

    pub fn origin(&self, axis: Axis) -> i32 {
        match axis {
            Axis::Horizontal => self.origin_y,
            Axis::Vertical => self.origin_x,
        }
    }

    /// Strictly positive extents in order.
    pub fn effective_extents(&self, axis: Axis) -> Vec<i32> {
        self.extents(axis).iter().copied().filter(|&e| e > 0).collect()
    }

    /// Nominal divider coordinates along `axis`, outer borders included.
    ///
    /// Returns `effective + 1` strictly increasing positions.
    pub fn divider_positions(&self, axis: Axis) -> Vec<i32> {
        let mut pos = self.origin(axis);
        let mut out = vec![pos];
        for e in self.effective_extents(axis) {
            pos += e;
            out.push(pos);
        }
        out
    }

    /// Sum of positive extents along `axis`.
    pub fn span(&self, axis: Axis) -> i64 {
        self.extents(axis).iter().filter(|&&e| e > 0).map(|&e| i64::from(e)).sum()
    }

    pub fn bounding_box(&self) -> Rect {
        Rect {
            x: self.origin_x,
            y: self.origin_y,
            w: self.span(Axis::Vertical) as i32,
            h: self.span(Axis::Horizontal) as i32,
        }
    }

    /// Moves positive extents to the front, keeping their order.
    pub fn compact(&mut self) {
        for v in [&mut self.row_heights, &mut self.col_widths] {
            let len = v.len();
            v.retain(|&e| e > 0);
            v.resize(len, 0);
        }
    }

    /// Pads both extent lists with zeros up to the given maxima.
    pub fn pad_to(&mut self, max_rows: usize, max_cols: usize) {
        if max_rows > self.row_heights.len() {
            self.row_heights.resize(max_rows, 0);
        }
        if max_cols > self.col_widths.len() {
            self.col_widths.resize(max_cols, 0);
        }
        self.max_rows = self.row_heights.len();
        self.max_cols = self.col_widths.len();
    }
}

/// Checks every genotype invariant against a canvas, reporting the first
/// violation found.
pub fn validate_genotype(g: &TableGenotype, canvas: Canvas) -> Result<(), GenotypeError> {
    for (axis, list, expected) in
        [(Axis::Horizontal, &g.row_heights, g.max_rows), (Axis::Vertical, &g.col_widths, g.max_cols)]
    {
        if list.len() != expected {
            return Err(GenotypeError::LengthMismatch { axis, len: list.len(), expected });
        }
        if let Some((index, &value)) = list.iter().enumerate().find(|(_, &e)| e < 0) {
            return Err(GenotypeError::NegativeExtent { axis, index, value });
        }
    }
    for (axis, value) in [(Axis::Vertical, g.origin_x), (Axis::Horizontal, g.origin_y)] {
        if value < 0 {
            return Err(GenotypeError::NegativeOrigin { axis, value });
        }
    }
    for (axis, limit) in [(Axis::Vertical, canvas.width), (Axis::Horizontal, canvas.height)] {
        let needed = i64::from(g.origin(axis)) + g.span(axis) + i64::from(CORE_THICKNESS);
        if needed > i64::from(limit) {
            return Err(GenotypeError::Overflow { axis, needed, canvas: limit });
        }
    }
    if g.effective_rows() == 0 {
        return Err(GenotypeError::Empty { axis: Axis::Horizontal });
    }
    if g.effective_cols() == 0 {
        return Err(GenotypeError::Empty { axis: Axis::Vertical });
    }
    Ok(())
}

/// Bounding box of a valid genotype.
pub fn bounding_box(g: &TableGenotype) -> Rect {
    g.bounding_box()
}

/// Row-major 8-bit image with one (gray) or three (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new_gray(width: u32, height: u32, fill: u8) -> Self {
        Self { width, height, channels: 1, pixels: vec![fill; width as usize * height as usize] }
    }

    pub fn white(canvas: Canvas) -> Self {
        Self::new_gray(canvas.width, canvas.height, 255)
    }

    pub fn from_raw(width: u32, height: u32, channels: u8, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if pixels.len() != expected {
            return Err(Error::BufferSize { got: pixels.len(), expected });
        }
        Ok(Self { width, height, channels, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn canvas(&self) -> Canvas {
        Canvas::new(self.width, self.height)
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Gray value at (x, y). Panics on RGB images.
    #[inline]
    pub fn gray(&self, x: u32, y: u32) -> u8 {
        debug_assert!(self.is_gray());
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set_gray(&mut self, x: u32, y: u32, v: u8) {
        debug_assert!(self.is_gray());
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = v;
    }

    /// Darkens a clipped rectangle of a gray image to `value` (keeps darker pixels).
    pub fn darken_rect(&mut self, x: i64, y: i64, w: i64, h: i64, value: u8) {
        debug_assert!(self.is_gray());
        let x0 = x.clamp(0, self.width as i64) as usize;
        let x1 = (x + w).clamp(0, self.width as i64) as usize;
        let y0 = y.clamp(0, self.height as i64) as usize;
        let y1 = (y + h).clamp(0, self.height as i64) as usize;
        let stride = self.width as usize;
        for row in y0..y1 {
            for p in &mut self.pixels[row * stride + x0..row * stride + x1] {
                *p = (*p).min(value);
            }
        }
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u8> {
        self.pixels.chunks_exact(self.width as usize * self.channels as usize)
    }
}

/// Black/white classification of a gray image; `true` is black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub(crate) fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), width as usize * height as usize);
        Self { width, height, bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn is_black(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn black_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}
