//! PNG and JSON file helpers.

use std::fs;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RasterImage;

/// Reads a PNG (or any format the `image` crate decodes) as gray or RGB.
///
/// Images with colour channels become 3-channel RGB; alpha is dropped.
pub fn read_image(path: &Path) -> Result<RasterImage> {
    let img = image::open(path).map_err(|source| Error::Image { path: path.into(), source })?;
    Ok(from_dynamic(img))
}

pub fn from_dynamic(img: DynamicImage) -> RasterImage {
    let has_color = !matches!(img.color(), ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16);
    if has_color {
        let rgb = img.into_rgb8();
        let (w, h) = rgb.dimensions();
        RasterImage::from_raw(w, h, 3, rgb.into_raw()).expect("rgb8 buffer")
    } else {
        let gray = img.into_luma8();
        let (w, h) = gray.dimensions();
        RasterImage::from_raw(w, h, 1, gray.into_raw()).expect("luma8 buffer")
    }
}

/// Writes an 8-bit gray or RGB PNG.
pub fn write_png(path: &Path, img: &RasterImage) -> Result<()> {
    let color = if img.is_gray() { ColorType::L8 } else { ColorType::Rgb8 };
    image::save_buffer_with_format(path, img.pixels(), img.width(), img.height(), color, ImageFormat::Png)
        .map_err(|source| Error::Image { path: path.into(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.into(), source })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

pub fn create_dir_all(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io { path: path.into(), source })
}
