//! PNG reading and writing. Intensities are doubles in `[0, 1]` in memory
//! and 8-bit only on disk.

use std::path::Path;

use aitv::{Image, LabelMap, ScalarField};
use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{CliError, Result};

/// Reads a PNG as gray or RGB by its color type; alpha is dropped.
/// `grayscale` forces luminance conversion of color inputs.
pub fn read_image(path: &Path, grayscale: bool) -> Result<Image> {
    let img = image::open(path).map_err(|source| CliError::Image { path: path.into(), source })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let out = if img.color().has_color() {
        let rgb = img.to_rgb16();
        let channels = (0..3)
            .map(|c| ScalarField::from_fn(h, w, |i, j| f64::from(rgb.get_pixel(j as u32, i as u32)[c]) / 65535.0))
            .collect();
        Image::new(channels)?
    } else {
        let luma = img.to_luma16();
        Image::gray(ScalarField::from_fn(h, w, |i, j| f64::from(luma.get_pixel(j as u32, i as u32)[0]) / 65535.0))
    };
    Ok(if grayscale { out.to_luma() } else { out })
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    let (m, n) = img.shape();
    let ch = img.channels();
    let dynamic = if ch.len() == 3 {
        DynamicImage::ImageRgb8(RgbImage::from_fn(n as u32, m as u32, |x, y| {
            image::Rgb([0, 1, 2].map(|c| quantize(ch[c].get(y as usize, x as usize))))
        }))
    } else {
        DynamicImage::ImageLuma8(GrayImage::from_fn(n as u32, m as u32, |x, y| {
            image::Luma([quantize(ch[0].get(y as usize, x as usize))])
        }))
    };
    dynamic.save(path).map_err(|source| CliError::Image { path: path.into(), source })
}

pub fn write_field(path: &Path, u: &ScalarField) -> Result<()> {
    write_image(path, &Image::gray(u.clone()))
}

/// Gray level of label `l` out of `n`: `round(255 (l − 1) / (n − 1))`.
pub fn label_gray(l: u32, n: usize) -> u8 {
    if n <= 1 {
        return 0;
    }
    (255.0 * f64::from(l - 1) / (n - 1) as f64).round() as u8
}

pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    let n = labels.num_labels();
    let gray = GrayImage::from_fn(labels.cols() as u32, labels.rows() as u32, |x, y| {
        image::Luma([label_gray(labels.get(y as usize, x as usize), n)])
    });
    gray.save(path).map_err(|source| CliError::Image { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_levels_span_the_gray_range() {
        assert_eq!((1..=4).map(|l| label_gray(l, 4)).collect::<Vec<_>>(), [0, 85, 170, 255]);
        assert_eq!([label_gray(1, 2), label_gray(2, 2)], [0, 255]);
        assert_eq!(label_gray(1, 1), 0);
    }

    #[test]
    fn quantization_rounds_and_clips() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(-0.2), 0);
        assert_eq!(quantize(1.7), 255);
    }
}
