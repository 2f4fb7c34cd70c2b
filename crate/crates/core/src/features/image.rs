use std::path::Path;

use crate::error::{Error, Result};

/// Default square side fed to the backbone.
pub const DEFAULT_SIDE: usize = 224;

/// Row-major `height x width x channels` pixel buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image has zero extent"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "{channels} channels, expected 1 or 3"
            )));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::invalid("pixel buffer does not match dimensions"));
        }
        Ok(Image {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
        )
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, ch: usize) -> f32 {
        self.pixels[(row * self.width + col) * self.channels + ch]
    }
}

/// Decode an image file into raw `[0, 255]` values. PPM/PGM, PNG and JPEG are supported.
pub fn load_image(path: &Path) -> Result<Image> {
    let decoded = ::image::open(path)?;
    if decoded.color().has_color() {
        let rgb = decoded.into_rgb8();
        let (w, h) = rgb.dimensions();
        let pixels = rgb.into_raw().into_iter().map(f32::from).collect();
        Image::new(h as usize, w as usize, 3, pixels)
    } else {
        let luma = decoded.into_luma8();
        let (w, h) = luma.dimensions();
        let pixels = luma.into_raw().into_iter().map(f32::from).collect();
        Image::new(h as usize, w as usize, 1, pixels)
    }
}

/// Source sample positions and weights for one output axis, using
/// half-pixel centres (`align_corners = false`).
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, x - lo as f64)
        })
        .collect()
}

/// Bilinear resize to `side x side` followed by the `1/255` rescale.
pub fn preprocess_image(raw: &Image, side: usize) -> Result<Image> {
    if raw.height == 0 || raw.width == 0 || raw.pixels.is_empty() {
        return Err(Error::invalid("empty image"));
    }
    if side == 0 {
        return Err(Error::invalid("target side must be at least 1"));
    }
    let rows = axis_taps(raw.height, side);
    let cols = axis_taps(raw.width, side);
    let c = raw.channels;
    let mut pixels = Vec::with_capacity(side * side * c);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            for ch in 0..c {
                let top =
                    f64::from(raw.at(r0, c0, ch)) * (1.0 - fx) + f64::from(raw.at(r0, c1, ch)) * fx;
                let bottom =
                    f64::from(raw.at(r1, c0, ch)) * (1.0 - fx) + f64::from(raw.at(r1, c1, ch)) * fx;
                let v = (top * (1.0 - fy) + bottom * fy) / 255.0;
                pixels.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    Image::new(side, side, c, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_images_map_to_constants() {
        let white = Image::filled(37, 51, 3, 255.0).unwrap();
        let out = preprocess_image(&white, DEFAULT_SIDE).unwrap();
        assert_eq!((out.height, out.width, out.channels), (224, 224, 3));
        assert!(out.pixels.iter().all(|&v| v == 1.0));

        let black = Image::filled(300, 300, 1, 0.0).unwrap();
        let out = preprocess_image(&black, DEFAULT_SIDE).unwrap();
        assert!(out.pixels.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn halving_equals_block_mean() {
        let (h, w) = (448, 448);
        let pixels: Vec<f32> = (0..h * w)
            .map(|i| {
                let (r, c) = (i / w, i % w);
                if (r + c) % 2 == 0 {
                    255.0
                } else {
                    (r % 7) as f32 * 10.0
                }
            })
            .collect();
        let raw = Image::new(h, w, 1, pixels).unwrap();
        let out = preprocess_image(&raw, 224).unwrap();
        for r in 0..224 {
            for c in 0..224 {
                let mean = (raw.at(2 * r, 2 * c, 0)
                    + raw.at(2 * r, 2 * c + 1, 0)
                    + raw.at(2 * r + 1, 2 * c, 0)
                    + raw.at(2 * r + 1, 2 * c + 1, 0)) as f64
                    / 4.0
                    / 255.0;
                assert!((out.at(r, c, 0) as f64 - mean).abs() < 1e-6, "({r},{c})");
            }
        }
    }

    #[test]
    fn rejects_empty_and_bad_channels() {
        assert!(Image::new(0, 3, 3, vec![]).is_err());
        assert!(Image::new(1, 1, 2, vec![0.0; 2]).is_err());
        let raw = Image::filled(2, 2, 1, 10.0).unwrap();
        assert!(preprocess_image(&raw, 0).is_err());
    }

    #[test]
    fn loads_binary_ppm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ppm");
        let mut bytes = b"P6\n# test\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 128, 255]);
        std::fs::write(&path, bytes).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.height, img.width, img.channels), (1, 2, 3));
        assert_eq!(img.pixels, vec![255.0, 0.0, 0.0, 0.0, 128.0, 255.0]);
    }
}
