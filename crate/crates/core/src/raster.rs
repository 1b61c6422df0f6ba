//! Row-major float rasters.

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// H×W RGB image, row-major, channel values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            pixels: vec![[0.0; 3]; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        RgbImage {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Rgb) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Zeroes every pixel whose mask entry is false.
    pub fn masked(&self, mask: &[bool]) -> RgbImage {
        let pixels = self
            .pixels
            .iter()
            .zip(mask)
            .map(|(p, &m)| if m { *p } else { [0.0; 3] })
            .collect();
        RgbImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Quantizes to interleaved 8-bit RGB with round-to-nearest.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(quantize_u8))
            .collect()
    }

    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} bytes for a {width}x{height} RGB8 image",
                data.len()
            )));
        }
        let pixels = data
            .chunks_exact(3)
            .map(|c| [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0])
            .collect();
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }
}

#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub(crate) fn check_same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb8_round_trip_is_exact_for_quantized_values() {
        let data: Vec<u8> = (0..=255u8).cycle().take(4 * 5 * 3).collect();
        let img = RgbImage::from_rgb8(4, 5, &data).unwrap();
        assert_eq!(img.to_rgb8(), data);
    }

    #[test]
    fn masked_zeroes_off_pixels() {
        let img = RgbImage::from_fn(2, 1, |_, c| [c as f64 + 0.5; 3]);
        let m = img.masked(&[false, true]);
        assert_eq!(m.pixels, vec![[0.0; 3], [1.5; 3]]);
    }
}
