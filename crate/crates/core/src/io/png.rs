use std::io::Cursor;
use std::path::Path;

use ::png::{BitDepth, ColorType, Decoder, Encoder, Transformations};

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Decodes any 8/16-bit PNG into RGB, dropping alpha and replicating gray.
pub fn decode_rgb(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    let err = |msg: String| Error::PngDecode {
        path: path.to_path_buf(),
        msg,
    };
    let mut decoder = Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(|e| err(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| err("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| err(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let stride = info.line_size;
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => return Err(err("unexpanded palette".into())),
    };
    let mut rgb = Vec::with_capacity(w * h * 3);
    for row in buf.chunks(stride).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            if channels < 3 {
                rgb.extend_from_slice(&[px[0]; 3]);
            } else {
                rgb.extend_from_slice(&px[..3]);
            }
        }
    }
    RgbImage::from_rgb8(w, h, &rgb)
}

pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    decode_rgb(&read_file(path)?, path)
}

fn encode(width: usize, height: usize, color: ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::PngEncode(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::PngEncode(e.to_string()))?;
        writer.finish().map_err(|e| Error::PngEncode(e.to_string()))?;
    }
    Ok(out)
}

pub fn encode_rgb(img: &RgbImage) -> Result<Vec<u8>> {
    encode(img.width, img.height, ColorType::Rgb, &img.to_rgb8())
}

/// 8-bit grayscale, 255 where the mask is set and 0 elsewhere.
pub fn encode_mask(width: usize, height: usize, mask: &[bool]) -> Result<Vec<u8>> {
    if mask.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "mask of {} for {width}x{height}",
            mask.len()
        )));
    }
    let data: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    encode(width, height, ColorType::Grayscale, &data)
}

pub fn write_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    write_file(path, &encode_rgb(img)?)
}

pub fn write_mask(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    write_file(path, &encode_mask(width, height, mask)?)
}

/// Reads a mask PNG; any non-zero gray level counts as set.
pub fn read_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let img = read_rgb(path)?;
    let mask = img.pixels.iter().map(|p| p[0] > 0.0).collect();
    Ok((img.width, img.height, mask))
}
