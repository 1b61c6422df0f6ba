//! Portable Float Map.
//!
//! Header is three whitespace-separated tokens lines: `PF` (RGB) or `Pf`
//! (single channel), `<width> <height>`, and a scale whose sign gives the
//! byte order (negative: little-endian). A single whitespace byte follows
//! the scale, then raw `f32` samples with rows stored bottom-to-top.
//! [`Pfm::data`] is always top-to-bottom.

use std::path::Path;

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::{DepthMap, NormalMap};

#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    /// 1 or 3.
    pub channels: usize,
    /// Row-major, top row first, channels interleaved.
    pub data: Vec<f32>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Pfm("truncated header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Pfm("non-ASCII header".into()))
    }
}

impl Pfm {
    pub fn decode(bytes: &[u8]) -> Result<Pfm> {
        let mut cur = Cursor { bytes, pos: 0 };
        let channels = match cur.token()? {
            "PF" => 3,
            "Pf" => 1,
            other => return Err(Error::Pfm(format!("bad magic {other:?}"))),
        };
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::Pfm(format!("bad dimension {s:?}")))
        };
        let width = parse_dim(cur.token()?)?;
        let height = parse_dim(cur.token()?)?;
        let scale: f64 = cur
            .token()?
            .parse()
            .map_err(|_| Error::Pfm("bad scale".into()))?;
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Pfm(format!("scale {scale} gives no byte order")));
        }
        let little = scale < 0.0;
        // Exactly one whitespace byte separates the header from the data.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::Pfm("missing header terminator".into()));
        }
        let body = &bytes[cur.pos + 1..];
        let row_len = width * channels;
        let expected = row_len
            .checked_mul(height)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Pfm("dimensions overflow".into()))?;
        if body.len() != expected {
            return Err(Error::Pfm(format!(
                "expected {expected} data bytes, found {}",
                body.len()
            )));
        }
        let samples: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                }
            })
            .collect();
        let mut data = Vec::with_capacity(samples.len());
        for row in samples.chunks_exact(row_len).rev() {
            data.extend_from_slice(row);
        }
        Ok(Pfm {
            width,
            height,
            channels,
            data,
        })
    }

    /// Little-endian with scale `-1.0`.
    pub fn encode(&self) -> Result<Vec<u8>> {
        let magic = match self.channels {
            1 => "Pf",
            3 => "PF",
            c => return Err(Error::Pfm(format!("unsupported channel count {c}"))),
        };
        let row_len = self.width * self.channels;
        if self.data.len() != row_len * self.height {
            return Err(Error::Pfm("data length does not match dimensions".into()));
        }
        let mut out = format!("{magic}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 4);
        for row in self.data.chunks_exact(row_len).rev() {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Pfm> {
        Pfm::decode(&read_file(path)?).map_err(|e| match e {
            Error::Pfm(msg) => Error::Pfm(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.encode()?)
    }

    pub fn from_depth(d: &DepthMap) -> Pfm {
        Pfm {
            width: d.width,
            height: d.height,
            channels: 1,
            data: d.values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_normals(n: &NormalMap) -> Pfm {
        Pfm {
            width: n.width,
            height: n.height,
            channels: 3,
            data: n
                .values
                .iter()
                .flat_map(|v| [v.x as f32, v.y as f32, v.z as f32])
                .collect(),
        }
    }

    pub fn into_depth(self) -> Result<DepthMap> {
        if self.channels != 1 {
            return Err(Error::Pfm("depth must be single channel (Pf)".into()));
        }
        DepthMap::new(self.width, self.height, self.data.into_iter().map(f64::from).collect())
    }

    pub fn into_normals(self) -> Result<NormalMap> {
        if self.channels != 3 {
            return Err(Error::Pfm("normals must be three channel (PF)".into()));
        }
        let values = self
            .data
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64))
            .collect();
        NormalMap::new(self.width, self.height, values)
    }
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    Pfm::read(path)?.into_depth()
}

pub fn read_normals(path: &Path) -> Result<NormalMap> {
    Pfm::read(path)?.into_normals()
}

pub fn write_depth(path: &Path, d: &DepthMap) -> Result<()> {
    Pfm::from_depth(d).write(path)
}

pub fn write_normals(path: &Path, n: &NormalMap) -> Result<()> {
    Pfm::from_normals(n).write(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_layout_of_a_tiny_depth_map() {
        // 2x2, top row [1, 2], bottom row [3, 4]: stored bottom row first.
        let p = Pfm { width: 2, height: 2, channels: 1, data: vec![1.0, 2.0, 3.0, 4.0] };
        let bytes = p.encode().unwrap();
        let header = b"Pf\n2 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        let body: Vec<f32> = bytes[header.len()..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        assert_eq!(body, vec![3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn big_endian_and_loose_whitespace() {
        let mut bytes = b"PF  1\t1\n1.0 ".to_vec();
        for v in [0.5f32, -0.25, 1.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let p = Pfm::decode(&bytes).unwrap();
        assert_eq!((p.width, p.height, p.channels), (1, 1, 3));
        assert_eq!(p.data, vec![0.5, -0.25, 1.0]);
        let n = p.into_normals().unwrap();
        assert_eq!(n.values[0], Vec3::new(0.5, -0.25, 1.0));
    }

    #[test]
    fn malformed_inputs() {
        assert!(Pfm::decode(b"P6\n1 1\n-1\n").is_err());
        assert!(Pfm::decode(b"Pf\n1 1\n0\n\0\0\0\0").is_err());
        assert!(Pfm::decode(b"Pf\n2 1\n-1\n\0\0\0\0").is_err());
        assert!(Pfm::decode(b"Pf\n0 1\n-1\n").is_err());
        assert!(Pfm::decode(b"Pf\n1 1").is_err());
        let rgb = Pfm { width: 1, height: 1, channels: 3, data: vec![0.0; 3] };
        assert!(rgb.into_depth().is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(
            w in 1usize..8,
            h in 1usize..8,
            three in any::<bool>(),
            seed in any::<u32>(),
        ) {
            let channels = if three { 3 } else { 1 };
            let data: Vec<f32> = (0..w * h * channels)
                .map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 7919) & 0x7f7f_ffff))
                .collect();
            let p = Pfm { width: w, height: h, channels, data };
            let back = Pfm::decode(&p.encode().unwrap()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
