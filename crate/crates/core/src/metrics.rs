//! PSNR / SSIM and the per-scene scale sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{check_same_dims, RgbImage};

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_same_dims(a, b)?;
    let n = (a.pixels.len() * 3) as f64;
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]) * (p[c] - q[c])))
        .sum();
    Ok(sum / n)
}

/// `10·log10(max² / MSE)` over all channels, capped at [`PSNR_CAP`].
pub fn psnr(a: &RgbImage, b: &RgbImage, max_val: f64) -> Result<f64> {
    if !(max_val > 0.0) {
        return Err(Error::InvalidRange(max_val, max_val));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (max_val * max_val / m).log10()).min(PSNR_CAP))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Valid-mode separable Gaussian filter of a single plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for r in 0..h {
        let row = &plane[r * w..(r + 1) * w];
        for c in 0..ow {
            horiz[r * ow + c] = k.iter().zip(&row[c..c + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..SSIM_WINDOW).map(|i| k[i] * horiz[(r + i) * ow + c]).sum();
        }
    }
    out
}

/// Mean SSIM: 11×11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 1, valid window positions only, averaged over channels.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_same_dims(a, b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let k = gaussian_kernel();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for ch in 0..3 {
        let pa: Vec<f64> = a.pixels.iter().map(|p| p[ch]).collect();
        let pb: Vec<f64> = b.pixels.iter().map(|p| p[ch]).collect();
        let paa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let pbb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let pab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(&pa, w, h, &k);
        let mu_b = filter_valid(&pb, w, h, &k);
        let e_aa = filter_valid(&paa, w, h, &k);
        let e_bb = filter_valid(&pbb, w, h, &k);
        let e_ab = filter_valid(&pab, w, h, &k);
        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            sum += num / den;
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / 3.0)
}

/// Grid scale with the highest score; ties resolve to the smallest scale.
/// NaN scores never win.
pub fn scale_sweep(evaluate: impl Fn(f64) -> f64, grid: &[f64]) -> Result<(f64, f64)> {
    let scored: Vec<(f64, f64)> = grid.iter().map(|&s| (s, evaluate(s))).collect();
    best_of(&scored)
}

/// Argmax over precomputed `(scale, score)` pairs with the sweep's tie rule.
pub fn best_of(scored: &[(f64, f64)]) -> Result<(f64, f64)> {
    let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut it = scored.iter();
    let mut best = *it.next().ok_or(Error::EmptyGrid)?;
    for &(s, v) in it {
        if key(v) > key(best.1) || (key(v) == key(best.1) && s < best.0) {
            best = (s, v);
        }
    }
    Ok(best)
}

/// 25 geometrically spaced scales from 0.25 to 4.0; contains 1.0 exactly.
pub fn default_grid() -> Vec<f64> {
    (0..25).map(|i| 2f64.powf((i as f64 - 12.0) / 6.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame_id: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub per_frame: Vec<FrameMetrics>,
    pub best_scale: f64,
}

impl MetricReport {
    pub fn from_frames(per_frame: Vec<FrameMetrics>, best_scale: f64) -> Self {
        let n = per_frame.len().max(1) as f64;
        MetricReport {
            psnr: per_frame.iter().map(|f| f.psnr).sum::<f64>() / n,
            ssim: per_frame.iter().map(|f| f.ssim).sum::<f64>() / n,
            per_frame,
            best_scale,
        }
    }
}
