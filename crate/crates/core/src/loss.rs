//! Masked reconstruction and feature losses.
//!
//! Every reconstruction loss is a masked mean: the per-element penalty is
//! summed over masked-on pixels and all three channels, then divided by
//! `3·|mask| + epsilon`.

use crate::error::{Error, Result};
use crate::raster::RgbImage;

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_CHARBONNIER_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct MaskedImagePair<'a> {
    pub prediction: &'a RgbImage,
    pub target: &'a RgbImage,
    pub mask: &'a [bool],
}

impl<'a> MaskedImagePair<'a> {
    pub fn new(prediction: &'a RgbImage, target: &'a RgbImage, mask: &'a [bool]) -> Result<Self> {
        if prediction.dims() != target.dims() || mask.len() != target.pixels.len() {
            return Err(Error::DimensionMismatch(format!(
                "prediction {}x{}, target {}x{}, mask {}",
                prediction.width,
                prediction.height,
                target.width,
                target.height,
                mask.len()
            )));
        }
        Ok(MaskedImagePair {
            prediction,
            target,
            mask,
        })
    }

    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn masked_mean(&self, epsilon: f64, penalty: impl Fn(f64) -> f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for ((p, t), &m) in self
            .prediction
            .pixels
            .iter()
            .zip(&self.target.pixels)
            .zip(self.mask)
        {
            if !m {
                continue;
            }
            count += 1;
            for c in 0..3 {
                sum += penalty(p[c] - t[c]);
            }
        }
        sum / (3.0 * count as f64 + epsilon)
    }
}

pub fn masked_mse(pair: &MaskedImagePair, epsilon: f64) -> f64 {
    pair.masked_mean(epsilon, |d| d * d)
}

pub fn masked_l1(pair: &MaskedImagePair, epsilon: f64) -> f64 {
    pair.masked_mean(epsilon, f64::abs)
}

/// `sqrt(d² + eps_c²) - eps_c`, zero at `d = 0`.
pub fn masked_charbonnier(pair: &MaskedImagePair, epsilon: f64, eps_c: f64) -> f64 {
    let e2 = eps_c * eps_c;
    pair.masked_mean(epsilon, |d| (d * d + e2).sqrt() - eps_c)
}

/// Analytic gradient of [`masked_mse`] with respect to the prediction:
/// `2·M⊙(pred − target) / (3·|M| + ε)`.
pub fn masked_mse_grad(pair: &MaskedImagePair, epsilon: f64) -> RgbImage {
    let denom = 3.0 * pair.mask_count() as f64 + epsilon;
    let pixels = pair
        .prediction
        .pixels
        .iter()
        .zip(&pair.target.pixels)
        .zip(pair.mask)
        .map(|((p, t), &m)| {
            if m {
                [0, 1, 2].map(|c| 2.0 * (p[c] - t[c]) / denom)
            } else {
                [0.0; 3]
            }
        })
        .collect();
    RgbImage {
        width: pair.target.width,
        height: pair.target.height,
        pixels,
    }
}

/// Stand-in for a pretrained feature network.
pub trait FeatureExtractor: Sync {
    fn extract(&self, image: &RgbImage) -> Vec<f64>;
}

/// Flattens the raster into its channel values.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlattenExtractor;

impl FeatureExtractor for FlattenExtractor {
    fn extract(&self, image: &RgbImage) -> Vec<f64> {
        image.pixels.iter().flatten().copied().collect()
    }
}

/// `1 − cos(F(M⊙pred), F(M⊙target))`, masking at native resolution before extraction.
pub fn masked_feature_cosine(pair: &MaskedImagePair, extractor: &dyn FeatureExtractor) -> Result<f64> {
    let a = extractor.extract(&pair.prediction.masked(pair.mask));
    let b = extractor.extract(&pair.target.masked(pair.mask));
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "feature lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let sa = a.iter().map(|v| v * v).sum::<f64>();
    let sb = b.iter().map(|v| v * v).sum::<f64>();
    if !(sa.sqrt() >= 1e-12 && sb.sqrt() >= 1e-12) {
        return Err(Error::ZeroFeature);
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let cos = (dot / (sa * sb).sqrt()).clamp(-1.0, 1.0);
    Ok(1.0 - cos)
}
