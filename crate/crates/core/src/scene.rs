//! Lifting depth + normals into a metric point cloud, and the scene
//! statistics consumed by the pose sampler.

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Vec3};
use crate::raster::{Rgb, RgbImage};

const NORMAL_TOL: f64 = 1e-3;

/// Per-pixel metric depth in meters. Non-finite or non-positive entries are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} depth values for {width}x{height}",
                values.len()
            )));
        }
        Ok(DepthMap {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Self {
        DepthMap {
            width,
            height,
            values: vec![depth; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn is_valid_at(&self, row: usize, col: usize) -> bool {
        is_valid_depth(self.get(row, col))
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&d| is_valid_depth(d)).count()
    }
}

#[inline]
pub fn is_valid_depth(d: f64) -> bool {
    d.is_finite() && d > 0.0
}

/// Per-pixel unit normals in the camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Vec3>,
}

impl NormalMap {
    pub fn new(width: usize, height: usize, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} normals for {width}x{height}",
                values.len()
            )));
        }
        Ok(NormalMap {
            width,
            height,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, n: Vec3) -> Self {
        NormalMap {
            width,
            height,
            values: vec![n; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Vec3 {
        self.values[row * self.width + col]
    }
}

/// Structure-of-arrays point cloud in the source camera frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub colors: Vec<Rgb>,
    /// `(row, col)` of the source pixel each point came from.
    pub pixel_index: Vec<(u32, u32)>,
}

impl PointCloud {
    pub fn with_capacity(n: usize) -> Self {
        PointCloud {
            points: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            colors: Vec::with_capacity(n),
            pixel_index: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, p: Vec3, n: Vec3, color: Rgb, pixel: (u32, u32)) {
        self.points.push(p);
        self.normals.push(n);
        self.colors.push(color);
        self.pixel_index.push(pixel);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneStats {
    /// Population standard deviation per axis.
    pub sigma: Vec3,
    pub min_z: f64,
    pub centroid: Vec3,
}

/// Lifts every valid-depth pixel to a 3D point through its pixel center.
pub fn unproject(
    image: &RgbImage,
    depth: &DepthMap,
    normals: &NormalMap,
    k: &CameraIntrinsics,
) -> Result<PointCloud> {
    let (w, h) = (k.width, k.height);
    if image.dims() != (w, h)
        || (depth.width, depth.height) != (w, h)
        || (normals.width, normals.height) != (w, h)
    {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{}, depth {}x{}, normals {}x{}, intrinsics {w}x{h}",
            image.width, image.height, depth.width, depth.height, normals.width, normals.height
        )));
    }
    let mut cloud = PointCloud::with_capacity(depth.valid_count());
    for row in 0..h {
        let dy = row as f64 + 0.5 - k.cy;
        for col in 0..w {
            let z = depth.get(row, col);
            if !is_valid_depth(z) {
                continue;
            }
            let n = normals.get(row, col);
            if !n.is_finite() || (n.norm() - 1.0).abs() > NORMAL_TOL {
                return Err(Error::InvalidNormal { row, col });
            }
            let dx = col as f64 + 0.5 - k.cx;
            let p = Vec3::new(dx * z / k.fx, -(dy * z / k.fy), z);
            cloud.push(p, n, image.get(row, col), (row as u32, col as u32));
        }
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(cloud)
}

/// Pinhole projection to continuous pixel coordinates `(u, v)`.
#[inline]
pub fn project(p: Vec3, k: &CameraIntrinsics) -> Result<(f64, f64)> {
    if !(p.z > 0.0) {
        return Err(Error::BehindCamera(p.z));
    }
    Ok(project_unchecked(p, k))
}

#[inline]
pub(crate) fn project_unchecked(p: Vec3, k: &CameraIntrinsics) -> (f64, f64) {
    (k.cx + k.fx * p.x / p.z, k.cy - k.fy * p.y / p.z)
}

pub fn scene_stats(cloud: &PointCloud) -> Result<SceneStats> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let n = cloud.len() as f64;
    let mut sum = Vec3::ZERO;
    let mut min_z = f64::INFINITY;
    for p in &cloud.points {
        sum = sum + *p;
        min_z = min_z.min(p.z);
    }
    let centroid = sum * (1.0 / n);
    let mut var = Vec3::ZERO;
    for p in &cloud.points {
        let d = *p - centroid;
        var = var + Vec3::new(d.x * d.x, d.y * d.y, d.z * d.z);
    }
    let var = var * (1.0 / n);
    Ok(SceneStats {
        sigma: Vec3::new(var.x.sqrt(), var.y.sqrt(), var.z.sqrt()),
        min_z,
        centroid,
    })
}
