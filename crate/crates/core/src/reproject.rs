//! Z-buffered point reprojection into a target camera.

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, RigidTransform, Vec3};
use crate::raster::RgbImage;
use crate::sampler::{SampledPose, Strategy};
use crate::scene::{project_unchecked, unproject, DepthMap, NormalMap, PointCloud};

/// Default near-plane distance in meters.
pub const NEAR_PLANE: f64 = 1e-3;

/// Rendered pseudo-target: image, visibility mask and depth buffer.
///
/// Pixels with `mask == false` are black and carry `+inf` depth.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoView {
    pub image: RgbImage,
    pub mask: Vec<bool>,
    pub zbuffer: Vec<f64>,
}

impl PseudoView {
    pub fn empty(width: usize, height: usize) -> Self {
        PseudoView {
            image: RgbImage::new(width, height),
            mask: vec![false; width * height],
            zbuffer: vec![f64::INFINITY; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }

    pub fn coverage(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Checks the mask/image/depth consistency contract.
    pub fn check_consistency(&self, near: f64) -> std::result::Result<(), String> {
        for (i, ((&m, px), &z)) in self.mask.iter().zip(&self.image.pixels).zip(&self.zbuffer).enumerate() {
            if m {
                if !(z.is_finite() && z >= near) {
                    return Err(format!("pixel {i}: mask set but depth {z}"));
                }
            } else if *px != [0.0; 3] || z != f64::INFINITY {
                return Err(format!("pixel {i}: mask clear but color {px:?}, depth {z}"));
            }
        }
        Ok(())
    }

    /// Bitwise equality, treating float fields by bit pattern.
    pub fn bit_eq(&self, other: &PseudoView) -> bool {
        self.image.dims() == other.image.dims()
            && self.mask == other.mask
            && self
                .zbuffer
                .iter()
                .zip(&other.zbuffer)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self
                .image
                .pixels
                .iter()
                .zip(&other.image.pixels)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
    }
}

/// True iff the surface faces the camera: `n · (c - p) > 0`.
#[inline]
pub fn backface_visible(n: Vec3, p: Vec3, cam_center: Vec3) -> bool {
    n.dot(cam_center - p) > 0.0
}

pub fn render(cloud: &PointCloud, t: &RigidTransform, k: &CameraIntrinsics) -> Result<PseudoView> {
    render_with_near(cloud, t, k, NEAR_PLANE)
}

/// Points are visited in index order; a point wins a pixel only with a
/// strictly smaller depth, so ties go to the lower index.
pub fn render_with_near(
    cloud: &PointCloud,
    t: &RigidTransform,
    k: &CameraIntrinsics,
    near: f64,
) -> Result<PseudoView> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (w, h) = (k.width, k.height);
    let mut view = PseudoView::empty(w, h);
    let center = t.camera_center();
    for i in 0..cloud.len() {
        let p = cloud.points[i];
        if !backface_visible(cloud.normals[i], p, center) {
            continue;
        }
        let q = t.apply(p);
        if !(q.z > near) {
            continue;
        }
        let (u, v) = project_unchecked(q, k);
        let (col, row) = (u.floor(), v.floor());
        if !(col >= 0.0 && row >= 0.0 && col < w as f64 && row < h as f64) {
            continue;
        }
        let idx = row as usize * w + col as usize;
        if q.z < view.zbuffer[idx] {
            view.zbuffer[idx] = q.z;
            view.image.pixels[idx] = cloud.colors[i];
            view.mask[idx] = true;
        }
    }
    Ok(view)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairMetadata {
    pub transform: RigidTransform,
    pub intrinsics: CameraIntrinsics,
    pub strategy: Strategy,
    pub fell_back: bool,
}

/// Lift, then render from the sampled pose.
pub fn render_pair(
    image: &RgbImage,
    depth: &DepthMap,
    normals: &NormalMap,
    k: &CameraIntrinsics,
    pose: &SampledPose,
) -> Result<(PseudoView, PairMetadata)> {
    let cloud = unproject(image, depth, normals, k)?;
    let view = render(&cloud, &pose.transform, k)?;
    Ok((
        view,
        PairMetadata {
            transform: pose.transform,
            intrinsics: *k,
            strategy: pose.strategy,
            fell_back: pose.fell_back,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::intrinsics_from_hfov;

    #[test]
    fn backface_cases() {
        let p = Vec3::new(0.0, 0.0, 2.0);
        assert!(backface_visible(Vec3::new(0.0, 0.0, -1.0), p, Vec3::ZERO));
        assert!(!backface_visible(Vec3::new(0.0, 0.0, 1.0), p, Vec3::ZERO));
        assert!(!backface_visible(Vec3::X, p, Vec3::ZERO));
    }

    fn two_point_cloud(first_depth: f64, second_depth: f64) -> PointCloud {
        let mut c = PointCloud::default();
        let n = Vec3::new(0.0, 0.0, -1.0);
        c.push(Vec3::new(0.0, 0.0, first_depth), n, [1.0, 0.0, 0.0], (0, 0));
        c.push(Vec3::new(0.0, 0.0, second_depth), n, [0.0, 1.0, 0.0], (0, 1));
        c
    }

    #[test]
    fn nearest_point_wins() {
        let k = intrinsics_from_hfov(3, 3, 1.0).unwrap();
        for (a, b) in [(1.0, 2.0), (2.0, 1.0)] {
            let v = render(&two_point_cloud(a, b), &RigidTransform::IDENTITY, &k).unwrap();
            let center = 4;
            assert_eq!(v.zbuffer[center], 1.0);
            let expected = if a < b { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            assert_eq!(v.image.pixels[center], expected);
            assert_eq!(v.coverage(), 1);
            v.check_consistency(NEAR_PLANE).unwrap();
        }
    }

    #[test]
    fn depth_ties_keep_lower_index() {
        let k = intrinsics_from_hfov(3, 3, 1.0).unwrap();
        let v = render(&two_point_cloud(1.5, 1.5), &RigidTransform::IDENTITY, &k).unwrap();
        assert_eq!(v.image.pixels[4], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn near_plane_and_frame_culling() {
        let k = intrinsics_from_hfov(3, 3, 1.0).unwrap();
        let mut c = PointCloud::default();
        let n = Vec3::new(0.0, 0.0, -1.0);
        c.push(Vec3::new(0.0, 0.0, NEAR_PLANE), n, [1.0; 3], (0, 0));
        c.push(Vec3::new(100.0, 0.0, 1.0), Vec3::new(-1.0, 0.0, 0.0), [1.0; 3], (0, 1));
        let v = render(&c, &RigidTransform::IDENTITY, &k).unwrap();
        assert_eq!(v.coverage(), 0);
        assert!(matches!(
            render(&PointCloud::default(), &RigidTransform::IDENTITY, &k),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn flipped_normals_cull_everything() {
        let k = intrinsics_from_hfov(8, 8, 1.0).unwrap();
        let img = RgbImage::from_fn(8, 8, |r, c| [r as f64 / 8.0, c as f64 / 8.0, 1.0]);
        let d = DepthMap::constant(8, 8, 2.0);
        let n = NormalMap::constant(8, 8, Vec3::Z);
        let pose = SampledPose { transform: RigidTransform::IDENTITY, strategy: Strategy::Identity, fell_back: false };
        let (v, meta) = render_pair(&img, &d, &n, &k, &pose).unwrap();
        assert_eq!(v.coverage(), 0);
        assert!(v.image.pixels.iter().all(|p| *p == [0.0; 3]));
        assert_eq!(meta.strategy, Strategy::Identity);
    }

    #[test]
    fn identity_reproduces_source() {
        let k = intrinsics_from_hfov(17, 11, 1.1).unwrap();
        let img = RgbImage::from_fn(17, 11, |r, c| [r as f64 / 11.0, c as f64 / 17.0, 0.25]);
        let d = DepthMap::new(17, 11, (0..17 * 11).map(|i| 1.0 + (i % 7) as f64 * 0.3).collect()).unwrap();
        let n = NormalMap::constant(17, 11, Vec3::new(0.0, 0.0, -1.0));
        let pose = SampledPose { transform: RigidTransform::IDENTITY, strategy: Strategy::Identity, fell_back: false };
        let (v, _) = render_pair(&img, &d, &n, &k, &pose).unwrap();
        assert!(v.mask.iter().all(|&m| m));
        assert_eq!(v.image, img);
        assert_eq!(v.zbuffer, d.values);
    }

    #[test]
    fn pulled_back_camera_shrinks_footprint() {
        // Plane at depth 2, camera backs up 1 m: footprint half-width scales by 2/3.
        let (w, h) = (96, 96);
        let k = intrinsics_from_hfov(w, h, 1.2).unwrap();
        let img = RgbImage::from_fn(w, h, |_, _| [1.0; 3]);
        let d = DepthMap::constant(w, h, 2.0);
        let n = NormalMap::constant(w, h, Vec3::new(0.0, 0.0, -1.0));
        let pose = SampledPose {
            transform: RigidTransform::from_translation(Vec3::new(0.0, 0.0, 1.0)),
            strategy: Strategy::Translation,
            fell_back: false,
        };
        let (v, _) = render_pair(&img, &d, &n, &k, &pose).unwrap();
        let mid_row = &v.mask[(h / 2) * w..(h / 2 + 1) * w];
        let covered = mid_row.iter().filter(|&&m| m).count() as f64;
        let expected = w as f64 * 2.0 / 3.0;
        assert!((covered - expected).abs() <= 2.0, "{covered} vs {expected}");
        assert!(!v.mask[0] && !v.mask[w - 1]);
        assert!(v.mask[(h / 2) * w + w / 2]);
        v.check_consistency(NEAR_PLANE).unwrap();
    }
}
