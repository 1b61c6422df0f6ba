//! Analytic test scenes and a brute-force reference renderer.
//!
//! The reference renderer shares only the rigid-body primitives with
//! [`crate::reproject`]: it resolves every output pixel independently by
//! scanning all points, which is O(HW·N) and therefore only suitable for
//! small rasters.

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, RigidTransform, Vec3};
use crate::raster::{Rgb, RgbImage};
use crate::reproject::{PseudoView, NEAR_PLANE};
use crate::rng::RandomStream;
use crate::sampler::{sample_pose, SamplerConfig};
use crate::scene::{scene_stats, unproject, DepthMap, NormalMap, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneKind {
    /// Plane `z = depth` facing the camera.
    FrontoPlane { depth: f64 },
    SlantedPlane { point: Vec3, normal: Vec3 },
    Sphere { center: Vec3, radius: f64 },
}

/// Procedural textures. Every channel value is a multiple of 1/255 so
/// textures survive 8-bit PNG storage exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Texture {
    Checkerboard { cell: usize },
    Gradient,
    Noise { seed: u64 },
}

impl Texture {
    pub fn color(&self, row: usize, col: usize, width: usize, height: usize) -> Rgb {
        let q = |v: u64| (v % 256) as f64 / 255.0;
        match *self {
            Texture::Checkerboard { cell } => {
                let cell = cell.max(1);
                let (cr, cc) = ((row / cell) as u64, (col / cell) as u64);
                if (cr + cc) % 2 == 0 {
                    [q(40 + cr * 17), q(200), q(60 + cc * 29)]
                } else {
                    [q(220), q(30 + cc * 13), q(90 + cr * 23)]
                }
            }
            Texture::Gradient => {
                let gx = (col * 255 / width.max(1)) as u64;
                let gy = (row * 255 / height.max(1)) as u64;
                [q(gx), q(gy), q((gx + gy) / 2)]
            }
            Texture::Noise { seed } => {
                let h = mix(seed ^ ((row as u64) << 32) ^ col as u64);
                [q(h), q(h >> 8), q(h >> 16)]
            }
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticScene {
    pub kind: SceneKind,
    pub texture: Texture,
}

impl AnalyticScene {
    pub fn fronto(depth: f64, texture: Texture) -> Self {
        AnalyticScene {
            kind: SceneKind::FrontoPlane { depth },
            texture,
        }
    }
}

/// Ray-casts every pixel center. Missed pixels get depth 0 (invalid).
pub fn realize(scene: &AnalyticScene, k: &CameraIntrinsics) -> (RgbImage, DepthMap, NormalMap) {
    let (w, h) = (k.width, k.height);
    let image = RgbImage::from_fn(w, h, |r, c| scene.texture.color(r, c, w, h));
    let mut depth = Vec::with_capacity(w * h);
    let mut normals = Vec::with_capacity(w * h);
    let miss = (0.0, Vec3::ZERO);
    for row in 0..h {
        for col in 0..w {
            // Ray through the pixel center with unit z, so the ray parameter is the depth.
            let dir = Vec3::new(
                (col as f64 + 0.5 - k.cx) / k.fx,
                -((row as f64 + 0.5 - k.cy) / k.fy),
                1.0,
            );
            let (d, n) = match scene.kind {
                SceneKind::FrontoPlane { depth } => (depth, Vec3::new(0.0, 0.0, -1.0)),
                SceneKind::SlantedPlane { point, normal } => {
                    let mut n = normal.normalized().unwrap_or(Vec3::new(0.0, 0.0, -1.0));
                    if n.dot(point) > 0.0 {
                        n = -n;
                    }
                    let t = n.dot(point) / n.dot(dir);
                    if t.is_finite() && t > 0.0 {
                        (t, n)
                    } else {
                        miss
                    }
                }
                SceneKind::Sphere { center, radius } => {
                    let a = dir.dot(dir);
                    let b = -2.0 * dir.dot(center);
                    let c = center.dot(center) - radius * radius;
                    let disc = b * b - 4.0 * a * c;
                    if disc < 0.0 {
                        miss
                    } else {
                        let sq = disc.sqrt();
                        let t0 = (-b - sq) / (2.0 * a);
                        let t1 = (-b + sq) / (2.0 * a);
                        let t = if t0 > 0.0 { t0 } else { t1 };
                        if t > 0.0 {
                            let n = (dir * t - center) * (1.0 / radius);
                            (t, n.normalized().unwrap_or(n))
                        } else {
                            miss
                        }
                    }
                }
            };
            depth.push(d);
            normals.push(n);
        }
    }
    (
        image,
        DepthMap {
            width: w,
            height: h,
            values: depth,
        },
        NormalMap {
            width: w,
            height: h,
            values: normals,
        },
    )
}

/// Per-pixel exhaustive z-buffer. Same culling, near-plane, floor and
/// tie-break rules as the fast renderer.
pub fn brute_force_render(
    cloud: &PointCloud,
    t: &RigidTransform,
    k: &CameraIntrinsics,
    near: f64,
) -> Result<PseudoView> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (w, h) = (k.width, k.height);
    let center = t.camera_center();
    // (row, col, depth) per point, or None when the point cannot land anywhere.
    let landing: Vec<Option<(i64, i64, f64)>> = (0..cloud.len())
        .map(|i| {
            let p = cloud.points[i];
            let to_cam = center - p;
            if cloud.normals[i].dot(to_cam) <= 0.0 {
                return None;
            }
            let q = t.apply(p);
            if q.z <= near || q.z.is_nan() {
                return None;
            }
            let u = k.cx + k.fx * q.x / q.z;
            let v = k.cy - k.fy * q.y / q.z;
            if !(u.is_finite() && v.is_finite()) {
                return None;
            }
            Some((v.floor() as i64, u.floor() as i64, q.z))
        })
        .collect();

    let mut view = PseudoView::empty(w, h);
    for row in 0..h as i64 {
        for col in 0..w as i64 {
            let mut best: Option<(usize, f64)> = None;
            for (i, l) in landing.iter().enumerate() {
                let Some((r, c, z)) = *l else { continue };
                if r != row || c != col {
                    continue;
                }
                if best.is_none_or(|(_, bz)| z < bz) {
                    best = Some((i, z));
                }
            }
            if let Some((i, z)) = best {
                let idx = row as usize * w + col as usize;
                view.image.pixels[idx] = cloud.colors[i];
                view.zbuffer[idx] = z;
                view.mask[idx] = true;
            }
        }
    }
    Ok(view)
}

/// One randomized oracle trial: analytic scene, lifted cloud and sampled pose.
#[derive(Debug, Clone)]
pub struct Trial {
    pub scene: AnalyticScene,
    pub intrinsics: CameraIntrinsics,
    pub cloud: PointCloud,
    pub transform: RigidTransform,
}

pub fn random_scene(rng: &mut RandomStream) -> AnalyticScene {
    let texture = match (rng.uniform() * 3.0) as u32 {
        0 => Texture::Checkerboard {
            cell: 1 + (rng.uniform() * 6.0) as usize,
        },
        1 => Texture::Gradient,
        _ => Texture::Noise {
            seed: rng.next_u64(),
        },
    };
    let kind = match (rng.uniform() * 3.0) as u32 {
        0 => SceneKind::FrontoPlane {
            depth: rng.uniform_range(0.5, 5.0),
        },
        1 => {
            let n = Vec3::new(
                rng.uniform_range(-0.7, 0.7),
                rng.uniform_range(-0.7, 0.7),
                -rng.uniform_range(0.4, 1.0),
            );
            SceneKind::SlantedPlane {
                point: Vec3::new(0.0, 0.0, rng.uniform_range(1.0, 4.0)),
                normal: n.normalized().expect("non-zero by construction"),
            }
        }
        _ => {
            let z = rng.uniform_range(3.0, 8.0);
            SceneKind::Sphere {
                center: Vec3::new(
                    rng.uniform_range(-0.2, 0.2) * z,
                    rng.uniform_range(-0.2, 0.2) * z,
                    z,
                ),
                radius: rng.uniform_range(0.5, 2.0),
            }
        }
    };
    AnalyticScene { kind, texture }
}

pub fn random_intrinsics(rng: &mut RandomStream, max_side: usize) -> CameraIntrinsics {
    let side = |rng: &mut RandomStream| 8 + (rng.uniform() * (max_side - 7) as f64) as usize;
    let w = side(rng).min(max_side);
    let h = side(rng).min(max_side);
    let hfov = rng.uniform_range(40f64.to_radians(), 100f64.to_radians());
    CameraIntrinsics::from_hfov(w, h, hfov).expect("valid fov by construction")
}

/// Deterministic trial keyed by `(seed, index)`. Scenes that lift to an
/// empty cloud are redrawn.
pub fn random_trial(seed: u64, index: u64, cfg: &SamplerConfig) -> Result<Trial> {
    let mut rng = RandomStream::new(seed, "oracle-trial", index);
    loop {
        let k = random_intrinsics(&mut rng, 64);
        let scene = random_scene(&mut rng);
        let (img, depth, normals) = realize(&scene, &k);
        let cloud = match unproject(&img, &depth, &normals, &k) {
            Ok(c) => c,
            Err(Error::EmptyCloud) => continue,
            Err(e) => return Err(e),
        };
        let stats = scene_stats(&cloud)?;
        let pose = sample_pose(&mut rng, &cloud, &stats, k.hfov(), cfg)?;
        return Ok(Trial {
            scene,
            intrinsics: k,
            cloud,
            transform: pose.transform,
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub seed: u64,
    pub trial: u64,
    pub detail: String,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "oracle mismatch at trial {} (reproduce with --seed {} --trials {}): {}",
            self.trial,
            self.seed,
            self.trial + 1,
            self.detail
        )
    }
}

pub type Renderer<'a> = dyn Fn(&PointCloud, &RigidTransform, &CameraIntrinsics) -> Result<PseudoView> + 'a;

/// Runs `trials` randomized trials and stops at the first mismatch.
pub fn run_equivalence_suite(
    trials: u64,
    seed: u64,
    renderer: &Renderer,
) -> Result<std::result::Result<u64, Mismatch>> {
    let cfg = SamplerConfig::default();
    for i in 0..trials {
        let trial = random_trial(seed, i, &cfg)?;
        let fast = renderer(&trial.cloud, &trial.transform, &trial.intrinsics)?;
        let slow = brute_force_render(&trial.cloud, &trial.transform, &trial.intrinsics, NEAR_PLANE)?;
        if !fast.bit_eq(&slow) {
            let differing = fast
                .mask
                .iter()
                .zip(&slow.mask)
                .zip(fast.zbuffer.iter().zip(&slow.zbuffer))
                .filter(|((a, b), (za, zb))| a != b || za.to_bits() != zb.to_bits())
                .count();
            return Ok(Err(Mismatch {
                seed,
                trial: i,
                detail: format!(
                    "{differing} differing pixels on a {}x{} {:?} scene",
                    trial.intrinsics.width, trial.intrinsics.height, trial.scene.kind
                ),
            }));
        }
    }
    Ok(Ok(trials))
}

/// Sensitivity fixture: the fast renderer with a one-pixel column offset.
pub fn off_by_one_render(
    cloud: &PointCloud,
    t: &RigidTransform,
    k: &CameraIntrinsics,
) -> Result<PseudoView> {
    let mut shifted = *k;
    shifted.cx += 1.0;
    crate::reproject::render(cloud, t, &shifted)
}
