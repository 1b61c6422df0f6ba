//! Relative camera pose sampling.
//!
//! Six strategies are mixed by fixed prior weights: identity, pure
//! translation, pure rotation, combined rotation and translation,
//! normal-derived, and frontal hemisphere. All of them return a
//! world-to-camera extrinsic relative to the source camera, with distances
//! in the metric units of the lifted point cloud.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{look_at, look_basis, RigidTransform, RotationMatrix, Vec3};
use crate::rng::RandomStream;
use crate::scene::{PointCloud, SceneStats};

/// Retry budget for draws that hit a degenerate look-at.
pub const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub prob_identity: f64,
    pub prob_translation: f64,
    pub prob_rotation: f64,
    pub prob_combined: f64,
    pub prob_normal_derived: f64,
    pub prob_frontal: f64,
    /// Translation scaling factor.
    pub alpha_t: f64,
    /// Rotation scaling factor (fraction of the horizontal FOV).
    pub alpha_r: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Max azimuth/elevation perturbation, radians.
    pub delta: f64,
    /// Anchor jitter scale, relative to the anchor distance.
    pub sigma_anchor: f64,
    /// Normal filter: anchors need `|n_y| < tau`.
    pub tau: f64,
    /// Minimum depth kept in front of the camera, meters.
    pub eps_near: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            prob_identity: 0.15,
            prob_translation: 0.10,
            prob_rotation: 0.10,
            prob_combined: 0.35,
            prob_normal_derived: 0.05,
            prob_frontal: 0.25,
            alpha_t: 1.0,
            alpha_r: 1.0,
            d_min: 0.75,
            d_max: 1.5,
            delta: 25f64.to_radians(),
            sigma_anchor: 0.02,
            tau: 0.5,
            eps_near: 1e-3,
        }
    }
}

impl SamplerConfig {
    /// Config that always routes to one strategy.
    pub fn only(strategy: Strategy) -> Self {
        let mut cfg = SamplerConfig::default();
        let mut probs = [0.0; 6];
        probs[strategy as usize] = 1.0;
        cfg.set_probabilities(probs);
        cfg
    }

    /// In [`Strategy::ALL`] order.
    pub fn probabilities(&self) -> [f64; 6] {
        [
            self.prob_identity,
            self.prob_translation,
            self.prob_rotation,
            self.prob_combined,
            self.prob_normal_derived,
            self.prob_frontal,
        ]
    }

    pub fn set_probabilities(&mut self, p: [f64; 6]) {
        self.prob_identity = p[0];
        self.prob_translation = p[1];
        self.prob_rotation = p[2];
        self.prob_combined = p[3];
        self.prob_normal_derived = p[4];
        self.prob_frontal = p[5];
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let probs = self.probabilities();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad(format!("probabilities must be finite and non-negative: {probs:?}"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return bad(format!("probabilities sum to {sum}, expected 1"));
        }
        if !(self.alpha_t.is_finite() && self.alpha_t >= 0.0) {
            return bad(format!("alpha_t = {}", self.alpha_t));
        }
        if !(self.alpha_r.is_finite() && self.alpha_r >= 0.0) {
            return bad(format!("alpha_r = {}", self.alpha_r));
        }
        if !(self.d_min > 0.0 && self.d_min <= self.d_max && self.d_max.is_finite()) {
            return bad(format!("distance range [{}, {}]", self.d_min, self.d_max));
        }
        if !(self.delta >= 0.0 && self.delta < PI / 2.0) {
            return bad(format!("delta = {} rad must lie in [0, pi/2)", self.delta));
        }
        if !(self.sigma_anchor >= 0.0 && self.sigma_anchor.is_finite()) {
            return bad(format!("sigma_anchor = {}", self.sigma_anchor));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau = {} must lie in (0, 1]", self.tau));
        }
        if !(self.eps_near > 0.0 && self.eps_near.is_finite()) {
            return bad(format!("eps_near = {}", self.eps_near));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Identity = 0,
    Translation = 1,
    Rotation = 2,
    Combined = 3,
    NormalDerived = 4,
    FrontalHemisphere = 5,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Identity,
        Strategy::Translation,
        Strategy::Rotation,
        Strategy::Combined,
        Strategy::NormalDerived,
        Strategy::FrontalHemisphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Identity => "identity",
            Strategy::Translation => "translation",
            Strategy::Rotation => "rotation",
            Strategy::Combined => "combined",
            Strategy::NormalDerived => "normal_derived",
            Strategy::FrontalHemisphere => "frontal_hemisphere",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledPose {
    pub transform: RigidTransform,
    pub strategy: Strategy,
    /// Set when normal-derived sampling found no usable anchor.
    pub fell_back: bool,
}

impl SampledPose {
    fn new(transform: RigidTransform, strategy: Strategy) -> Self {
        SampledPose {
            transform,
            strategy,
            fell_back: false,
        }
    }
}

/// `exp(U(ln a, ln b))`, clamped into `[a, b]`.
pub fn log_uniform(rng: &mut RandomStream, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return Err(Error::InvalidRange(a, b));
    }
    let u = rng.uniform();
    if a == b {
        return Ok(a);
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((la + (lb - la) * u).exp().clamp(a, b))
}

/// Draws an index with probability proportional to `1/‖p‖` among points
/// with `‖p‖ >= eps_near` that also pass `keep`. `None` when nothing qualifies.
fn sample_inverse_norm(
    rng: &mut RandomStream,
    cloud: &PointCloud,
    eps_near: f64,
    keep: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut weights = Vec::with_capacity(cloud.len());
    let mut total = 0.0;
    for (i, p) in cloud.points.iter().enumerate() {
        let r = p.norm();
        if r >= eps_near && keep(i) {
            total += 1.0 / r;
            weights.push((i, total));
        }
    }
    // Consume the draw even when empty so stream positions stay aligned.
    let u = rng.uniform();
    let &(last, _) = weights.last()?;
    let target = u * total;
    let pos = weights.partition_point(|&(_, acc)| acc <= target);
    Some(weights.get(pos).map_or(last, |&(i, _)| i))
}

/// Anchor index with probability `∝ 1/‖p‖`, excluding points closer than `eps_near`.
pub fn sample_anchor(rng: &mut RandomStream, cloud: &PointCloud, eps_near: f64) -> Result<usize> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    sample_inverse_norm(rng, cloud, eps_near, |_| true).ok_or(Error::EmptyCloud)
}

/// Largest camera-center z displacement that keeps every depth `>= eps_near`
/// after `z - d`, exact under floating point.
fn max_forward_displacement(min_z: f64, eps_near: f64) -> f64 {
    let mut bound = min_z - eps_near;
    while min_z - bound < eps_near {
        bound = bound.next_down();
    }
    bound
}

/// Pure translation. The camera center moves by `d ~ U[-α_t σ, α_t σ]` per
/// axis with `d.z` clamped so no point passes the near plane; the extrinsic
/// translation is `-d`.
pub fn sample_translation(
    rng: &mut RandomStream,
    stats: &SceneStats,
    cfg: &SamplerConfig,
) -> RigidTransform {
    let s = stats.sigma * cfg.alpha_t;
    let dx = rng.uniform_range(-s.x, s.x);
    let dy = rng.uniform_range(-s.y, s.y);
    let dz = rng.uniform_range(-s.z, s.z);
    let dz = dz.min(max_forward_displacement(stats.min_z, cfg.eps_near));
    RigidTransform::from_translation(-Vec3::new(dx, dy, dz))
}

/// Rotation turning the optical axis to polar angle `theta`, azimuth `phi`,
/// with the look-at basis fixing roll.
pub fn rotation_from_angles(theta: f64, phi: f64) -> Result<RigidTransform> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let forward = Vec3::new(st * cp, st * sp, ct);
    let (r, u, f) = look_basis(forward)?;
    Ok(RigidTransform::from_rotation(RotationMatrix::from_rows_unchecked(r, u, f)))
}

/// Pure rotation with polar angle bounded by `α_r · hfov`.
pub fn sample_rotation(rng: &mut RandomStream, hfov: f64, cfg: &SamplerConfig) -> RigidTransform {
    let cap = cfg.alpha_r * hfov;
    for _ in 0..MAX_ATTEMPTS {
        let theta = rng.uniform_range(0.0, cap);
        let phi = rng.uniform_range(0.0, TAU);
        if let Ok(t) = rotation_from_angles(theta, phi) {
            return t;
        }
    }
    RigidTransform::IDENTITY
}

/// Independent rotation and translation draws composed as `[R_r | R_r t_t]`.
pub fn sample_combined(
    rng: &mut RandomStream,
    stats: &SceneStats,
    hfov: f64,
    cfg: &SamplerConfig,
) -> RigidTransform {
    let translation = sample_translation(rng, stats, cfg);
    let rotation = sample_rotation(rng, hfov, cfg);
    combine(&rotation.rotation, translation.translation)
}

pub fn combine(rotation: &RotationMatrix, t_translation: Vec3) -> RigidTransform {
    RigidTransform::new(*rotation, rotation.mul_vec(t_translation))
}

/// Camera at `p + s·n` looking back at `p`.
pub fn normal_view(anchor: Vec3, normal: Vec3, distance: f64) -> Result<RigidTransform> {
    look_at(anchor + normal * distance, anchor)
}

pub fn sample_normal_derived(
    rng: &mut RandomStream,
    cloud: &PointCloud,
    cfg: &SamplerConfig,
) -> Result<SampledPose> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let fallback = SampledPose {
        transform: RigidTransform::IDENTITY,
        strategy: Strategy::NormalDerived,
        fell_back: true,
    };
    for _ in 0..MAX_ATTEMPTS {
        let Some(i) =
            sample_inverse_norm(rng, cloud, cfg.eps_near, |i| cloud.normals[i].y.abs() < cfg.tau)
        else {
            return Ok(fallback);
        };
        let p = cloud.points[i];
        let r = p.norm();
        let s = log_uniform(rng, cfg.d_min * r, cfg.d_max * r)?;
        if let Ok(t) = normal_view(p, cloud.normals[i], s) {
            return Ok(SampledPose::new(t, Strategy::NormalDerived));
        }
    }
    Ok(fallback)
}

/// Perturbs a unit direction by `azimuth` about its local up axis, then by
/// `elevation` toward it, in the look-at frame of the direction.
pub fn perturb_direction(dir: Vec3, azimuth: f64, elevation: f64) -> Result<Vec3> {
    let (right, up, f) = look_basis(dir)?;
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    Ok((f * ca + right * sa) * ce + up * se)
}

/// Orbit pose around a (jittered) anchor. `jitter` is added to the anchor;
/// `multiplier` scales the camera distance `‖anchor‖`.
pub fn frontal_view(
    anchor: Vec3,
    jitter: Vec3,
    azimuth: f64,
    elevation: f64,
    multiplier: f64,
) -> Result<RigidTransform> {
    let target = anchor + jitter;
    let reference = (-target).normalized().ok_or(Error::DegenerateLookAt)?;
    let dir = perturb_direction(reference, azimuth, elevation)?;
    let camera = target + dir * (anchor.norm() * multiplier);
    look_at(camera, target)
}

pub fn sample_frontal_hemisphere(
    rng: &mut RandomStream,
    cloud: &PointCloud,
    cfg: &SamplerConfig,
) -> Result<RigidTransform> {
    for _ in 0..MAX_ATTEMPTS {
        let p = cloud.points[sample_anchor(rng, cloud, cfg.eps_near)?];
        let sd = cfg.sigma_anchor * p.norm();
        let jitter = Vec3::new(rng.gaussian() * sd, rng.gaussian() * sd, rng.gaussian() * sd);
        let az = rng.uniform_range(-cfg.delta, cfg.delta);
        let el = rng.uniform_range(-cfg.delta, cfg.delta);
        let s = log_uniform(rng, cfg.d_min, cfg.d_max)?;
        if let Ok(t) = frontal_view(p, jitter, az, el, s) {
            return Ok(t);
        }
    }
    Ok(RigidTransform::IDENTITY)
}

/// Index into [`Strategy::ALL`] from a single uniform draw.
fn route(probs: &[f64; 6], u: f64) -> Strategy {
    let mut acc = 0.0;
    let mut last = Strategy::Identity;
    for (s, &p) in Strategy::ALL.iter().zip(probs) {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = *s;
        if u < acc {
            return *s;
        }
    }
    last
}

/// One categorical draw over the six strategies, then the chosen sampler.
pub fn sample_pose(
    rng: &mut RandomStream,
    cloud: &PointCloud,
    stats: &SceneStats,
    hfov: f64,
    cfg: &SamplerConfig,
) -> Result<SampledPose> {
    let strategy = route(&cfg.probabilities(), rng.uniform());
    let pose = match strategy {
        Strategy::Identity => SampledPose::new(RigidTransform::IDENTITY, strategy),
        Strategy::Translation => SampledPose::new(sample_translation(rng, stats, cfg), strategy),
        Strategy::Rotation => SampledPose::new(sample_rotation(rng, hfov, cfg), strategy),
        Strategy::Combined => SampledPose::new(sample_combined(rng, stats, hfov, cfg), strategy),
        Strategy::NormalDerived => sample_normal_derived(rng, cloud, cfg)?,
        Strategy::FrontalHemisphere => {
            SampledPose::new(sample_frontal_hemisphere(rng, cloud, cfg)?, strategy)
        }
    };
    Ok(pose)
}
