mod common;

use common::{chi_square_p, ks_uniform};
use forge_core::geometry::{CameraIntrinsics, RigidTransform, Vec3};
use forge_core::oracle::{random_intrinsics, random_scene, realize};
use forge_core::sampler::{
    log_uniform, perturb_direction, sample_anchor, sample_combined, sample_frontal_hemisphere,
    sample_normal_derived, sample_pose, sample_rotation, sample_translation,
};
use forge_core::scene::{scene_stats, unproject};
use forge_core::{PointCloud, RandomStream, RgbImage, SamplerConfig, Strategy};

const DRAWS: u64 = 10_000;
const ALPHA: f64 = 0.001;

fn plane_cloud() -> (PointCloud, CameraIntrinsics) {
    let k = CameraIntrinsics::from_hfov(32, 24, 60f64.to_radians()).unwrap();
    let depth = forge_core::DepthMap::constant(32, 24, 2.0);
    let normals = forge_core::NormalMap::constant(32, 24, Vec3::new(0.0, 0.0, -1.0));
    (unproject(&RgbImage::new(32, 24), &depth, &normals, &k).unwrap(), k)
}

fn point_cloud(points: &[(Vec3, Vec3)]) -> PointCloud {
    let mut c = PointCloud::default();
    for (i, &(p, n)) in points.iter().enumerate() {
        c.push(p, n, [0.0; 3], (0, i as u32));
    }
    c
}

#[test]
fn routing_histogram_matches_probabilities() {
    let (cloud, k) = plane_cloud();
    let stats = scene_stats(&cloud).unwrap();
    let cfg = SamplerConfig::default();
    let mut counts = [0u64; 6];
    for i in 0..DRAWS {
        let mut rng = RandomStream::new(11, "routing", i);
        let pose = sample_pose(&mut rng, &cloud, &stats, k.hfov(), &cfg).unwrap();
        counts[pose.strategy as usize] += 1;
    }
    let p = chi_square_p(&counts, &cfg.probabilities());
    assert!(p > ALPHA, "counts {counts:?}, p = {p}");
}

#[test]
fn identity_only_config_always_returns_identity() {
    let (cloud, k) = plane_cloud();
    let stats = scene_stats(&cloud).unwrap();
    let cfg = SamplerConfig::only(Strategy::Identity);
    let mut rng = RandomStream::new(0, "identity", 0);
    for _ in 0..500 {
        let pose = sample_pose(&mut rng, &cloud, &stats, k.hfov(), &cfg).unwrap();
        assert_eq!(pose.strategy, Strategy::Identity);
        assert!(pose.transform.is_identity());
    }
}

#[test]
fn log_uniform_is_uniform_in_log_space() {
    let mut rng = RandomStream::new(3, "log-uniform", 0);
    let logs: Vec<f64> = (0..DRAWS)
        .map(|_| log_uniform(&mut rng, 1.0, std::f64::consts::E).unwrap().ln())
        .collect();
    let (d, p) = ks_uniform(&logs);
    assert!(p > ALPHA, "D = {d}, p = {p}");
}

#[test]
fn ks_oracle_rejects_a_skewed_sample() {
    let skewed: Vec<f64> = (0..DRAWS).map(|i| ((i as f64 + 0.5) / DRAWS as f64).powi(2)).collect();
    assert!(ks_uniform(&skewed).1 < ALPHA);
}

#[test]
fn anchor_picks_inverse_norm_weighted() {
    let n = Vec3::new(0.0, 0.0, -1.0);
    let cloud = point_cloud(&[(Vec3::new(0.0, 0.0, 1.0), n), (Vec3::new(0.0, 0.0, 2.0), n)]);
    let mut rng = RandomStream::new(5, "anchor", 0);
    let mut counts = [0u64; 2];
    for _ in 0..DRAWS {
        counts[sample_anchor(&mut rng, &cloud, 1e-3).unwrap()] += 1;
    }
    let p = chi_square_p(&counts, &[2.0 / 3.0, 1.0 / 3.0]);
    assert!(p > ALPHA, "counts {counts:?}, p = {p}");
}

#[test]
fn translation_never_pushes_points_behind_near_plane() {
    for alpha_t in [1.0, 25.0] {
        let cfg = SamplerConfig { alpha_t, ..SamplerConfig::default() };
        let mut scene_rng = RandomStream::new(8, "depth-safety", alpha_t as u64);
        let mut violations = 0;
        for s in 0..100 {
            let k = random_intrinsics(&mut scene_rng, 24);
            let (img, depth, normals) = realize(&random_scene(&mut scene_rng), &k);
            let Ok(cloud) = unproject(&img, &depth, &normals, &k) else { continue };
            let stats = scene_stats(&cloud).unwrap();
            let mut rng = RandomStream::new(8, "translation", s);
            for _ in 0..100 {
                let t = sample_translation(&mut rng, &stats, &cfg);
                let min = cloud.points.iter().map(|&p| t.apply(p).z).fold(f64::INFINITY, f64::min);
                if min < cfg.eps_near {
                    violations += 1;
                }
            }
        }
        assert_eq!(violations, 0, "alpha_t {alpha_t}");
    }
}

#[test]
fn rotation_deviation_is_bounded_by_fov() {
    let cfg = SamplerConfig::default();
    let mut rng = RandomStream::new(4, "rotation", 0);
    for i in 0..DRAWS {
        let hfov = (10.0 + (i % 160) as f64).to_radians();
        let t = sample_rotation(&mut rng, hfov, &cfg);
        assert_eq!(t.translation, Vec3::ZERO);
        let forward = t.rotation.transpose().mul_vec(Vec3::Z);
        assert!(Vec3::Z.angle_to(forward) <= cfg.alpha_r * hfov + 1e-12);
    }
}

#[test]
fn combined_equals_rotation_after_translation() {
    let (cloud, k) = plane_cloud();
    let mut stats = scene_stats(&cloud).unwrap();
    stats.sigma = Vec3::new(0.4, 0.3, 0.2);
    let cfg = SamplerConfig::default();
    for i in 0..200 {
        let mut a = RandomStream::new(6, "combined", i);
        let mut b = a.clone();
        let combined = sample_combined(&mut a, &stats, k.hfov(), &cfg);
        let t = sample_translation(&mut b, &stats, &cfg);
        let r = sample_rotation(&mut b, k.hfov(), &cfg);
        let expected = RigidTransform::from_rotation(r.rotation).compose(&t);
        assert!(combined.rotation.max_abs_diff(&expected.rotation) <= 1e-9);
        assert!((combined.translation - expected.translation).norm() <= 1e-9);
    }
}

#[test]
fn normal_derived_camera_faces_anchor_along_normal() {
    let cfg = SamplerConfig::default();
    let cloud = point_cloud(&[(Vec3::new(0.0, 0.0, 2.0), Vec3::new(0.0, 0.0, -1.0))]);
    let mut rng = RandomStream::new(9, "normal", 0);
    for _ in 0..1000 {
        let pose = sample_normal_derived(&mut rng, &cloud, &cfg).unwrap();
        assert!(!pose.fell_back);
        let q = pose.transform.apply(Vec3::new(0.0, 0.0, 2.0));
        assert!(q.x.abs() < 1e-12 && q.y.abs() < 1e-12);
        assert!((1.5..=3.0).contains(&q.z), "{q:?}");
    }
    let flat = point_cloud(&[(Vec3::new(0.0, -1.0, 2.0), Vec3::Y), (Vec3::new(0.0, 1.0, 2.0), -Vec3::Y)]);
    let pose = sample_normal_derived(&mut rng, &flat, &cfg).unwrap();
    assert!(pose.fell_back && pose.transform.is_identity());
}

#[test]
fn frontal_direction_stays_within_perturbation_cone() {
    let cfg = SamplerConfig::default();
    let bound = std::f64::consts::SQRT_2 * cfg.delta;
    let mut rng = RandomStream::new(12, "frontal-dir", 0);
    for _ in 0..DRAWS {
        let r = Vec3::new(rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0), -1.0)
            .normalized()
            .unwrap();
        let az = rng.uniform_range(-cfg.delta, cfg.delta);
        let el = rng.uniform_range(-cfg.delta, cfg.delta);
        let d = perturb_direction(r, az, el).unwrap();
        assert!((d.norm() - 1.0).abs() < 1e-12);
        assert!(r.angle_to(d) <= bound);
    }

    // End to end through the sampler: without jitter the target is the anchor itself.
    let cfg = SamplerConfig { sigma_anchor: 0.0, ..SamplerConfig::default() };
    let mut rng = RandomStream::new(12, "frontal-pose", 0);
    for _ in 0..DRAWS {
        let p = Vec3::new(rng.uniform_range(-2.0, 2.0), rng.uniform_range(-2.0, 2.0), rng.uniform_range(0.5, 6.0));
        let cloud = point_cloud(&[(p, Vec3::new(0.0, 0.0, -1.0))]);
        let t = sample_frontal_hemisphere(&mut rng, &cloud, &cfg).unwrap();
        let d = (t.camera_center() - p).normalized().unwrap();
        let r = (-p).normalized().unwrap();
        assert!(r.angle_to(d) <= bound + 1e-9);
        let q = t.apply(p);
        assert!(q.x.abs() < 1e-9 && q.y.abs() < 1e-9);
        let dist = q.z / p.norm();
        assert!((cfg.d_min - 1e-12..=cfg.d_max + 1e-12).contains(&dist), "{dist}");
    }
}

#[test]
fn same_key_same_sequence() {
    let (cloud, k) = plane_cloud();
    let stats = scene_stats(&cloud).unwrap();
    let cfg = SamplerConfig::default();
    let run = |id: &str| {
        let mut rng = RandomStream::new(21, id, 3);
        (0..50)
            .map(|_| sample_pose(&mut rng, &cloud, &stats, k.hfov(), &cfg).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run("a"), run("a"));
    assert_ne!(run("a"), run("b"));
}
