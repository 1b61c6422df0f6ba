use forge_core::geometry::{CameraIntrinsics, RigidTransform, Vec3};
use forge_core::oracle::{brute_force_render, random_trial, realize, AnalyticScene, Texture};
use forge_core::reproject::{render, NEAR_PLANE};
use forge_core::scene::{project, unproject, DepthMap, NormalMap};
use forge_core::{RandomStream, RgbImage, SamplerConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn project_inverts_unproject(
        w in 1usize..48,
        h in 1usize..48,
        hfov_deg in 10.0..170.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = RandomStream::new(seed, "roundtrip", 0);
        let depth: Vec<f64> = (0..w * h)
            .map(|_| if rng.uniform() < 0.2 { 0.0 } else { rng.uniform_range(0.05, 50.0) })
            .collect();
        let depth = DepthMap::new(w, h, depth).unwrap();
        prop_assume!(depth.valid_count() > 0);
        let k = CameraIntrinsics::from_hfov(w, h, hfov_deg.to_radians()).unwrap();
        let normals = NormalMap::constant(w, h, Vec3::new(0.0, 0.0, -1.0));
        let cloud = unproject(&RgbImage::new(w, h), &depth, &normals, &k).unwrap();
        prop_assert_eq!(cloud.len(), depth.valid_count());
        for (p, &(row, col)) in cloud.points.iter().zip(&cloud.pixel_index) {
            let (u, v) = project(*p, &k).unwrap();
            prop_assert!((u - (col as f64 + 0.5)).abs() <= 1e-4, "u {u} col {col}");
            prop_assert!((v - (row as f64 + 0.5)).abs() <= 1e-4, "v {v} row {row}");
            prop_assert_eq!(p.z, depth.get(row as usize, col as usize));
        }
    }

    #[test]
    fn nearer_point_never_increases_depth(seed in any::<u64>(), pick in any::<u32>()) {
        let trial = random_trial(seed, 0, &SamplerConfig::default()).unwrap();
        let (t, k) = (trial.transform, trial.intrinsics);
        let before = render(&trial.cloud, &t, &k).unwrap();
        let visible: Vec<usize> = (0..before.mask.len()).filter(|&i| before.mask[i]).collect();
        prop_assume!(!visible.is_empty());
        let idx = visible[pick as usize % visible.len()];
        let (row, col) = (idx / k.width, idx % k.width);
        // New point on the pixel-center ray, strictly in front of the current winner.
        let z = before.zbuffer[idx] * 0.9;
        prop_assume!(z > NEAR_PLANE * 2.0);
        let cam = Vec3::new(
            (col as f64 + 0.5 - k.cx) / k.fx * z,
            -((row as f64 + 0.5 - k.cy) / k.fy) * z,
            z,
        );
        let inv = t.inverse();
        let world = inv.apply(cam);
        let normal = (t.camera_center() - world).normalized().unwrap();
        let mut cloud = trial.cloud.clone();
        cloud.push(world, normal, [1.0, 0.0, 1.0], (0, 0));
        let after = render(&cloud, &t, &k).unwrap();
        prop_assert!(after.mask[idx]);
        prop_assert!(after.zbuffer[idx] < before.zbuffer[idx]);
        for (a, b) in after.zbuffer.iter().zip(&before.zbuffer) {
            prop_assert!(a <= b);
        }
    }
}

#[test]
fn pulled_back_footprint_matches_similar_triangles() {
    for (d, b) in [(2.0, 1.0), (1.0, 0.5), (3.0, 3.0), (0.5, 0.1)] {
        let k = CameraIntrinsics::from_hfov(96, 64, 70f64.to_radians()).unwrap();
        let (img, depth, normals) = realize(&AnalyticScene::fronto(d, Texture::Gradient), &k);
        let cloud = unproject(&img, &depth, &normals, &k).unwrap();
        // Camera backs up by b: extrinsic translation +b along z.
        let t = RigidTransform::from_translation(Vec3::new(0.0, 0.0, b));
        let view = render(&cloud, &t, &k).unwrap();
        let mid = k.height / 2;
        let cols: Vec<usize> = (0..k.width).filter(|&c| view.mask[mid * k.width + c]).collect();
        let measured = (cols.last().unwrap() - cols.first().unwrap() + 1) as f64 / 2.0;
        let expected = k.width as f64 / 2.0 * d / (d + b);
        assert!((measured - expected).abs() <= 1.0, "d {d} b {b}: {measured} vs {expected}");
    }
}

#[test]
fn oracle_agrees_under_stressed_sampler() {
    let cfg = SamplerConfig { alpha_t: 4.0, ..SamplerConfig::default() };
    for i in 0..40 {
        let trial = random_trial(99, i, &cfg).unwrap();
        let fast = render(&trial.cloud, &trial.transform, &trial.intrinsics).unwrap();
        let slow =
            brute_force_render(&trial.cloud, &trial.transform, &trial.intrinsics, NEAR_PLANE).unwrap();
        assert!(fast.bit_eq(&slow), "trial {i}");
        fast.check_consistency(NEAR_PLANE).unwrap();
    }
}
