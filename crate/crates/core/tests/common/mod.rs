#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use forge_core::geometry::CameraIntrinsics;
use forge_core::io::{pfm, png};
use forge_core::oracle::{realize, AnalyticScene, SceneKind, Texture};
use forge_core::rng::RandomStream;
use forge_core::Vec3;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of Pearson's χ² statistic for `observed` counts
/// against `expected` probabilities. Zero-probability cells must be empty.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&o, &p) in observed.iter().zip(expected) {
        if p == 0.0 {
            assert_eq!(o, 0, "draw landed in a zero-probability cell");
            continue;
        }
        let e = p * n as f64;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    let dist = ChiSquared::new((cells - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// One-sample Kolmogorov–Smirnov test against U(0, 1). Returns (D, p).
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = x.clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    // Stephens' small-sample correction to the asymptotic Kolmogorov tail.
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    (d, kolmogorov_q(lambda))
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub id: String,
    pub hfov_deg: f64,
    pub scene: AnalyticScene,
    pub width: usize,
    pub height: usize,
}

impl Fixture {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics::from_hfov(self.width, self.height, self.hfov_deg.to_radians()).unwrap()
    }

    /// Writes `<id>.png`, `<id>.depth.pfm`, `<id>.normals.pfm` and returns
    /// the manifest line.
    pub fn write(&self, dir: &Path) -> String {
        let (img, depth, normals) = realize(&self.scene, &self.intrinsics());
        let image_path = dir.join(format!("{}.png", self.id));
        let depth_path = dir.join(format!("{}.depth.pfm", self.id));
        let normal_path = dir.join(format!("{}.normals.pfm", self.id));
        png::write_rgb(&image_path, &img).unwrap();
        pfm::write_depth(&depth_path, &depth).unwrap();
        pfm::write_normals(&normal_path, &normals).unwrap();
        serde_json::json!({
            "id": self.id,
            "image_path": image_path.file_name().unwrap().to_str().unwrap(),
            "depth_path": depth_path.file_name().unwrap().to_str().unwrap(),
            "normal_path": normal_path.file_name().unwrap().to_str().unwrap(),
            "hfov_deg": self.hfov_deg,
        })
        .to_string()
    }
}

pub fn random_fixture(rng: &mut RandomStream, id: &str, max_side: usize) -> Fixture {
    let side = |rng: &mut RandomStream| 16 + (rng.uniform() * (max_side - 15) as f64) as usize;
    let width = side(rng).min(max_side);
    let height = side(rng).min(max_side);
    let hfov_deg = rng.uniform_range(45.0, 95.0);
    let texture = Texture::Noise { seed: rng.next_u64() };
    let kind = match (rng.uniform() * 3.0) as u32 {
        0 => SceneKind::FrontoPlane { depth: rng.uniform_range(0.8, 4.0) },
        1 => SceneKind::SlantedPlane {
            point: Vec3::new(0.0, 0.0, rng.uniform_range(1.5, 4.0)),
            normal: Vec3::new(rng.uniform_range(-0.5, 0.5), rng.uniform_range(-0.3, 0.3), -1.0)
                .normalized()
                .unwrap(),
        },
        _ => SceneKind::Sphere {
            center: Vec3::new(0.0, 0.0, rng.uniform_range(3.0, 6.0)),
            radius: rng.uniform_range(1.5, 2.5),
        },
    };
    Fixture {
        id: id.to_string(),
        hfov_deg,
        scene: AnalyticScene { kind, texture },
        width,
        height,
    }
}

/// Writes `n` random fixtures plus `manifest.jsonl`; returns the manifest path.
pub fn write_corpus(dir: &Path, n: usize, seed: u64, max_side: usize) -> PathBuf {
    let mut rng = RandomStream::new(seed, "test-corpus", 0);
    let lines: Vec<String> = (0..n)
        .map(|i| random_fixture(&mut rng, &format!("img{i:03}"), max_side).write(dir))
        .collect();
    let manifest = dir.join("manifest.jsonl");
    std::fs::write(&manifest, lines.join("\n") + "\n").unwrap();
    manifest
}

pub fn write_config(path: &Path, json: serde_json::Value) {
    std::fs::write(path, serde_json::to_string_pretty(&json).unwrap()).unwrap();
}

/// Relative path → file bytes for every file under `root`.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

pub fn forge() -> std::process::Command {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_forge"));
    cmd.env("RUST_LOG", "warn").env_remove("FORGE_THREADS");
    cmd
}
