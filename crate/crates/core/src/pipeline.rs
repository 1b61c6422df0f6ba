//! Batch pair generation, pose dumps and directory evaluation.
//!
//! Every `(image, view)` unit draws from its own [`RandomStream`] keyed by
//! `(seed, image_id, view_index)` and writes only its own files, so output
//! trees do not depend on thread count or scheduling.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, PoseVector7, RigidTransform, UnitQuaternion, Vec3};
use crate::io::{pfm, png};
use crate::loss::DEFAULT_EPSILON;
use crate::metrics::{best_of, psnr, ssim, FrameMetrics, MetricReport};
use crate::raster::RgbImage;
use crate::reproject::{render_with_near, PseudoView};
use crate::rng::RandomStream;
use crate::sampler::{sample_pose, SampledPose, SamplerConfig, Strategy};
use crate::scene::{scene_stats, unproject, PointCloud, SceneStats};

pub const RUN_MANIFEST: &str = "run_manifest.json";

fn one() -> usize {
    1
}

fn default_loss_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default = "one")]
    pub views_per_image: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default = "default_loss_epsilon")]
    pub loss_epsilon: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sampler: SamplerConfig::default(),
            views_per_image: 1,
            seed: 0,
            output_dir: None,
            threads: 1,
            loss_epsilon: DEFAULT_EPSILON,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.views_per_image < 1 {
            return Err(Error::InvalidConfig("views_per_image must be >= 1".into()));
        }
        if self.threads < 1 {
            return Err(Error::InvalidConfig("threads must be >= 1".into()));
        }
        if !(self.loss_epsilon > 0.0) {
            return Err(Error::InvalidConfig("loss_epsilon must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub depth_path: PathBuf,
    pub normal_path: PathBuf,
    pub hfov_deg: f64,
}

impl ManifestEntry {
    fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) || self.id.starts_with('.') {
            return Err(Error::InvalidManifest(format!(
                "id {:?} is not usable as a file stem",
                self.id
            )));
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(Error::InvalidManifest(format!(
                "{}: hfov_deg {} outside (0, 180)",
                self.id, self.hfov_deg
            )));
        }
        Ok(())
    }
}

/// Parses line-delimited JSON entries. Relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut e: ManifestEntry = serde_json::from_str(line)
            .map_err(|err| Error::InvalidManifest(format!("line {}: {err}", lineno + 1)))?;
        e.validate()?;
        if !seen.insert(e.id.clone()) {
            return Err(Error::InvalidManifest(format!("duplicate id {:?}", e.id)));
        }
        for p in [&mut e.image_path, &mut e.depth_path, &mut e.normal_path] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        entries.push(e);
    }
    Ok(entries)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// A decoded and lifted source image.
#[derive(Debug, Clone)]
pub struct SourceScene {
    pub id: String,
    pub hfov_deg: f64,
    pub intrinsics: CameraIntrinsics,
    pub image: RgbImage,
    pub cloud: PointCloud,
    pub stats: SceneStats,
}

impl SourceScene {
    pub fn from_parts(
        id: &str,
        hfov_deg: f64,
        image: RgbImage,
        depth: &crate::scene::DepthMap,
        normals: &crate::scene::NormalMap,
    ) -> Result<Self> {
        let k = CameraIntrinsics::from_hfov(image.width, image.height, hfov_deg.to_radians())?;
        let cloud = unproject(&image, depth, normals, &k)?;
        let stats = scene_stats(&cloud)?;
        Ok(SourceScene {
            id: id.to_string(),
            hfov_deg,
            intrinsics: k,
            image,
            cloud,
            stats,
        })
    }

    pub fn load(entry: &ManifestEntry) -> Result<Self> {
        let image = png::read_rgb(&entry.image_path)?;
        let depth = pfm::read_depth(&entry.depth_path)?;
        let normals = pfm::read_normals(&entry.normal_path)?;
        SourceScene::from_parts(&entry.id, entry.hfov_deg, image, &depth, &normals)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedView {
    pub image_id: String,
    pub view_index: u64,
    /// Transform after the quaternion round trip; this is what was rendered.
    pub pose: SampledPose,
    pub pose7: PoseVector7,
    pub view: PseudoView,
}

/// Samples and renders view `view_index` of `src`.
///
/// The pose is rendered exactly as it is recorded: rotation passes through
/// its canonical quaternion first, so a re-render from metadata matches.
pub fn generate_view(
    src: &SourceScene,
    cfg: &SamplerConfig,
    seed: u64,
    view_index: u64,
) -> Result<GeneratedView> {
    let mut rng = RandomStream::new(seed, &src.id, view_index);
    let sampled = sample_pose(&mut rng, &src.cloud, &src.stats, src.intrinsics.hfov(), cfg)?;
    let pose7 = PoseVector7::from_transform(&sampled.transform)?;
    let transform = pose7.to_transform()?;
    let view = render_with_near(&src.cloud, &transform, &src.intrinsics, cfg.eps_near)?;
    Ok(GeneratedView {
        image_id: src.id.clone(),
        view_index,
        pose: SampledPose {
            transform,
            ..sampled
        },
        pose7,
        view,
    })
}

/// In-memory stream of views for one source image, without disk I/O.
pub struct ViewStream<'a> {
    src: &'a SourceScene,
    cfg: SamplerConfig,
    seed: u64,
    next: u64,
    end: u64,
}

impl<'a> ViewStream<'a> {
    pub fn new(src: &'a SourceScene, cfg: SamplerConfig, seed: u64, views: u64) -> Self {
        ViewStream {
            src,
            cfg,
            seed,
            next: 0,
            end: views,
        }
    }
}

impl Iterator for ViewStream<'_> {
    type Item = Result<GeneratedView>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let k = self.next;
        self.next += 1;
        Some(generate_view(self.src, &self.cfg, self.seed, k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMeta {
    pub image_id: String,
    pub view_index: u64,
    pub strategy: Strategy,
    pub fell_back: bool,
    pub quaternion: [f64; 4],
    pub translation_m: [f64; 3],
    pub hfov_deg: f64,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl ViewMeta {
    pub fn new(src: &SourceScene, v: &GeneratedView, seed: u64) -> Self {
        ViewMeta {
            image_id: v.image_id.clone(),
            view_index: v.view_index,
            strategy: v.pose.strategy,
            fell_back: v.pose.fell_back,
            quaternion: v.pose7.rotation.to_array(),
            translation_m: v.pose7.translation.to_array(),
            hfov_deg: src.hfov_deg,
            width: src.intrinsics.width,
            height: src.intrinsics.height,
            seed,
        }
    }

    pub fn transform(&self) -> Result<RigidTransform> {
        let [w, x, y, z] = self.quaternion;
        PoseVector7 {
            translation: Vec3::from_array(self.translation_m),
            rotation: UnitQuaternion::new(w, x, y, z)?,
        }
        .to_transform()
    }
}

pub fn view_stem(id: &str, k: u64) -> String {
    format!("{id}_{k}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub image_id: String,
    pub view_index: u64,
    pub target: String,
    pub mask: String,
    pub meta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub image_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub views_per_image: usize,
    pub outputs: Vec<OutputRecord>,
    pub failed: Vec<FailureRecord>,
}

fn write_view(out_dir: &Path, src: &SourceScene, v: &GeneratedView, seed: u64) -> Result<OutputRecord> {
    let stem = view_stem(&v.image_id, v.view_index);
    let rec = OutputRecord {
        image_id: v.image_id.clone(),
        view_index: v.view_index,
        target: format!("{stem}.target.png"),
        mask: format!("{stem}.mask.png"),
        meta: format!("{stem}.meta.json"),
    };
    let (w, h) = v.view.image.dims();
    png::write_rgb(&out_dir.join(&rec.target), &v.view.image)?;
    png::write_mask(&out_dir.join(&rec.mask), w, h, &v.view.mask)?;
    let mut meta = serde_json::to_vec_pretty(&ViewMeta::new(src, v, seed))?;
    meta.push(b'\n');
    crate::io::write_file(&out_dir.join(&rec.meta), &meta)?;
    Ok(rec)
}

fn process_entry(
    entry: &ManifestEntry,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<OutputRecord>> {
    let src = SourceScene::load(entry)?;
    (0..cfg.views_per_image as u64)
        .into_par_iter()
        .map(|k| {
            let v = generate_view(&src, &cfg.sampler, cfg.seed, k)?;
            write_view(out_dir, &src, &v, cfg.seed)
        })
        .collect()
}

/// Generates all views for all entries and writes the run manifest last.
/// Per-entry failures are recorded and skipped.
pub fn run_generate(
    cfg: &RunConfig,
    entries: &[ManifestEntry],
    out_dir: &Path,
    threads: usize,
) -> Result<RunManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Other(e.to_string()))?;
    let results: Vec<(String, Result<Vec<OutputRecord>>)> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| (e.id.clone(), process_entry(e, cfg, out_dir)))
            .collect()
    });
    let mut manifest = RunManifest {
        seed: cfg.seed,
        views_per_image: cfg.views_per_image,
        outputs: Vec::new(),
        failed: Vec::new(),
    };
    for (id, res) in results {
        match res {
            Ok(recs) => manifest.outputs.extend(recs),
            Err(e) => {
                log::error!("skipping {id}: {e}");
                manifest.failed.push(FailureRecord {
                    image_id: id,
                    error: e.to_string(),
                });
            }
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    crate::io::write_file(&out_dir.join(RUN_MANIFEST), &bytes)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub strategy: Strategy,
    pub quaternion: [f64; 4],
    pub translation_m: [f64; 3],
    pub fell_back: bool,
}

/// `n` independent pose draws, record `k` keyed by `(seed, "sample-poses", k)`.
pub fn sample_pose_records(
    cfg: &SamplerConfig,
    n: u64,
    hfov: f64,
    cloud: &PointCloud,
    stats: &SceneStats,
    seed: u64,
) -> Result<Vec<PoseRecord>> {
    cfg.validate()?;
    (0..n)
        .map(|k| {
            let mut rng = RandomStream::new(seed, "sample-poses", k);
            let pose = sample_pose(&mut rng, cloud, stats, hfov, cfg)?;
            let p7 = PoseVector7::from_transform(&pose.transform)?;
            Ok(PoseRecord {
                strategy: pose.strategy,
                quaternion: p7.rotation.to_array(),
                translation_m: p7.translation.to_array(),
                fell_back: pose.fell_back,
            })
        })
        .collect()
}

fn list_pngs(dir: &Path) -> Result<BTreeSet<String>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = BTreeSet::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") && entry.path().is_file() {
            names.insert(name);
        }
    }
    Ok(names)
}

/// Per-frame PSNR/SSIM for frames matched by filename.
pub fn eval_dirs(pred_dir: &Path, gt_dir: &Path) -> Result<Vec<FrameMetrics>> {
    let pred = list_pngs(pred_dir)?;
    let gt = list_pngs(gt_dir)?;
    if let Some(missing) = pred.symmetric_difference(&gt).next() {
        return Err(Error::MissingCounterpart(missing.clone()));
    }
    if gt.is_empty() {
        return Err(Error::Other(format!("no PNG frames in {}", gt_dir.display())));
    }
    let names: Vec<&String> = gt.iter().collect();
    names
        .par_iter()
        .map(|name| {
            let a = png::read_rgb(&pred_dir.join(name))?;
            let b = png::read_rgb(&gt_dir.join(name))?;
            Ok(FrameMetrics {
                frame_id: (*name).clone(),
                psnr: psnr(&a, &b, 1.0)?,
                ssim: ssim(&a, &b)?,
            })
        })
        .collect()
}

pub fn eval_report(pred_dir: &Path, gt_dir: &Path) -> Result<MetricReport> {
    Ok(MetricReport::from_frames(eval_dirs(pred_dir, gt_dir)?, 1.0))
}

/// Runs `template` once per grid scale via `sh -c`, substituting `{scale}`
/// and `{out}` (a fresh directory per scale under `work_dir`), and keeps the
/// scale with the best mean PSNR against `gt_dir`.
pub fn sweep_with_command(
    template: &str,
    grid: &[f64],
    gt_dir: &Path,
    work_dir: &Path,
) -> Result<MetricReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut reports = BTreeMap::new();
    let mut scored = Vec::with_capacity(grid.len());
    for (i, &scale) in grid.iter().enumerate() {
        let out = work_dir.join(format!("scale_{i:03}"));
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let cmd = template
            .replace("{scale}", &scale.to_string())
            .replace("{out}", &out.to_string_lossy());
        let status = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .status()
            .map_err(|e| Error::io("sh", e))?;
        if !status.success() {
            return Err(Error::Other(format!("render command failed at scale {scale}: {status}")));
        }
        let frames = eval_dirs(&out, gt_dir)?;
        let report = MetricReport::from_frames(frames, scale);
        scored.push((scale, report.psnr));
        reports.insert(i, report);
    }
    let (best, _) = best_of(&scored)?;
    let idx = grid.iter().position(|&s| s == best).expect("best scale comes from the grid");
    Ok(reports.remove(&idx).expect("one report per grid scale"))
}
