use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use forge_core::geometry::{CameraIntrinsics, Vec3};
use forge_core::io::pfm;
use forge_core::metrics::{default_grid, MetricReport};
use forge_core::oracle::{off_by_one_render, run_equivalence_suite};
use forge_core::pipeline::{
    eval_report, load_manifest, run_generate, sample_pose_records, sweep_with_command, RunConfig,
};
use forge_core::raster::RgbImage;
use forge_core::reproject::render;
use forge_core::scene::{scene_stats, unproject, DepthMap, NormalMap};

#[derive(Parser)]
#[command(name = "forge", version, about = "Pseudo novel-view pair generation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render pseudo-target views for every manifest entry.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "FORGE_THREADS")]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump sampled poses as JSON lines.
    SamplePoses {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 60.0)]
        hfov_deg: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Depth PFM for scene statistics; defaults to a synthetic plane.
        #[arg(long, requires = "normals")]
        depth: Option<PathBuf>,
        #[arg(long, requires = "depth")]
        normals: Option<PathBuf>,
        /// Depth of the synthetic fronto-parallel plane, meters.
        #[arg(long, default_value_t = 2.0)]
        plane_depth: f64,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Per-frame PSNR/SSIM between matching PNGs, as JSON lines.
    Eval {
        #[arg(long, required_unless_present = "scale_sweep")]
        pred: Option<PathBuf>,
        #[arg(long)]
        gt: PathBuf,
        /// Shell command rendering predictions; `{scale}` and `{out}` are substituted.
        #[arg(long)]
        scale_sweep: Option<String>,
        /// Comma-separated scales (default: 25 log-spaced in [0.25, 4]).
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
    /// Compare the fast renderer against the brute-force reference.
    OracleCheck {
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sensitivity fixture: render with a one-pixel offset.
        #[arg(long, hide = true)]
        inject_off_by_one: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> forge_core::Result<ExitCode> {
    match cmd {
        Cmd::Generate {
            config,
            manifest,
            out,
            threads,
            seed,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = threads {
                cfg.threads = t;
            }
            cfg.validate()?;
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| forge_core::Error::InvalidConfig("no output directory (--out)".into()))?;
            let entries = load_manifest(&manifest)?;
            let start = std::time::Instant::now();
            let run = run_generate(&cfg, &entries, &out, cfg.threads)?;
            log::info!(
                "wrote {} views for {} entries in {:.2?} ({} failed)",
                run.outputs.len(),
                entries.len() - run.failed.len(),
                start.elapsed(),
                run.failed.len()
            );
            Ok(if run.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::SamplePoses {
            config,
            n,
            hfov_deg,
            seed,
            depth,
            normals,
            plane_depth,
            size,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (depth, normals) = match (depth, normals) {
                (Some(d), Some(n)) => (pfm::read_depth(&d)?, pfm::read_normals(&n)?),
                _ => (
                    DepthMap::constant(size, size, plane_depth),
                    NormalMap::constant(size, size, Vec3::new(0.0, 0.0, -1.0)),
                ),
            };
            let hfov = hfov_deg.to_radians();
            let k = CameraIntrinsics::from_hfov(depth.width, depth.height, hfov)?;
            let image = RgbImage::new(depth.width, depth.height);
            let cloud = unproject(&image, &depth, &normals, &k)?;
            let stats = scene_stats(&cloud)?;
            let records = sample_pose_records(&cfg.sampler, n, hfov, &cloud, &stats, cfg.seed)?;
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            for r in &records {
                serde_json::to_writer(&mut out, r)?;
                writeln!(out).map_err(|e| forge_core::Error::io("<stdout>", e))?;
            }
            out.flush().map_err(|e| forge_core::Error::io("<stdout>", e))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval {
            pred,
            gt,
            scale_sweep,
            grid,
            work_dir,
        } => {
            let report = match scale_sweep {
                Some(template) => {
                    let grid = grid.unwrap_or_else(default_grid);
                    let work = work_dir.unwrap_or_else(|| {
                        std::env::temp_dir().join(format!("forge-sweep-{}", std::process::id()))
                    });
                    sweep_with_command(&template, &grid, &gt, &work)?
                }
                None => eval_report(pred.as_deref().unwrap_or(Path::new(".")), &gt)?,
            };
            print_report(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::OracleCheck {
            trials,
            seed,
            inject_off_by_one,
        } => {
            let start = std::time::Instant::now();
            let outcome = if inject_off_by_one {
                run_equivalence_suite(trials, seed, &off_by_one_render)?
            } else {
                run_equivalence_suite(trials, seed, &|c, t, k| render(c, t, k))?
            };
            match outcome {
                Ok(n) => {
                    println!("oracle-check: {n} trials bit-identical in {:.2?}", start.elapsed());
                    Ok(ExitCode::SUCCESS)
                }
                Err(m) => {
                    eprintln!("{m}");
                    Ok(ExitCode::FAILURE)
                }
            }
        }
    }
}

fn print_report(report: &MetricReport) -> forge_core::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e| forge_core::Error::io("<stdout>", e);
    for f in &report.per_frame {
        serde_json::to_writer(&mut out, f)?;
        writeln!(out).map_err(io)?;
    }
    let aggregate = serde_json::json!({
        "aggregate": {
            "psnr": report.psnr,
            "ssim": report.ssim,
            "frames": report.per_frame.len(),
            "best_scale": report.best_scale,
        }
    });
    serde_json::to_writer(&mut out, &aggregate)?;
    writeln!(out).map_err(io)?;
    Ok(())
}
