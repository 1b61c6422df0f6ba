//! Pseudo novel-view training pairs from single images.
//!
//! An image with metric depth, surface normals and a horizontal field of
//! view is lifted to a point cloud ([`scene`]), a relative camera pose is
//! drawn from a six-strategy mixture ([`sampler`]), and the cloud is
//! reprojected with backface culling and a z-buffer ([`reproject`]) into a
//! pseudo-target image plus visibility mask. [`loss`] and [`metrics`] hold
//! the masked training losses and evaluation metrics; [`oracle`] provides
//! analytic scenes and a brute-force reference renderer; [`pipeline`] runs
//! the whole thing over manifests in parallel with byte-deterministic output.

pub mod error;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod raster;
pub mod reproject;
pub mod rng;
pub mod sampler;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{CameraIntrinsics, PoseVector7, RigidTransform, RotationMatrix, UnitQuaternion, Vec3};
pub use raster::RgbImage;
pub use reproject::PseudoView;
pub use rng::RandomStream;
pub use sampler::{SampledPose, SamplerConfig, Strategy};
pub use scene::{DepthMap, NormalMap, PointCloud, SceneStats};
