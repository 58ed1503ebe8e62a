//! Scene-flow numerics: semi-supervised loss family, rigidity-based
//! refinement (Gauss-Newton SE(3) ego-motion from dense flow and disparity),
//! KITTI-style metrics, correlation cost volumes, and the file formats that
//! carry dense maps between tools.
//!
//! Everything operates on precomputed dense maps; there is no learning here.
//! All types are immutable value objects after construction and the
//! operators are pure functions, so sharing across threads is safe.

pub mod camera;
pub mod costvol;
pub mod error;
pub mod io;
pub mod loss;
pub mod map;
pub mod metrics;
pub mod pyramid;
pub mod rigid;
pub mod se3;
pub mod synth;
pub mod warp;

pub use camera::StereoCamera;
pub use error::{Error, Result};
pub use map::{DenseMap, DisparityMap, FlowField, OcclusionMask, SegPosterior, ValidityMask};
pub use se3::{se3_compose, se3_exp, se3_log, RigidTransform, Twist};
