//! RGB-D surface normal toolkit.
//!
//! The pipeline turns raw sensor depth into clean, camera-facing unit
//! normals and keeps every stage testable on its own:
//!
//! 1. [`preprocess`] fills holes, applies an edge-aware median, and derives
//!    the discontinuity/distance maps plus the training mask.
//! 2. [`normals`] back-projects depth into an organized point cloud and
//!    fits a plane per pixel over a depth-adaptive window using O(1)
//!    integral-image moment queries.
//! 3. [`semantic`] grows class- and angle-consistent regions and flattens
//!    each one onto its average normal.
//! 4. [`metrics`] scores predictions (angle statistics, threshold
//!    accuracies, semantic pixel accuracy) over valid masks.
//! 5. [`loss`] provides the masked cosine / cross-entropy / joint losses
//!    with analytic gradients for downstream trainers.
//! 6. [`mix`] builds deterministic multi-dataset minibatch schedules, and
//!    [`fixtures`] renders synthetic scenes with exact ground truth.

pub mod accum;
pub mod eig3;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod mix;
pub mod normals;
pub mod pipeline;
pub mod preprocess;
pub mod semantic;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    angle_between, CameraIntrinsics, DepthImage, Grid, LabelMap, NormalMap, PlanarClassSet, Vec3,
};
