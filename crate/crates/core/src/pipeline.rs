//! End-to-end composition of the depth -> normals stages, shared by the
//! CLI, the acceptance suite, and the benchmarks.

use crate::error::Result;
use crate::normals::{build_integral_stats, estimate_normals, NormalParams, PointGrid};
use crate::preprocess::{
    depth_change_map, distance_map, fill_holes, smooth_depth, training_valid_mask, DistanceMap,
    PreprocessParams,
};
use crate::types::{CameraIntrinsics, DepthImage, Grid, NormalMap};

/// Everything the compute stage produces.
pub struct ComputedNormals {
    pub normals: NormalMap,
    /// Pixels trusted for loss computation (raw-valid, unfilled, in range).
    pub training_mask: Grid<bool>,
    /// Pixels fabricated by hole filling.
    pub filled: Grid<bool>,
    /// Depth after hole filling and smoothing.
    pub preprocessed: DepthImage,
    pub distance: DistanceMap,
}

/// Runs fill -> smooth -> change map -> distance map -> integral-image
/// normal estimation on one raw depth image.
pub fn compute_normals(
    d_raw: &DepthImage,
    k: &CameraIntrinsics,
    pp: &PreprocessParams,
    np: &NormalParams,
) -> Result<ComputedNormals> {
    pp.validate()?;
    np.validate()?;
    let (filled_depth, filled) = fill_holes(d_raw, pp);
    let preprocessed = smooth_depth(&filled_depth, pp);
    let changes = depth_change_map(&preprocessed, pp);
    let distance = distance_map(&changes);
    let pg = PointGrid::from_depth(&preprocessed, k)?;
    let stats = build_integral_stats(&pg);
    let normals = estimate_normals(&pg, &stats, &distance, np, k)?;
    let training_mask = training_valid_mask(d_raw, &filled, pp);
    Ok(ComputedNormals {
        normals,
        training_mask,
        filled,
        preprocessed,
        distance,
    })
}
