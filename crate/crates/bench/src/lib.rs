//! Shared scene setup for the criterion benchmarks in `benches/`.

use rgbdn_core::fixtures::{add_noise, corner_noise, corner_scene, flat_plane_scene, render_scene};
use rgbdn_core::types::{CameraIntrinsics, DepthImage, LabelMap};

pub fn paper_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(500.0, 500.0, 160.0, 120.0, 320, 240).unwrap()
}

/// Clean 320x240 wall at 2 m: no discontinuities, so windows run at their
/// full depth-adaptive size. This is the case where window size would hurt
/// a direct summation.
pub fn clean_flat() -> (DepthImage, CameraIntrinsics) {
    let k = paper_intrinsics();
    let scene = render_scene(&flat_plane_scene(&k)).unwrap();
    (scene.depth, k)
}

/// Noisy 320x240 corner scene: the realistic sensor-like input.
pub fn noisy_corner() -> (DepthImage, LabelMap, CameraIntrinsics) {
    let k = paper_intrinsics();
    let scene = render_scene(&corner_scene(&k)).unwrap();
    let noisy = add_noise(&scene.depth, &corner_noise(7), 0.01);
    (noisy, scene.labels, k)
}
