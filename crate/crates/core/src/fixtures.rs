//! Procedural RGB-D test scenes with analytic ground truth: plane
//! arrangements rendered through the pinhole model, plus a depth-dependent
//! sensor noise model. These stand in for real capture data in tests and
//! benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::{class_id, CameraIntrinsics, DepthImage, Grid, LabelMap, NormalMap, Vec3, UNLABELED};

/// One infinite plane `n·p + d = 0` with a semantic class.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneSpec {
    /// Unit plane normal (orientation is fixed up at render time).
    pub normal: Vec3,
    /// Plane offset in meters.
    pub offset: f64,
    pub class_id: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub planes: Vec<PlaneSpec>,
    pub intrinsics: CameraIntrinsics,
    /// Probability that a rendered pixel is knocked out as a sensor hole
    /// when noise is applied.
    pub speckle_probability: f64,
}

/// Axial depth noise growing with distance: `z' = z + N(0, sigma_at_1m * z^depth_power)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KinectNoise {
    pub sigma_at_1m: f64,
    pub depth_power: f64,
    pub seed: u64,
}

impl Default for KinectNoise {
    fn default() -> Self {
        Self {
            sigma_at_1m: 0.0015,
            depth_power: 2.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedScene {
    pub depth: DepthImage,
    pub labels: LabelMap,
    /// Analytic ground-truth normals, camera-facing.
    pub normals: NormalMap,
}

/// Ray-casts every pixel to its nearest plane. Pixels that hit nothing get
/// invalid depth, an unlabeled class, and an invalid normal.
pub fn render_scene(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.intrinsics.validate()?;
    for plane in &spec.planes {
        if (plane.normal.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::config("plane normals must be unit length"));
        }
    }
    let k = &spec.intrinsics;
    let (w, h) = (k.width, k.height);
    let mut depth = Grid::filled(w, h, 0.0);
    let mut valid = Grid::filled(w, h, false);
    let mut labels = Grid::filled(w, h, UNLABELED);
    let mut normals = Grid::filled(w, h, Vec3::ZERO);
    let mut normal_valid = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            let ray = Vec3::new(
                (u as f64 - k.cx) / k.fx,
                (v as f64 - k.cy) / k.fy,
                1.0,
            );
            let mut nearest: Option<(f64, &PlaneSpec)> = None;
            for plane in &spec.planes {
                let denom = plane.normal.dot(ray);
                if denom.abs() < 1e-12 {
                    continue;
                }
                let t = -plane.offset / denom;
                if t > 0.0 && nearest.is_none_or(|(tn, _)| t < tn) {
                    nearest = Some((t, plane));
                }
            }
            if let Some((t, plane)) = nearest {
                // The ray has unit z, so the parameter is the depth.
                depth[(u, v)] = t;
                valid[(u, v)] = true;
                labels[(u, v)] = plane.class_id;
                let p = ray * t;
                normals[(u, v)] = if plane.normal.dot(p) > 0.0 {
                    -plane.normal
                } else {
                    plane.normal
                };
                normal_valid[(u, v)] = true;
            }
        }
    }
    Ok(RenderedScene {
        depth: DepthImage::new(depth, valid)?,
        labels: LabelMap::new(labels)?,
        normals: NormalMap::new(normals, normal_valid)?,
    })
}

/// Adds seeded axial noise and knocks out pixels with the given speckle
/// probability. Pixels are visited in row-major order; invalid pixels
/// consume no randomness.
pub fn add_noise(d: &DepthImage, noise: &KinectNoise, speckle_probability: f64) -> DepthImage {
    let mut out = d.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let standard = Normal::new(0.0, 1.0).unwrap();
    for v in 0..d.height() {
        for u in 0..d.width() {
            if !d.valid[(u, v)] {
                continue;
            }
            let z = d.depth[(u, v)];
            if noise.sigma_at_1m > 0.0 {
                let sigma = noise.sigma_at_1m * z.powf(noise.depth_power);
                let sample: f64 = standard.sample(&mut rng);
                out.depth[(u, v)] = (z + sigma * sample).max(1e-6);
            }
            if speckle_probability > 0.0 && rng.random::<f64>() < speckle_probability {
                out.valid[(u, v)] = false;
            }
        }
    }
    out
}

/// Fronto-parallel wall at 2 m: constant depth, ground truth (0, 0, -1).
pub fn flat_plane_scene(k: &CameraIntrinsics) -> SceneSpec {
    SceneSpec {
        planes: vec![PlaneSpec {
            normal: Vec3::new(0.0, 0.0, -1.0),
            offset: 2.0,
            class_id: class_id("wall").unwrap(),
        }],
        intrinsics: k.clone(),
        speckle_probability: 0.0,
    }
}

/// Two walls meeting at a 90 degree concave corner 2 m ahead, both labeled
/// `wall`. The corner line projects to the column u = cx.
pub fn corner_scene(k: &CameraIntrinsics) -> SceneSpec {
    let wall = class_id("wall").unwrap();
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    SceneSpec {
        planes: vec![
            // Left facet: x - z + 2 = 0.
            PlaneSpec {
                normal: Vec3::new(inv_sqrt2, 0.0, -inv_sqrt2),
                offset: 2.0 * inv_sqrt2,
                class_id: wall,
            },
            // Right facet: x + z - 2 = 0.
            PlaneSpec {
                normal: Vec3::new(inv_sqrt2, 0.0, inv_sqrt2),
                offset: -2.0 * inv_sqrt2,
                class_id: wall,
            },
        ],
        intrinsics: k.clone(),
        speckle_probability: 0.0,
    }
}

/// Depth ramp `z(u) = base + slope * (u - cx)` with the exact surface
/// normals of the back-projected sheet. The surface is gently curved in 3D;
/// its analytic per-pixel normal is `(slope*fx, 0, base - 2z)` normalized
/// and oriented toward the camera.
pub fn slanted_plane_fixture(k: &CameraIntrinsics, base: f64, slope: f64) -> RenderedScene {
    let (w, h) = (k.width, k.height);
    let wall = class_id("wall").unwrap();
    let mut depth = Grid::filled(w, h, 0.0);
    let mut normals = Grid::filled(w, h, Vec3::ZERO);
    for v in 0..h {
        for u in 0..w {
            let z = base + slope * (u as f64 - k.cx);
            assert!(z > 0.0, "slanted fixture leaves the positive depth range");
            depth[(u, v)] = z;
            normals[(u, v)] = Vec3::new(slope * k.fx, 0.0, base - 2.0 * z)
                .normalized()
                .expect("slanted fixture normal is nonzero");
        }
    }
    RenderedScene {
        depth: DepthImage::new(depth, Grid::filled(w, h, true)).unwrap(),
        labels: LabelMap::new(Grid::filled(w, h, wall)).unwrap(),
        normals: NormalMap::new(normals, Grid::filled(w, h, true)).unwrap(),
    }
}

/// Noise level used by the canonical noisy-corner fixture: strong enough
/// that window size visibly matters, weak enough that region growing still
/// coalesces each facet.
pub fn corner_noise(seed: u64) -> KinectNoise {
    KinectNoise {
        sigma_at_1m: 0.006,
        depth_power: 2.0,
        seed,
    }
}
