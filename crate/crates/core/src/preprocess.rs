//! Depth-map conditioning ahead of normal estimation: hole filling,
//! edge-preserving smoothing, training-mask generation, and the
//! discontinuity/distance maps that bound the adaptive window.

use crate::error::{Error, Result};
use crate::types::{DepthImage, Grid};

/// Distance value convention when a pixel sees no discontinuity at all:
/// its distance becomes `distance-to-image-border + DISTANCE_CAP`, which is
/// effectively unbounded (windows are clamped by image bounds anyway).
pub const DISTANCE_CAP: u32 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessParams {
    /// Maximum Chebyshev radius a hole may be filled across, in pixels.
    pub fill_max_radius: usize,
    /// Square window for the edge-aware median, odd, in pixels.
    pub median_window: usize,
    /// Relative depth step treated as a discontinuity (fraction of depth).
    pub depth_change_factor: f64,
    /// Trusted sensor range in meters; pixels outside are masked out of
    /// training.
    pub min_depth: f64,
    pub max_depth: f64,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            fill_max_radius: 8,
            median_window: 5,
            depth_change_factor: 0.02,
            min_depth: 0.3,
            max_depth: 10.0,
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        if self.median_window.is_multiple_of(2) || self.median_window == 0 {
            return Err(Error::config("median_window must be odd and >= 1"));
        }
        if self.depth_change_factor.is_nan() || self.depth_change_factor <= 0.0 {
            return Err(Error::config("depth_change_factor must be positive"));
        }
        if !(0.0 < self.min_depth && self.min_depth < self.max_depth) {
            return Err(Error::config("require 0 < min_depth < max_depth"));
        }
        Ok(())
    }
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fills invalid pixels from the median of nearby valid depths.
///
/// The square window around each hole grows one pixel at a time until it
/// holds at least 3 valid depths or reaches `fill_max_radius`; the hole is
/// filled with the median of whatever valid depths the final window holds
/// (if any). Originally valid pixels are never modified. The returned grid
/// marks which pixels were fabricated; they support normal estimation but
/// are excluded from training masks.
pub fn fill_holes(d: &DepthImage, p: &PreprocessParams) -> (DepthImage, Grid<bool>) {
    let (w, h) = (d.width(), d.height());
    let mut out = d.clone();
    let mut filled = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            if d.valid[(u, v)] {
                continue;
            }
            let mut vals: Vec<f64> = Vec::new();
            for radius in 1..=p.fill_max_radius {
                collect_ring(d, u, v, radius, &mut vals);
                if vals.len() >= 3 {
                    break;
                }
            }
            if !vals.is_empty() {
                out.depth[(u, v)] = median_of(vals);
                out.valid[(u, v)] = true;
                filled[(u, v)] = true;
            }
        }
    }
    (out, filled)
}

/// Appends valid depths on the ring at Chebyshev distance `radius`.
fn collect_ring(d: &DepthImage, u: usize, v: usize, radius: usize, vals: &mut Vec<f64>) {
    let (w, h) = (d.width() as isize, d.height() as isize);
    let (u, v, r) = (u as isize, v as isize, radius as isize);
    for dv in -r..=r {
        let y = v + dv;
        if y < 0 || y >= h {
            continue;
        }
        let on_horizontal_edge = dv.abs() == r;
        for du in -r..=r {
            if !on_horizontal_edge && du.abs() != r {
                continue;
            }
            let x = u + du;
            if x < 0 || x >= w {
                continue;
            }
            if d.valid[(x as usize, y as usize)] {
                vals.push(d.depth[(x as usize, y as usize)]);
            }
        }
    }
}

/// Edge-aware median smoothing: each valid pixel becomes the median of the
/// valid neighbors in its window, excluding neighbors that differ from the
/// center by more than `depth_change_factor` times the center depth. When
/// the surviving set is not a majority of the window's valid pixels the
/// center itself is the outlier, and the plain median of all valid window
/// pixels applies instead (this is what removes spikes). Validity is
/// unchanged.
pub fn smooth_depth(d: &DepthImage, p: &PreprocessParams) -> DepthImage {
    let (w, h) = (d.width(), d.height());
    let half = (p.median_window / 2) as isize;
    let mut out = d.clone();
    for v in 0..h {
        for u in 0..w {
            if !d.valid[(u, v)] {
                continue;
            }
            let zc = d.depth[(u, v)];
            let limit = p.depth_change_factor * zc;
            let mut gated: Vec<f64> = Vec::new();
            let mut all: Vec<f64> = Vec::new();
            for dv in -half..=half {
                let y = v as isize + dv;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for du in -half..=half {
                    let x = u as isize + du;
                    if x < 0 || x >= w as isize {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if !d.valid[(x, y)] {
                        continue;
                    }
                    let z = d.depth[(x, y)];
                    all.push(z);
                    if (z - zc).abs() <= limit {
                        gated.push(z);
                    }
                }
            }
            out.depth[(u, v)] = if gated.len() * 2 > all.len() {
                median_of(gated)
            } else {
                median_of(all)
            };
        }
    }
    out
}

/// Pixels trusted for loss computation: raw-valid, never hole-filled, and
/// inside the sensor's trusted depth range.
pub fn training_valid_mask(
    d_raw: &DepthImage,
    filled: &Grid<bool>,
    p: &PreprocessParams,
) -> Grid<bool> {
    assert!(d_raw.depth.same_size(filled), "mask grids differ in size");
    let (w, h) = (d_raw.width(), d_raw.height());
    let mut mask = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            let z = d_raw.depth[(u, v)];
            mask[(u, v)] = d_raw.valid[(u, v)]
                && !filled[(u, v)]
                && z >= p.min_depth
                && z <= p.max_depth;
        }
    }
    mask
}

/// Flags depth discontinuities: a pixel is flagged if it is invalid, has an
/// invalid 8-neighbor, or differs from any 8-neighbor by more than
/// `depth_change_factor` times its own depth.
pub fn depth_change_map(d: &DepthImage, p: &PreprocessParams) -> Grid<bool> {
    let (w, h) = (d.width(), d.height());
    let mut flags = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            if !d.valid[(u, v)] {
                flags[(u, v)] = true;
                continue;
            }
            let z = d.depth[(u, v)];
            let limit = p.depth_change_factor * z;
            'neigh: for dv in -1isize..=1 {
                for du in -1isize..=1 {
                    if du == 0 && dv == 0 {
                        continue;
                    }
                    let (x, y) = (u as isize + du, v as isize + dv);
                    if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if !d.valid[(x, y)] || (d.depth[(x, y)] - z).abs() > limit {
                        flags[(u, v)] = true;
                        break 'neigh;
                    }
                }
            }
        }
    }
    flags
}

/// Per-pixel Chebyshev distance to the nearest flagged discontinuity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMap {
    pub dist: Grid<u32>,
}

/// Exact Chebyshev distance transform via a two-pass chamfer sweep.
/// Flagged pixels get 0. When no flag is anywhere near, the value falls back
/// to `distance-to-image-border + DISTANCE_CAP` (see [`DISTANCE_CAP`]).
pub fn distance_map(changes: &Grid<bool>) -> DistanceMap {
    let (w, h) = (changes.width(), changes.height());
    let mut dist: Grid<u32> = Grid::filled(w, h, u32::MAX);
    for v in 0..h {
        for u in 0..w {
            if changes[(u, v)] {
                dist[(u, v)] = 0;
            }
        }
    }
    // Forward sweep: causal Chebyshev neighbors.
    for v in 0..h {
        for u in 0..w {
            let mut best = dist[(u, v)];
            for (du, dv) in [(-1isize, 0isize), (-1, -1), (0, -1), (1, -1)] {
                let (x, y) = (u as isize + du, v as isize + dv);
                if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                    continue;
                }
                best = best.min(dist[(x as usize, y as usize)].saturating_add(1));
            }
            dist[(u, v)] = best;
        }
    }
    // Backward sweep: anti-causal neighbors.
    for v in (0..h).rev() {
        for u in (0..w).rev() {
            let mut best = dist[(u, v)];
            for (du, dv) in [(1isize, 0isize), (-1, 1), (0, 1), (1, 1)] {
                let (x, y) = (u as isize + du, v as isize + dv);
                if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                    continue;
                }
                best = best.min(dist[(x as usize, y as usize)].saturating_add(1));
            }
            dist[(u, v)] = best;
        }
    }
    for v in 0..h {
        for u in 0..w {
            let border = u.min(v).min(w - 1 - u).min(h - 1 - v) as u32;
            let capped = border + DISTANCE_CAP;
            if dist[(u, v)] > capped {
                dist[(u, v)] = capped;
            }
        }
    }
    DistanceMap { dist }
}
