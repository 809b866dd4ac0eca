//! Surface normal estimation from an organized point cloud.
//!
//! Normals come from the covariance of the back-projected points inside a
//! depth-adaptive square window. Ten summed-area tables (first and second
//! moments plus a count) make every window query O(1), so runtime is
//! independent of the smoothing parameter; a direct-summation twin of the
//! estimator serves as the equivalence oracle.

use crate::accum::CompensatedSum;
use crate::eig3::{smallest_eigenpair, Mat3};
use crate::error::{Error, Result};
use crate::preprocess::DistanceMap;
use crate::types::{CameraIntrinsics, DepthImage, Grid, NormalMap, Vec3};

/// Two smallest covariance eigenvalues below this mark a pixel as
/// rank-deficient (no recoverable normal direction).
const RANK_DEFICIENCY_TOL: f64 = 1e-12;

/// Organized point cloud: back-projected points on the image lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct PointGrid {
    pub points: Grid<Vec3>,
    pub valid: Grid<bool>,
}

impl PointGrid {
    /// Back-projects every valid depth pixel through the pinhole model.
    pub fn from_depth(d: &DepthImage, k: &CameraIntrinsics) -> Result<Self> {
        if d.width() != k.width || d.height() != k.height {
            return Err(Error::shape(format!(
                "depth {}x{} does not match intrinsics {}x{}",
                d.width(),
                d.height(),
                k.width,
                k.height
            )));
        }
        let mut points = Grid::filled(d.width(), d.height(), Vec3::ZERO);
        for v in 0..d.height() {
            for u in 0..d.width() {
                if d.valid[(u, v)] {
                    points[(u, v)] = back_project(u as f64, v as f64, d.depth[(u, v)], k)?;
                }
            }
        }
        Ok(Self {
            points,
            valid: d.valid.clone(),
        })
    }

    pub fn width(&self) -> usize {
        self.points.width()
    }

    pub fn height(&self) -> usize {
        self.points.height()
    }
}

/// Pinhole back-projection of pixel (u, v) at depth z, camera frame with +z
/// forward.
pub fn back_project(u: f64, v: f64, z: f64, k: &CameraIntrinsics) -> Result<Vec3> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::InvalidDepth(z));
    }
    Ok(Vec3::new(
        (u - k.cx) * z / k.fx,
        (v - k.cy) * z / k.fy,
        z,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalParams {
    /// Smoothing strength: full window size in pixels for a point at
    /// `z_ref`. 30 suits real sensor data; 10 suits clean synthetic depth.
    pub sigma: f64,
    /// Depth at which `sigma` is the full window size, meters.
    pub z_ref: f64,
    /// Hard cap on the half window, pixels.
    pub max_half_window: usize,
    /// Minimum number of valid points a window must hold.
    pub min_points: usize,
}

impl Default for NormalParams {
    fn default() -> Self {
        Self {
            sigma: 30.0,
            z_ref: 1.0,
            max_half_window: 50,
            min_points: 9,
        }
    }
}

impl NormalParams {
    /// Parameters tuned for clean synthetic depth.
    pub fn synthetic() -> Self {
        Self {
            sigma: 10.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::config("sigma must be positive"));
        }
        if self.max_half_window < 1 {
            return Err(Error::config("max_half_window must be >= 1"));
        }
        if self.min_points < 3 {
            return Err(Error::config("min_points must be >= 3"));
        }
        Ok(())
    }
}

/// Half window for a point at depth `z`, grown linearly with depth so the
/// metric support stays roughly constant, then clamped so the window never
/// crosses the nearest flagged discontinuity.
pub fn adaptive_half_window(
    z: f64,
    dist: u32,
    np: &NormalParams,
    _k: &CameraIntrinsics,
) -> usize {
    debug_assert!(z > 0.0);
    let h = (np.sigma / 2.0 * z / np.z_ref).round();
    let h = (h.max(1.0) as usize).min(np.max_half_window);
    h.min(dist as usize)
}

/// First and second moments of the valid points in a window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WindowMoments {
    pub count: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub sxx: f64,
    pub syy: f64,
    pub szz: f64,
    pub sxy: f64,
    pub sxz: f64,
    pub syz: f64,
}

impl WindowMoments {
    pub fn mean(&self) -> Vec3 {
        let inv = 1.0 / self.count;
        Vec3::new(self.sx * inv, self.sy * inv, self.sz * inv)
    }

    /// Covariance from raw moments: `Σppᵀ/n − μμᵀ`.
    pub fn covariance(&self) -> Mat3 {
        let inv = 1.0 / self.count;
        let m = self.mean();
        let cxx = self.sxx * inv - m.x * m.x;
        let cyy = self.syy * inv - m.y * m.y;
        let czz = self.szz * inv - m.z * m.z;
        let cxy = self.sxy * inv - m.x * m.y;
        let cxz = self.sxz * inv - m.x * m.z;
        let cyz = self.syz * inv - m.y * m.z;
        [[cxx, cxy, cxz], [cxy, cyy, cyz], [cxz, cyz, czz]]
    }
}

/// One summed-area table with compensated construction. Entry (i, j) holds
/// the sum over all pixels with u < i and v < j.
#[derive(Clone, Debug)]
struct Sat {
    width1: usize,
    table: Vec<f64>,
}

impl Sat {
    fn build(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let width1 = width + 1;
        let mut table = vec![0.0; width1 * (height + 1)];
        // Row prefixes feed per-column accumulators, so construction never
        // subtracts; carries persist across rows.
        let mut columns = vec![CompensatedSum::new(); width1];
        for v in 0..height {
            let mut row = CompensatedSum::new();
            for u in 0..width {
                row.add(f(u, v));
                let col = &mut columns[u + 1];
                col.add(row.total());
                table[(v + 1) * width1 + (u + 1)] = col.total();
            }
        }
        Self { width1, table }
    }

    /// Inclusive rectangle sum.
    #[inline]
    fn query(&self, u0: usize, v0: usize, u1: usize, v1: usize) -> f64 {
        let w1 = self.width1;
        self.table[(v1 + 1) * w1 + (u1 + 1)] - self.table[v0 * w1 + (u1 + 1)]
            - self.table[(v1 + 1) * w1 + u0]
            + self.table[v0 * w1 + u0]
    }
}

/// Summed-area tables over the organized point cloud: Σx, Σy, Σz, Σx², Σy²,
/// Σz², Σxy, Σxz, Σyz and a valid-pixel count. Invalid pixels contribute
/// zero and are not counted.
pub struct IntegralStats {
    width: usize,
    height: usize,
    sx: Sat,
    sy: Sat,
    sz: Sat,
    sxx: Sat,
    syy: Sat,
    szz: Sat,
    sxy: Sat,
    sxz: Sat,
    syz: Sat,
    count: Sat,
}

/// Builds the ten summed-area tables for `pg`.
pub fn build_integral_stats(pg: &PointGrid) -> IntegralStats {
    let (w, h) = (pg.width(), pg.height());
    let value = |u: usize, v: usize, f: &dyn Fn(Vec3) -> f64| -> f64 {
        if pg.valid[(u, v)] {
            f(pg.points[(u, v)])
        } else {
            0.0
        }
    };
    IntegralStats {
        width: w,
        height: h,
        sx: Sat::build(w, h, |u, v| value(u, v, &|p| p.x)),
        sy: Sat::build(w, h, |u, v| value(u, v, &|p| p.y)),
        sz: Sat::build(w, h, |u, v| value(u, v, &|p| p.z)),
        sxx: Sat::build(w, h, |u, v| value(u, v, &|p| p.x * p.x)),
        syy: Sat::build(w, h, |u, v| value(u, v, &|p| p.y * p.y)),
        szz: Sat::build(w, h, |u, v| value(u, v, &|p| p.z * p.z)),
        sxy: Sat::build(w, h, |u, v| value(u, v, &|p| p.x * p.y)),
        sxz: Sat::build(w, h, |u, v| value(u, v, &|p| p.x * p.z)),
        syz: Sat::build(w, h, |u, v| value(u, v, &|p| p.y * p.z)),
        count: Sat::build(w, h, |u, v| if pg.valid[(u, v)] { 1.0 } else { 0.0 }),
    }
}

impl IntegralStats {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Moments over the inclusive pixel rectangle [u0, u1] x [v0, v1].
    pub fn query(&self, u0: usize, v0: usize, u1: usize, v1: usize) -> WindowMoments {
        assert!(u0 <= u1 && v0 <= v1 && u1 < self.width && v1 < self.height);
        WindowMoments {
            count: self.count.query(u0, v0, u1, v1),
            sx: self.sx.query(u0, v0, u1, v1),
            sy: self.sy.query(u0, v0, u1, v1),
            sz: self.sz.query(u0, v0, u1, v1),
            sxx: self.sxx.query(u0, v0, u1, v1),
            syy: self.syy.query(u0, v0, u1, v1),
            szz: self.szz.query(u0, v0, u1, v1),
            sxy: self.sxy.query(u0, v0, u1, v1),
            sxz: self.sxz.query(u0, v0, u1, v1),
            syz: self.syz.query(u0, v0, u1, v1),
        }
    }
}

/// Shared tail of both estimators: moments -> oriented unit normal.
/// `None` when the window is under-populated or rank-deficient.
fn normal_from_moments(m: &WindowMoments, point: Vec3, min_points: usize) -> Option<Vec3> {
    if m.count < min_points as f64 {
        return None;
    }
    let c = m.covariance();
    let (values, v) = smallest_eigenpair(&c);
    if values[0] < RANK_DEFICIENCY_TOL && values[1] < RANK_DEFICIENCY_TOL {
        return None;
    }
    // Orient toward the camera at the origin.
    if v.dot(point) > 0.0 {
        Some(-v)
    } else {
        Some(v)
    }
}

fn check_dimensions(pg: &PointGrid, dm: &DistanceMap, k: &CameraIntrinsics) -> Result<()> {
    if !pg.points.same_size(&dm.dist) || pg.width() != k.width || pg.height() != k.height {
        return Err(Error::shape("point grid, distance map, and intrinsics disagree"));
    }
    Ok(())
}

/// Estimates a normal per valid pixel from the covariance of the points in
/// its depth-adaptive window, using O(1) integral-image queries.
pub fn estimate_normals(
    pg: &PointGrid,
    stats: &IntegralStats,
    dm: &DistanceMap,
    np: &NormalParams,
    k: &CameraIntrinsics,
) -> Result<NormalMap> {
    check_dimensions(pg, dm, k)?;
    if stats.width() != pg.width() || stats.height() != pg.height() {
        return Err(Error::shape("integral stats do not match point grid"));
    }
    let (w, h) = (pg.width(), pg.height());
    let mut out = NormalMap::invalid(w, h);
    for v in 0..h {
        for u in 0..w {
            if !pg.valid[(u, v)] {
                continue;
            }
            let p = pg.points[(u, v)];
            let half = adaptive_half_window(p.z, dm.dist[(u, v)], np, k);
            let u0 = u.saturating_sub(half);
            let v0 = v.saturating_sub(half);
            let u1 = (u + half).min(w - 1);
            let v1 = (v + half).min(h - 1);
            let m = stats.query(u0, v0, u1, v1);
            if let Some(n) = normal_from_moments(&m, p, np.min_points) {
                out.normals[(u, v)] = n;
                out.valid[(u, v)] = true;
            }
        }
    }
    Ok(out)
}

/// Same contract as [`estimate_normals`], but every window is summed
/// directly. Quadratic in the window size; used as the equivalence oracle.
pub fn estimate_normals_bruteforce(
    pg: &PointGrid,
    dm: &DistanceMap,
    np: &NormalParams,
    k: &CameraIntrinsics,
) -> Result<NormalMap> {
    check_dimensions(pg, dm, k)?;
    let (w, h) = (pg.width(), pg.height());
    let mut out = NormalMap::invalid(w, h);
    for v in 0..h {
        for u in 0..w {
            if !pg.valid[(u, v)] {
                continue;
            }
            let p = pg.points[(u, v)];
            let half = adaptive_half_window(p.z, dm.dist[(u, v)], np, k);
            let u0 = u.saturating_sub(half);
            let v0 = v.saturating_sub(half);
            let u1 = (u + half).min(w - 1);
            let v1 = (v + half).min(h - 1);
            let mut m = WindowMoments::default();
            for y in v0..=v1 {
                for x in u0..=u1 {
                    if !pg.valid[(x, y)] {
                        continue;
                    }
                    let q = pg.points[(x, y)];
                    m.count += 1.0;
                    m.sx += q.x;
                    m.sy += q.y;
                    m.sz += q.z;
                    m.sxx += q.x * q.x;
                    m.syy += q.y * q.y;
                    m.szz += q.z * q.z;
                    m.sxy += q.x * q.y;
                    m.sxz += q.x * q.z;
                    m.syz += q.y * q.z;
                }
            }
            if let Some(n) = normal_from_moments(&m, p, np.min_points) {
                out.normals[(u, v)] = n;
                out.valid[(u, v)] = true;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{depth_change_map, distance_map, PreprocessParams};
    use crate::types::DepthImage;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_intrinsics(w: usize, h: usize) -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, w as f64 / 2.0, h as f64 / 2.0, w, h).unwrap()
    }

    #[test]
    fn back_project_examples() {
        let k = test_intrinsics(320, 240);
        let p = back_project(k.cx, k.cy, 2.0, &k).unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.0, 2.0));
        let p = back_project(k.cx + k.fx, k.cy, 1.0, &k).unwrap();
        assert_eq!(p, Vec3::new(1.0, 0.0, 1.0));
        let p = back_project(k.cx, k.cy - k.fy, 3.0, &k).unwrap();
        assert_eq!(p, Vec3::new(0.0, -3.0, 3.0));
        assert!(matches!(
            back_project(0.0, 0.0, 0.0, &k),
            Err(Error::InvalidDepth(_))
        ));
    }

    #[test]
    fn adaptive_half_window_examples() {
        let k = test_intrinsics(320, 240);
        let np30 = NormalParams::default();
        let np10 = NormalParams::synthetic();
        assert_eq!(adaptive_half_window(1.0, 100, &np30, &k), 15);
        assert_eq!(adaptive_half_window(1.0, 100, &np10, &k), 5);
        assert_eq!(adaptive_half_window(2.0, 3, &np30, &k), 3);
        // Clamps: lower bound 1, upper bound max_half_window.
        assert_eq!(adaptive_half_window(0.01, 100, &np30, &k), 1);
        assert_eq!(adaptive_half_window(9.0, 1000, &np30, &k), 50);
    }

    fn depth_image(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> Option<f64>) -> DepthImage {
        let mut depth = Grid::filled(w, h, 0.0);
        let mut valid = Grid::filled(w, h, false);
        for v in 0..h {
            for u in 0..w {
                if let Some(z) = f(u, v) {
                    depth[(u, v)] = z;
                    valid[(u, v)] = true;
                }
            }
        }
        DepthImage::new(depth, valid).unwrap()
    }

    fn full_distance(w: usize, h: usize) -> DistanceMap {
        distance_map(&Grid::filled(w, h, false))
    }

    #[test]
    fn integral_stats_match_direct_sums_on_small_grid() {
        let k = test_intrinsics(2, 2);
        let d = depth_image(2, 2, |u, v| Some(1.0 + 0.1 * (u + 2 * v) as f64));
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let m = stats.query(0, 0, 1, 1);
        let mut expect = WindowMoments::default();
        for v in 0..2 {
            for u in 0..2 {
                let p = pg.points[(u, v)];
                expect.count += 1.0;
                expect.sx += p.x;
                expect.sy += p.y;
                expect.sz += p.z;
                expect.sxx += p.x * p.x;
                expect.syy += p.y * p.y;
                expect.szz += p.z * p.z;
                expect.sxy += p.x * p.y;
                expect.sxz += p.x * p.z;
                expect.syz += p.y * p.z;
            }
        }
        assert!((m.count - expect.count).abs() < 1e-12);
        assert!((m.sx - expect.sx).abs() < 1e-12);
        assert!((m.szz - expect.szz).abs() < 1e-12);
        assert!((m.syz - expect.syz).abs() < 1e-12);
    }

    #[test]
    fn integral_stats_empty_validity_is_all_zero() {
        let k = test_intrinsics(4, 3);
        let d = DepthImage::new(Grid::filled(4, 3, 0.0), Grid::filled(4, 3, false)).unwrap();
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let m = stats.query(0, 0, 3, 2);
        assert_eq!(m.count, 0.0);
        assert_eq!(m.sx, 0.0);
        assert_eq!(m.szz, 0.0);
    }

    #[test]
    fn integral_count_matches_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = test_intrinsics(17, 13);
        let d = depth_image(17, 13, |_, _| {
            if rng.random::<f64>() < 0.7 {
                Some(rng.random_range(0.5..3.0))
            } else {
                None
            }
        });
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let u0 = rng.random_range(0..17);
            let u1 = rng.random_range(u0..17);
            let v0 = rng.random_range(0..13);
            let v1 = rng.random_range(v0..13);
            let m = stats.query(u0, v0, u1, v1);
            let mut n = 0usize;
            for v in v0..=v1 {
                for u in u0..=u1 {
                    if pg.valid[(u, v)] {
                        n += 1;
                    }
                }
            }
            assert_eq!(m.count, n as f64);
        }
    }

    #[test]
    fn fronto_parallel_plane_recovers_minus_z() {
        let (w, h) = (64, 48);
        let k = test_intrinsics(w, h);
        let d = depth_image(w, h, |_, _| Some(2.0));
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let nm = estimate_normals(&pg, &stats, &full_distance(w, h), &NormalParams::default(), &k)
            .unwrap();
        let target = Vec3::new(0.0, 0.0, -1.0);
        for v in 5..h - 5 {
            for u in 5..w - 5 {
                assert!(nm.valid[(u, v)]);
                let ang = crate::types::angle_between(nm.normals[(u, v)], target).unwrap();
                assert!(ang < 0.1, "angle {ang} at ({u},{v})");
            }
        }
    }

    /// Per-pixel least-squares plane fit on the exact point grid, computed
    /// with two-pass centered covariance and Jacobi-free power iteration;
    /// independent of the estimator's raw-moment + closed-form path.
    fn plane_fit_oracle(pg: &PointGrid, u: usize, v: usize, half: usize) -> Vec3 {
        let (w, h) = (pg.width(), pg.height());
        let u0 = u.saturating_sub(half);
        let v0 = v.saturating_sub(half);
        let u1 = (u + half).min(w - 1);
        let v1 = (v + half).min(h - 1);
        let mut mean = Vec3::ZERO;
        let mut n = 0.0;
        for y in v0..=v1 {
            for x in u0..=u1 {
                if pg.valid[(x, y)] {
                    mean = mean + pg.points[(x, y)];
                    n += 1.0;
                }
            }
        }
        mean = mean * (1.0 / n);
        let mut c = [[0.0f64; 3]; 3];
        for y in v0..=v1 {
            for x in u0..=u1 {
                if pg.valid[(x, y)] {
                    let q = pg.points[(x, y)] - mean;
                    let e = [q.x, q.y, q.z];
                    for i in 0..3 {
                        for j in 0..3 {
                            c[i][j] += e[i] * e[j];
                        }
                    }
                }
            }
        }
        // Smallest eigenvector by inverse deflation: power-iterate on
        // (tr(C) I - C), whose largest eigenvalue pairs with C's smallest.
        let tr = c[0][0] + c[1][1] + c[2][2];
        let m = [
            [tr - c[0][0], -c[0][1], -c[0][2]],
            [-c[1][0], tr - c[1][1], -c[1][2]],
            [-c[2][0], -c[2][1], tr - c[2][2]],
        ];
        let mut x = Vec3::new(1.0, 0.7, -0.3);
        for _ in 0..200 {
            let y = crate::eig3::mat_vec(&m, x);
            x = y * (1.0 / y.norm());
        }
        if x.dot(pg.points[(u, v)]) > 0.0 {
            -x
        } else {
            x
        }
    }

    #[test]
    fn slanted_surface_matches_plane_fit_oracle() {
        let (w, h) = (96, 72);
        let k = CameraIntrinsics::new(500.0, 500.0, 48.0, 36.0, w, h).unwrap();
        let d = depth_image(w, h, |u, _| Some(2.0 + 0.002 * (u as f64 - 48.0)));
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let np = NormalParams::default();
        let nm =
            estimate_normals(&pg, &stats, &full_distance(w, h), &np, &k).unwrap();
        let margin = 36;
        for v in (margin..h - margin).step_by(3) {
            for u in (margin..w - margin).step_by(3) {
                assert!(nm.valid[(u, v)]);
                let half = adaptive_half_window(pg.points[(u, v)].z, u32::MAX, &np, &k);
                let oracle = plane_fit_oracle(&pg, u, v, half);
                let ang = crate::types::angle_between(nm.normals[(u, v)], oracle).unwrap();
                assert!(ang < 0.5, "angle {ang} vs oracle at ({u},{v})");
            }
        }
    }

    #[test]
    fn under_populated_window_is_invalid() {
        let (w, h) = (9, 9);
        let k = test_intrinsics(w, h);
        // Two valid pixels only: every window has n = 2 < min_points.
        let d = depth_image(w, h, |u, v| {
            if (u, v) == (4, 4) || (u, v) == (5, 4) {
                Some(2.0)
            } else {
                None
            }
        });
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let nm = estimate_normals(&pg, &stats, &full_distance(w, h), &NormalParams::default(), &k)
            .unwrap();
        assert!(nm.valid.iter().all(|&ok| !ok));
    }

    fn random_scene(seed: u64, w: usize, h: usize) -> (DepthImage, CameraIntrinsics) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = test_intrinsics(w, h);
        let base = rng.random_range(1.5..3.0);
        let gu = rng.random_range(-0.002..0.002);
        let gv = rng.random_range(-0.002..0.002);
        let d = depth_image(w, h, |u, v| {
            if rng.random::<f64>() < 0.05 {
                None
            } else {
                let z = base
                    + gu * (u as f64 - w as f64 / 2.0)
                    + gv * (v as f64 - h as f64 / 2.0)
                    + rng.random_range(-0.001..0.001);
                Some(z)
            }
        });
        (d, k)
    }

    #[test]
    fn integral_equals_bruteforce_on_random_speckled_scenes() {
        for seed in 0..4 {
            let (d, k) = random_scene(seed, 64, 48);
            let flags = depth_change_map(&d, &PreprocessParams::default());
            let dm = distance_map(&flags);
            let pg = PointGrid::from_depth(&d, &k).unwrap();
            let stats = build_integral_stats(&pg);
            let np = NormalParams::default();
            let fast = estimate_normals(&pg, &stats, &dm, &np, &k).unwrap();
            let slow = estimate_normals_bruteforce(&pg, &dm, &np, &k).unwrap();
            for v in 0..48 {
                for u in 0..64 {
                    assert_eq!(fast.valid[(u, v)], slow.valid[(u, v)], "validity at ({u},{v})");
                    if fast.valid[(u, v)] {
                        let a = fast.normals[(u, v)];
                        let b = slow.normals[(u, v)];
                        assert!(
                            (a.x - b.x).abs() <= 1e-6
                                && (a.y - b.y).abs() <= 1e-6
                                && (a.z - b.z).abs() <= 1e-6,
                            "normals diverge at ({u},{v}): {a:?} vs {b:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn orientation_faces_camera() {
        let (d, k) = random_scene(9, 48, 36);
        let flags = depth_change_map(&d, &PreprocessParams::default());
        let dm = distance_map(&flags);
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let nm = estimate_normals(&pg, &stats, &dm, &NormalParams::default(), &k).unwrap();
        for v in 0..36 {
            for u in 0..48 {
                if nm.valid[(u, v)] {
                    assert!(nm.normals[(u, v)].dot(pg.points[(u, v)]) < 0.0);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let k = test_intrinsics(8, 8);
        let d = depth_image(8, 8, |_, _| Some(2.0));
        let pg = PointGrid::from_depth(&d, &k).unwrap();
        let stats = build_integral_stats(&pg);
        let wrong_dm = full_distance(9, 9);
        assert!(matches!(
            estimate_normals(&pg, &stats, &wrong_dm, &NormalParams::default(), &k),
            Err(Error::Shape(_))
        ));
    }

    proptest! {
        /// With the discontinuity bound out of the way, the half window is
        /// non-decreasing in depth.
        #[test]
        fn window_monotone_in_depth(z1 in 0.05f64..9.0, dz in 0.0f64..1.0) {
            let k = test_intrinsics(320, 240);
            let np = NormalParams::default();
            let h1 = adaptive_half_window(z1, u32::MAX, &np, &k);
            let h2 = adaptive_half_window(z1 + dz, u32::MAX, &np, &k);
            prop_assert!(h2 >= h1);
        }
    }
}
