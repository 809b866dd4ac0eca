//! Semantics-driven planar smoothing: grow regions of consistent class and
//! normal direction, then assign each sufficiently large region its average
//! normal.
//!
//! Growth is deterministic: seeds are scanned in row-major order, the
//! frontier is a FIFO queue, and neighbors are visited left, right, up,
//! down (then the four diagonals under 8-connectivity). A pixel joins a
//! region only while it is within the angle gate of the region's running
//! average normal, which is re-normalized after every admission; pixels
//! rejected at one point may be re-tested later as the average evolves.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::types::{angle_between, Grid, LabelMap, NormalMap, PlanarClassSet, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
    (-1, -1),
    (1, -1),
    (-1, 1),
    (1, 1),
];

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &NEIGHBORS_8[..4],
            Connectivity::Eight => &NEIGHBORS_8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GrowParams {
    /// Admission gate: a pixel joins only while its normal is within this
    /// many degrees of the region's running average.
    pub angle_threshold_deg: f64,
    /// Regions smaller than this keep their original normals.
    pub min_region_size: usize,
    pub connectivity: Connectivity,
    pub planar_classes: PlanarClassSet,
}

impl Default for GrowParams {
    fn default() -> Self {
        Self {
            angle_threshold_deg: 30.0,
            min_region_size: 100,
            connectivity: Connectivity::Four,
            planar_classes: PlanarClassSet::default_planar(),
        }
    }
}

impl GrowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.angle_threshold_deg > 0.0 && self.angle_threshold_deg < 90.0) {
            return Err(Error::config("angle threshold must lie in (0, 90) degrees"));
        }
        if self.min_region_size < 1 {
            return Err(Error::config("min_region_size must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionStats {
    pub size: usize,
    pub mean_normal: Vec3,
    pub class_id: u8,
}

/// Disjoint grown regions; `region_id` is -1 outside any region.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionLabeling {
    pub region_id: Grid<i32>,
    pub regions: Vec<RegionStats>,
}

fn check_same_size(nm: &NormalMap, lm: &LabelMap) -> Result<()> {
    if !nm.normals.same_size(&lm.labels) {
        return Err(Error::shape("normal map and label map differ in size"));
    }
    Ok(())
}

/// Grows angle- and class-consistent regions over the planar classes.
pub fn grow_regions(nm: &NormalMap, lm: &LabelMap, gp: &GrowParams) -> Result<RegionLabeling> {
    check_same_size(nm, lm)?;
    gp.validate()?;
    let (w, h) = (nm.width(), nm.height());
    let mut region_id: Grid<i32> = Grid::filled(w, h, -1);
    let mut regions: Vec<RegionStats> = Vec::new();
    let offsets = gp.connectivity.offsets();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();

    for sv in 0..h {
        for su in 0..w {
            if region_id[(su, sv)] != -1 || !nm.valid[(su, sv)] {
                continue;
            }
            let class = lm.labels[(su, sv)];
            if !gp.planar_classes.contains(class) {
                continue;
            }
            let rid = regions.len() as i32;
            region_id[(su, sv)] = rid;
            let mut sum = nm.normals[(su, sv)];
            let mut size = 1usize;
            queue.clear();
            push_neighbors(su, sv, w, h, offsets, &mut queue);
            while let Some((u, v)) = queue.pop_front() {
                if region_id[(u, v)] != -1 || !nm.valid[(u, v)] || lm.labels[(u, v)] != class {
                    continue;
                }
                let mean = sum
                    .normalized()
                    .expect("running mean of an angle-gated region is nonzero");
                let angle = angle_between(nm.normals[(u, v)], mean)?;
                if angle > gp.angle_threshold_deg {
                    continue;
                }
                region_id[(u, v)] = rid;
                sum = sum + nm.normals[(u, v)];
                size += 1;
                push_neighbors(u, v, w, h, offsets, &mut queue);
            }
            regions.push(RegionStats {
                size,
                mean_normal: sum
                    .normalized()
                    .expect("running mean of an angle-gated region is nonzero"),
                class_id: class,
            });
        }
    }
    Ok(RegionLabeling { region_id, regions })
}

fn push_neighbors(
    u: usize,
    v: usize,
    w: usize,
    h: usize,
    offsets: &[(isize, isize)],
    queue: &mut VecDeque<(usize, usize)>,
) {
    for &(du, dv) in offsets {
        let x = u as isize + du;
        let y = v as isize + dv;
        if x >= 0 && y >= 0 && x < w as isize && y < h as isize {
            queue.push_back((x as usize, y as usize));
        }
    }
}

/// Replaces every member normal of each sufficiently large region with the
/// region's average normal. Everything else, including validity, is
/// unchanged.
pub fn apply_region_normals(nm: &NormalMap, rl: &RegionLabeling, gp: &GrowParams) -> NormalMap {
    assert!(
        nm.normals.same_size(&rl.region_id),
        "region labeling does not match normal map"
    );
    let mut out = nm.clone();
    for v in 0..nm.height() {
        for u in 0..nm.width() {
            let rid = rl.region_id[(u, v)];
            if rid >= 0 {
                let region = &rl.regions[rid as usize];
                if region.size >= gp.min_region_size {
                    out.normals[(u, v)] = region.mean_normal;
                }
            }
        }
    }
    out
}

/// Reference implementation of [`grow_regions`] for equivalence testing:
/// a plain flood fill over a member list, recomputing the running average
/// from scratch at every admission test. Intended for small images.
pub fn grow_regions_oracle(
    nm: &NormalMap,
    lm: &LabelMap,
    gp: &GrowParams,
) -> Result<RegionLabeling> {
    check_same_size(nm, lm)?;
    gp.validate()?;
    let (w, h) = (nm.width(), nm.height());
    let mut region_id: Grid<i32> = Grid::filled(w, h, -1);
    let mut regions: Vec<RegionStats> = Vec::new();
    let offsets = gp.connectivity.offsets();

    for sv in 0..h {
        for su in 0..w {
            if region_id[(su, sv)] != -1 || !nm.valid[(su, sv)] {
                continue;
            }
            let class = lm.labels[(su, sv)];
            if !gp.planar_classes.contains(class) {
                continue;
            }
            let rid = regions.len() as i32;
            region_id[(su, sv)] = rid;
            let mut members = vec![(su, sv)];
            // Plain Vec used as a FIFO via a cursor.
            let mut pending: Vec<(usize, usize)> = Vec::new();
            let mut cursor = 0usize;
            {
                let mut tmp = VecDeque::new();
                push_neighbors(su, sv, w, h, offsets, &mut tmp);
                pending.extend(tmp);
            }
            while cursor < pending.len() {
                let (u, v) = pending[cursor];
                cursor += 1;
                if region_id[(u, v)] != -1 || !nm.valid[(u, v)] || lm.labels[(u, v)] != class {
                    continue;
                }
                let mut sum = Vec3::ZERO;
                for &(mu, mv) in &members {
                    sum = sum + nm.normals[(mu, mv)];
                }
                let mean = sum.normalized()?;
                if angle_between(nm.normals[(u, v)], mean)? > gp.angle_threshold_deg {
                    continue;
                }
                region_id[(u, v)] = rid;
                members.push((u, v));
                let mut tmp = VecDeque::new();
                push_neighbors(u, v, w, h, offsets, &mut tmp);
                pending.extend(tmp);
            }
            let mut sum = Vec3::ZERO;
            for &(mu, mv) in &members {
                sum = sum + nm.normals[(mu, mv)];
            }
            regions.push(RegionStats {
                size: members.len(),
                mean_normal: sum.normalized()?,
                class_id: class,
            });
        }
    }
    Ok(RegionLabeling { region_id, regions })
}

/// True when two labelings induce the same partition, allowing region IDs
/// to be renumbered.
pub fn partitions_equal(a: &RegionLabeling, b: &RegionLabeling) -> bool {
    if !a.region_id.same_size(&b.region_id) {
        return false;
    }
    let mut a_to_b: Vec<Option<i32>> = vec![None; a.regions.len()];
    let mut b_to_a: Vec<Option<i32>> = vec![None; b.regions.len()];
    for (ra, rb) in a.region_id.iter().zip(b.region_id.iter()) {
        match (*ra, *rb) {
            (-1, -1) => {}
            (-1, _) | (_, -1) => return false,
            (ra, rb) => {
                match a_to_b[ra as usize] {
                    None => a_to_b[ra as usize] = Some(rb),
                    Some(prev) if prev == rb => {}
                    Some(_) => return false,
                }
                match b_to_a[rb as usize] {
                    None => b_to_a[rb as usize] = Some(ra),
                    Some(prev) if prev == ra => {}
                    Some(_) => return false,
                }
            }
        }
    }
    true
}
