//! Shared domain types: vectors, camera intrinsics, and the image-lattice
//! grids (depth, normals, labels) the whole pipeline is defined over.

use std::collections::BTreeSet;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label value marking pixels without a semantic annotation.
pub const UNLABELED: u8 = 255;

/// Number of semantic classes: the 13 indoor labels plus one background slot.
pub const NUM_CLASSES: usize = 14;

/// Class vocabulary. Index 0 is the background slot; 1..=13 are the 13
/// indoor labels in alphabetical order.
pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "background",
    "bed",
    "books",
    "ceiling",
    "chair",
    "floor",
    "furniture",
    "objects",
    "picture",
    "sofa",
    "table",
    "tv",
    "window",
    "wall",
];

/// Looks up a class ID by name.
pub fn class_id(name: &str) -> Option<u8> {
    CLASS_NAMES.iter().position(|&n| n == name).map(|i| i as u8)
}

/// Looks up a class name by ID. `None` for out-of-vocabulary IDs.
pub fn class_name(id: u8) -> Option<&'static str> {
    CLASS_NAMES.get(id as usize).copied()
}

/// 3-vector in camera coordinates (meters when used as a point, unit length
/// when used as a normal).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Returns `self / ‖self‖`. Vectors with norm at or below 1e-12 are
    /// rejected as degenerate.
    pub fn normalized(self) -> Result<Vec3> {
        if !self.is_finite() {
            return Err(Error::NonFiniteVector);
        }
        let n = self.norm();
        if n <= 1e-12 {
            return Err(Error::DegenerateVector);
        }
        Ok(self * (1.0 / n))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Unsigned geodesic angle between two unit vectors, in degrees in [0, 180].
///
/// The dot product is clamped to [-1, 1] before `acos` so rounding on
/// nearly-identical inputs cannot produce NaN.
pub fn angle_between(a: Vec3, b: Vec3) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFiniteVector);
    }
    Ok(a.dot(b).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Row-major rectangular grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::shape(format!(
                "grid data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_size<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    /// Iterates `(u, v, &value)` in row-major order.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, t)| (i % w, i / w, t))
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    /// Index by `(u, v)` = (column, row).
    #[inline]
    fn index(&self, (u, v): (usize, usize)) -> &T {
        assert!(u < self.width && v < self.height, "grid index out of bounds");
        &self.data[v * self.width + u]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    #[inline]
    fn index_mut(&mut self, (u, v): (usize, usize)) -> &mut T {
        assert!(u < self.width && v < self.height, "grid index out of bounds");
        &mut self.data[v * self.width + u]
    }
}

/// Pinhole camera parameters mapping pixels to 3D rays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::format("focal lengths must be positive"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::format("image dimensions must be positive"));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64) {
            return Err(Error::format("cx outside image"));
        }
        if !(0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(Error::format("cy outside image"));
        }
        Ok(())
    }
}

/// Per-pixel metric depth with a validity mask. Invalid pixels carry no
/// depth information (their stored value is ignored).
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub depth: Grid<f64>,
    pub valid: Grid<bool>,
}

impl DepthImage {
    pub fn new(depth: Grid<f64>, valid: Grid<bool>) -> Result<Self> {
        if !depth.same_size(&valid) {
            return Err(Error::shape("depth and validity grids differ in size"));
        }
        for (z, &ok) in depth.iter().zip(valid.iter()) {
            if ok && !(z.is_finite() && *z > 0.0) {
                return Err(Error::format(format!(
                    "valid pixel carries non-positive or non-finite depth {z}"
                )));
            }
        }
        Ok(Self { depth, valid })
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }
}

/// Per-pixel unit normals with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap {
    pub normals: Grid<Vec3>,
    pub valid: Grid<bool>,
}

impl NormalMap {
    pub fn new(normals: Grid<Vec3>, valid: Grid<bool>) -> Result<Self> {
        if !normals.same_size(&valid) {
            return Err(Error::shape("normal and validity grids differ in size"));
        }
        Ok(Self { normals, valid })
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            normals: Grid::filled(width, height, Vec3::ZERO),
            valid: Grid::filled(width, height, false),
        }
    }

    pub fn width(&self) -> usize {
        self.normals.width()
    }

    pub fn height(&self) -> usize {
        self.normals.height()
    }
}

/// Per-pixel semantic class IDs in {0..13} plus [`UNLABELED`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub labels: Grid<u8>,
}

impl LabelMap {
    pub fn new(labels: Grid<u8>) -> Result<Self> {
        for &id in labels.iter() {
            if id != UNLABELED && id as usize >= NUM_CLASSES {
                return Err(Error::Label(format!("class id {id} out of range")));
            }
        }
        Ok(Self { labels })
    }

    pub fn width(&self) -> usize {
        self.labels.width()
    }

    pub fn height(&self) -> usize {
        self.labels.height()
    }
}

/// Set of class IDs assumed piecewise planar.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PlanarClassSet(BTreeSet<u8>);

impl PlanarClassSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_ids(ids: impl IntoIterator<Item = u8>) -> Result<Self> {
        let set: BTreeSet<u8> = ids.into_iter().collect();
        for &id in &set {
            if id as usize >= NUM_CLASSES {
                return Err(Error::Label(format!("planar class id {id} out of range")));
            }
        }
        Ok(Self(set))
    }

    /// Floor, wall, and ceiling: the surfaces assumed flat by default.
    pub fn default_planar() -> Self {
        Self::from_ids([
            class_id("floor").unwrap(),
            class_id("wall").unwrap(),
            class_id("ceiling").unwrap(),
        ])
        .unwrap()
    }

    pub fn contains(&self, id: u8) -> bool {
        self.0.contains(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }
}
