//! Closed-form eigendecomposition for symmetric 3x3 matrices.
//!
//! Eigenvalues come from the trigonometric solution of the characteristic
//! polynomial; the eigenvector of the smallest eigenvalue is recovered from
//! row cross products of the shifted matrix, with fallbacks for repeated
//! eigenvalues.

use crate::error::{Error, Result};
use crate::types::Vec3;

pub type Mat3 = [[f64; 3]; 3];

const SYMMETRY_TOL: f64 = 1e-9;

/// Smallest eigenvalue and a corresponding unit eigenvector of a symmetric
/// 3x3 matrix. The residual satisfies `‖C·v − λ·v‖ ≤ 1e-8·(1 + ‖C‖)`.
pub fn eig3_smallest(c: &Mat3) -> Result<(f64, Vec3)> {
    for row in c {
        for x in row {
            if !x.is_finite() {
                return Err(Error::shape("non-finite matrix entry"));
            }
        }
    }
    let asym = (c[0][1] - c[1][0])
        .abs()
        .max((c[0][2] - c[2][0]).abs())
        .max((c[1][2] - c[2][1]).abs());
    if asym > SYMMETRY_TOL * (1.0 + frobenius_norm(c)) {
        return Err(Error::shape("matrix is not symmetric"));
    }
    let (values, vector) = smallest_eigenpair(c);
    Ok((values[0], vector))
}

/// All three eigenvalues in ascending order plus a unit eigenvector of the
/// smallest. Assumes the input is symmetric.
pub(crate) fn smallest_eigenpair(c: &Mat3) -> ([f64; 3], Vec3) {
    let scale = c
        .iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return ([0.0; 3], Vec3::new(1.0, 0.0, 0.0));
    }
    let inv = 1.0 / scale;
    let b = [
        [c[0][0] * inv, c[0][1] * inv, c[0][2] * inv],
        [c[1][0] * inv, c[1][1] * inv, c[1][2] * inv],
        [c[2][0] * inv, c[2][1] * inv, c[2][2] * inv],
    ];
    let vals = eigenvalues_ascending(&b);
    let vec = smallest_eigenvector(&b, vals);
    // Rayleigh-quotient polish: the trigonometric eigenvalue loses ~sqrt(eps)
    // near repeated roots, while v^T B v is optimal for the computed vector.
    let bv = Vec3::new(
        b[0][0] * vec.x + b[0][1] * vec.y + b[0][2] * vec.z,
        b[1][0] * vec.x + b[1][1] * vec.y + b[1][2] * vec.z,
        b[2][0] * vec.x + b[2][1] * vec.y + b[2][2] * vec.z,
    );
    let smallest = vec.dot(bv) / vec.norm_squared();
    ([smallest * scale, vals[1] * scale, vals[2] * scale], vec)
}

/// Trigonometric eigenvalues of a symmetric 3x3 matrix, ascending.
fn eigenvalues_ascending(m: &Mat3) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let inv_p = 1.0 / p;
    let b = [
        [(m[0][0] - q) * inv_p, m[0][1] * inv_p, m[0][2] * inv_p],
        [m[1][0] * inv_p, (m[1][1] - q) * inv_p, m[1][2] * inv_p],
        [m[2][0] * inv_p, m[2][1] * inv_p, (m[2][2] - q) * inv_p],
    ];
    let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let two_thirds_pi = 2.0 * std::f64::consts::PI / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + two_thirds_pi).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

fn smallest_eigenvector(m: &Mat3, vals: [f64; 3]) -> Vec3 {
    if let Some(v) = null_direction(&shifted(m, vals[0])) {
        return v;
    }
    // Smallest eigenvalue is (nearly) repeated: its eigenspace is the plane
    // orthogonal to the eigenvector of the largest eigenvalue.
    if let Some(top) = null_direction(&shifted(m, vals[2])) {
        return unit_perpendicular(top);
    }
    // Spherical spectrum: every unit vector is an eigenvector.
    Vec3::new(1.0, 0.0, 0.0)
}

fn shifted(m: &Mat3, lambda: f64) -> Mat3 {
    [
        [m[0][0] - lambda, m[0][1], m[0][2]],
        [m[1][0], m[1][1] - lambda, m[1][2]],
        [m[2][0], m[2][1], m[2][2] - lambda],
    ]
}

/// Direction spanning the null space of a (near) rank-2 symmetric matrix,
/// taken from the largest pairwise cross product of its rows.
fn null_direction(m: &Mat3) -> Option<Vec3> {
    let r0 = Vec3::new(m[0][0], m[0][1], m[0][2]);
    let r1 = Vec3::new(m[1][0], m[1][1], m[1][2]);
    let r2 = Vec3::new(m[2][0], m[2][1], m[2][2]);
    let candidates = [r0.cross(r1), r1.cross(r2), r2.cross(r0)];
    let best = candidates
        .into_iter()
        .max_by(|a, b| a.norm_squared().partial_cmp(&b.norm_squared()).unwrap())
        .unwrap();
    if best.norm_squared() > 1e-24 {
        Some(best * (1.0 / best.norm()))
    } else {
        None
    }
}

fn unit_perpendicular(v: Vec3) -> Vec3 {
    let axis = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::new(1.0, 0.0, 0.0)
    } else if v.y.abs() <= v.z.abs() {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let p = v.cross(axis);
    p * (1.0 / p.norm())
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn frobenius_norm(m: &Mat3) -> f64 {
    m.iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
pub(crate) fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}
