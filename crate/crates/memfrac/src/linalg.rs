//! Small dense linear algebra: 2- and 3-vectors, 3x2 and 3x3 matrices.
//!
//! Everything is `f64`, fixed-size and allocation-free. The deformation
//! gradients of a membrane are 3x2; extending them by a third column gives
//! the 3x3 gradients of thin three-dimensional deformations.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn v2(x: f64, y: f64) -> Vec2 {
    Vec2 { x, y }
}

pub const fn v3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec2 {
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        v2(self.x / n, self.y / n)
    }
    /// Rotate by +90 degrees.
    pub fn perp(self) -> Vec2 {
        v2(-self.y, self.x)
    }
    /// Embed in R^3 with vanishing third component.
    pub fn lift(self) -> Vec3 {
        v3(self.x, self.y, 0.0)
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Vec3 {
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
    pub fn cross(self, o: Vec3) -> Vec3 {
        v3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
    pub fn planar(self) -> Vec2 {
        v2(self.x, self.y)
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

macro_rules! vec_ops {
    ($t:ty, $($f:ident),+) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t { Self { $($f: self.$f + o.$f),+ } }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t { Self { $($f: self.$f - o.$f),+ } }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t { Self { $($f: -self.$f),+ } }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t { Self { $($f: self.$f * s),+ } }
        }
        impl Mul<$t> for f64 {
            type Output = $t;
            fn mul(self, v: $t) -> $t { v * self }
        }
    };
}
vec_ops!(Vec2, x, y);
vec_ops!(Vec3, x, y, z);

/// Planar deformation gradient E in M^{3x2}, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix32(pub [[f64; 2]; 3]);

impl Matrix32 {
    pub fn from_columns(c1: Vec3, c2: Vec3) -> Self {
        Matrix32([[c1.x, c2.x], [c1.y, c2.y], [c1.z, c2.z]])
    }
    pub fn col(&self, j: usize) -> Vec3 {
        v3(self.0[0][j], self.0[1][j], self.0[2][j])
    }
    pub fn apply(&self, v: Vec2) -> Vec3 {
        self.col(0) * v.x + self.col(1) * v.y
    }
    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
    }
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().flatten().map(|a| a * a).sum::<f64>()
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|a| a.is_finite())
    }
    /// Rank-one matrix b (x) a with b in R^3, a in R^2.
    pub fn outer(b: Vec3, a: Vec2) -> Self {
        Matrix32([
            [b.x * a.x, b.x * a.y],
            [b.y * a.x, b.y * a.y],
            [b.z * a.x, b.z * a.y],
        ])
    }
    /// Append a third column.
    pub fn extend(&self, xi: Vec3) -> Matrix33 {
        Matrix33([
            [self.0[0][0], self.0[0][1], xi.x],
            [self.0[1][0], self.0[1][1], xi.y],
            [self.0[2][0], self.0[2][1], xi.z],
        ])
    }
}

impl Add for Matrix32 {
    type Output = Matrix32;
    fn add(self, o: Matrix32) -> Matrix32 {
        let mut r = self.0;
        for i in 0..3 {
            for j in 0..2 {
                r[i][j] += o.0[i][j];
            }
        }
        Matrix32(r)
    }
}
impl Sub for Matrix32 {
    type Output = Matrix32;
    fn sub(self, o: Matrix32) -> Matrix32 {
        let mut r = self.0;
        for i in 0..3 {
            for j in 0..2 {
                r[i][j] -= o.0[i][j];
            }
        }
        Matrix32(r)
    }
}
impl Mul<f64> for Matrix32 {
    type Output = Matrix32;
    fn mul(self, s: f64) -> Matrix32 {
        let mut r = self.0;
        for row in &mut r {
            for a in row {
                *a *= s;
            }
        }
        Matrix32(r)
    }
}

/// Full deformation gradient F in M^{3x3}, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix33(pub [[f64; 3]; 3]);

impl Matrix33 {
    pub const IDENTITY: Matrix33 = Matrix33([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_columns(c1: Vec3, c2: Vec3, c3: Vec3) -> Self {
        Matrix33([
            [c1.x, c2.x, c3.x],
            [c1.y, c2.y, c3.y],
            [c1.z, c2.z, c3.z],
        ])
    }
    pub fn col(&self, j: usize) -> Vec3 {
        v3(self.0[0][j], self.0[1][j], self.0[2][j])
    }
    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.col(0) * v.x + self.col(1) * v.y + self.col(2) * v.z
    }
    pub fn matmul(&self, o: &Matrix33) -> Matrix33 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Matrix33(r)
    }
    pub fn transpose(&self) -> Matrix33 {
        let m = &self.0;
        Matrix33([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().flatten().map(|a| a * a).sum::<f64>()
    }
    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, a| m.max(a.abs()))
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|a| a.is_finite())
    }
    pub fn planar_part(&self) -> Matrix32 {
        Matrix32([
            [self.0[0][0], self.0[0][1]],
            [self.0[1][0], self.0[1][1]],
            [self.0[2][0], self.0[2][1]],
        ])
    }
    /// Inverse by cofactors; caller guarantees a nonsingular matrix.
    pub fn inverse(&self) -> Matrix33 {
        let m = &self.0;
        let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        let c10 = m[0][2] * m[2][1] - m[0][1] * m[2][2];
        let c11 = m[0][0] * m[2][2] - m[0][2] * m[2][0];
        let c12 = m[0][1] * m[2][0] - m[0][0] * m[2][1];
        let c20 = m[0][1] * m[1][2] - m[0][2] * m[1][1];
        let c21 = m[0][2] * m[1][0] - m[0][0] * m[1][2];
        let c22 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
        let d = 1.0 / det;
        Matrix33([
            [c00 * d, c10 * d, c20 * d],
            [c01 * d, c11 * d, c21 * d],
            [c02 * d, c12 * d, c22 * d],
        ])
    }
}

impl Add for Matrix33 {
    type Output = Matrix33;
    fn add(self, o: Matrix33) -> Matrix33 {
        let mut r = self.0;
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] += o.0[i][j];
            }
        }
        Matrix33(r)
    }
}
impl Sub for Matrix33 {
    type Output = Matrix33;
    fn sub(self, o: Matrix33) -> Matrix33 {
        let mut r = self.0;
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] -= o.0[i][j];
            }
        }
        Matrix33(r)
    }
}
impl Mul<f64> for Matrix33 {
    type Output = Matrix33;
    fn mul(self, s: f64) -> Matrix33 {
        let mut r = self.0;
        for row in &mut r {
            for a in row {
                *a *= s;
            }
        }
        Matrix33(r)
    }
}

/// Cross product of the two columns, E^1 x E^2.
///
/// Vanishes exactly when rank E <= 1; its norm is the area distortion of the
/// planar gradient.
pub fn cross_columns(e: &Matrix32) -> Vec3 {
    e.col(0).cross(e.col(1))
}

/// Determinant by cofactor expansion along the first row.
pub fn det3(f: &Matrix33) -> f64 {
    let m = &f.0;
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// det(c1 | c2 | c3) for column vectors.
pub fn det_cols(c1: Vec3, c2: Vec3, c3: Vec3) -> f64 {
    c1.cross(c2).dot(c3)
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations,
/// ascending order.
pub fn sym_eigenvalues(m: &Matrix33) -> [f64; 3] {
    let mut a = m.0;
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off < 1e-30 * (a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2] + 1e-300) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut r = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    r[i][j] = a[i][j];
                }
            }
            for i in 0..3 {
                r[i][p] = c * a[i][p] - s * a[i][q];
                r[i][q] = s * a[i][p] + c * a[i][q];
            }
            let b = r;
            let mut n = b;
            for j in 0..3 {
                n[p][j] = c * b[p][j] - s * b[q][j];
                n[q][j] = s * b[p][j] + c * b[q][j];
            }
            a = n;
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
