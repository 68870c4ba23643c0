//! Fixed-size 3-vectors, 3×3 tensors and the rank-4 array used for `∂Z/∂F`.
//!
//! Everything here is `Copy` and allocation free. Matrices are stored row
//! major: `m[i][k]` is row `i`, column `k`. For two-point tensors such as the
//! deformation gradient the row index is spatial and the column index is
//! referential (`F[i][K] = ∂x_i/∂X_K`).

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Determinant magnitude at or below which a matrix is treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    /// Unit vector along axis `i`.
    pub fn unit(i: usize) -> Self {
        let mut v = Self::ZERO;
        v.0[i] = 1.0;
        v
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Dyadic product `self ⊗ other`, i.e. `(a ⊗ b)[i][j] = a_i b_j`.
    pub fn outer(&self, other: &Vec3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * other.0[j];
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, rhs: Vec3) {
        *self = *self - rhs;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::diag(s, s, s)
    }

    /// Matrix with a single unit entry at `(i, j)`.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Self::ZERO;
        m.0[i][j] = 1.0;
        m
    }

    pub fn transpose(&self) -> Mat3 {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Inverse by the adjugate; `None` when `|det| <= SINGULARITY_THRESHOLD`.
    pub fn inverse(&self) -> Option<Mat3> {
        let det = self.det();
        if !(det.abs() > SINGULARITY_THRESHOLD) {
            return None;
        }
        let a = &self.0;
        let inv_det = 1.0 / det;
        let cof = [
            [
                a[1][1] * a[2][2] - a[1][2] * a[2][1],
                a[0][2] * a[2][1] - a[0][1] * a[2][2],
                a[0][1] * a[1][2] - a[0][2] * a[1][1],
            ],
            [
                a[1][2] * a[2][0] - a[1][0] * a[2][2],
                a[0][0] * a[2][2] - a[0][2] * a[2][0],
                a[0][2] * a[1][0] - a[0][0] * a[1][2],
            ],
            [
                a[1][0] * a[2][1] - a[1][1] * a[2][0],
                a[0][1] * a[2][0] - a[0][0] * a[2][1],
                a[0][0] * a[1][1] - a[0][1] * a[1][0],
            ],
        ];
        let mut out = Mat3(cof);
        for row in out.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= inv_det;
            }
        }
        Some(out)
    }

    pub fn sym(&self) -> Mat3 {
        (*self + self.transpose()) * 0.5
    }

    pub fn skew(&self) -> Mat3 {
        (*self - self.transpose()) * 0.5
    }

    /// Double contraction `A : B = Σ A_ij B_ij`.
    pub fn ddot(&self, other: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    /// Quadratic form `a · M b`.
    pub fn quad(&self, a: &Vec3, b: &Vec3) -> f64 {
        a.dot(&(*self * *b))
    }

    pub fn norm_max(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flat_map(|r| r.iter()).all(|x| x.is_finite())
    }

    /// Leading principal minors `(M11, det M[0..2,0..2], det M)`.
    pub fn leading_minors(&self) -> [f64; 3] {
        let a = &self.0;
        [a[0][0], a[0][0] * a[1][1] - a[0][1] * a[1][0], self.det()]
    }
}

impl Index<usize> for Mat3 {
    type Output = [f64; 3];
    fn index(&self, i: usize) -> &[f64; 3] {
        &self.0[i]
    }
}

impl IndexMut<usize> for Mat3 {
    fn index_mut(&mut self, i: usize) -> &mut [f64; 3] {
        &mut self.0[i]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut out = self;
        for row in out.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        out
    }
}

impl Mul<Mat3> for f64 {
    type Output = Mat3;
    fn mul(self, m: Mat3) -> Mat3 {
        m * self
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        let a = &self.0;
        Vec3([
            a[0][0] * v.0[0] + a[0][1] * v.0[1] + a[0][2] * v.0[2],
            a[1][0] * v.0[0] + a[1][1] * v.0[1] + a[1][2] * v.0[2],
            a[2][0] * v.0[0] + a[2][1] * v.0[1] + a[2][2] * v.0[2],
        ])
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] =
                    self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j] + self.0[i][2] * rhs.0[2][j];
            }
        }
        out
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, rhs: Mat3) {
        *self = *self + rhs;
    }
}

impl SubAssign for Mat3 {
    fn sub_assign(&mut self, rhs: Mat3) {
        *self = *self - rhs;
    }
}

/// Derivative of a tensor-valued function with respect to a two-point
/// tensor argument: `slices[i][k] = ∂Z/∂F_ik`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tensor4 {
    pub slices: [[Mat3; 3]; 3],
}

impl Tensor4 {
    pub const ZERO: Tensor4 = Tensor4 { slices: [[Mat3::ZERO; 3]; 3] };

    /// `(Q · T Q)_ik = Q · slices[i][k] Q`, the contraction that turns
    /// `∂Z/∂F` into a stress-like tensor.
    pub fn quad_contract(&self, q: &Vec3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for k in 0..3 {
                out.0[i][k] = self.slices[i][k].quad(q, q);
            }
        }
        out
    }

    pub fn norm_max(&self) -> f64 {
        self.slices
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0_f64, |m, s| m.max(s.norm_max()))
    }
}

impl Mul<f64> for Tensor4 {
    type Output = Tensor4;
    fn mul(self, s: f64) -> Tensor4 {
        let mut out = self;
        for row in out.slices.iter_mut() {
            for m in row.iter_mut() {
                *m = *m * s;
            }
        }
        out
    }
}

impl Sub for Tensor4 {
    type Output = Tensor4;
    fn sub(self, rhs: Tensor4) -> Tensor4 {
        let mut out = self;
        for i in 0..3 {
            for k in 0..3 {
                out.slices[i][k] -= rhs.slices[i][k];
            }
        }
        out
    }
}

/// Rotation about a unit axis by `angle` (Rodrigues).
pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
    let n = axis * (1.0 / axis.norm());
    let (s, c) = angle.sin_cos();
    let k = Mat3([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]]);
    Mat3::IDENTITY + k * s + (k * k) * (1.0 - c)
}

/// Rotation from a (not necessarily normalized) quaternion `(w, x, y, z)`.
pub fn rotation_from_quaternion(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    Mat3([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}
