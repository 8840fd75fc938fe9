//! Small fixed-size vectors and matrices generic over [`Scalar`].

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::ad::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T = f64>(pub [T; 3]);

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T = f64>(pub [[T; 3]; 3]);

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }

    pub fn zeros() -> Self {
        Self([T::zero(); 3])
    }

    pub fn from_f64(v: Vec3<f64>) -> Self {
        Self(v.0.map(T::cst))
    }

    pub fn re(&self) -> Vec3<f64> {
        Vec3(self.0.map(|x| x.re()))
    }

    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Self) -> Self {
        let [a, b, c] = self.0;
        let [x, y, z] = o.0;
        Self([b * z - c * y, c * x - a * z, a * y - b * x])
    }

    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|x| x * s))
    }

    pub fn outer(&self, o: &Self) -> Mat3<T> {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i] * o.0[j])))
    }

    /// Dot product with an `f64` vector.
    pub fn dot_f(&self, o: &Vec3<f64>) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    /// Cross product with an `f64` vector.
    pub fn cross_f(&self, o: &Vec3<f64>) -> Self {
        let [a, b, c] = self.0;
        let [x, y, z] = o.0;
        Self([b * z - c * y, c * x - a * z, a * y - b * x])
    }
}

impl Vec3<f64> {
    pub fn unit(i: usize) -> Self {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        Self(v)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Promotes an `f64` vector into any scalar type.
    pub fn lift<T: Scalar>(&self) -> Vec3<T> {
        Vec3::from_f64(*self)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|x| -x))
    }
}

impl<T: Scalar> Mul<f64> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self(self.0.map(|x| x * s))
    }
}

impl<T: Scalar> Mat3<T> {
    pub fn zeros() -> Self {
        Self([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = T::cst(1.0);
        }
        m
    }

    pub fn from_f64(m: &Mat3<f64>) -> Self {
        Self(m.0.map(|r| r.map(T::cst)))
    }

    pub fn re(&self) -> Mat3<f64> {
        Mat3(self.0.map(|r| r.map(|x| x.re())))
    }

    pub fn transpose(&self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        Vec3(std::array::from_fn(|i| {
            self.0[i][0] * v.0[0] + self.0[i][1] * v.0[1] + self.0[i][2] * v.0[2]
        }))
    }

    pub fn mat_mul(&self, o: &Self) -> Self {
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j])
        }))
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactors; `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det.re() == 0.0 || !det.re().is_finite() {
            return None;
        }
        let m = &self.0;
        let inv = det.recip();
        let c = |a: usize, b: usize, c: usize, d: usize| m[a][b] * m[c][d] - m[a][d] * m[c][b];
        Some(Self([
            [c(1, 1, 2, 2) * inv, -c(0, 1, 2, 2) * inv, c(0, 1, 1, 2) * inv],
            [-c(1, 0, 2, 2) * inv, c(0, 0, 2, 2) * inv, -c(0, 0, 1, 2) * inv],
            [c(1, 0, 2, 1) * inv, -c(0, 0, 2, 1) * inv, c(0, 0, 1, 1) * inv],
        ]))
    }

    /// Double contraction `A : B`.
    pub fn ddot(&self, o: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                acc = acc + self.0[i][j] * o.0[i][j];
            }
        }
        acc
    }
}

impl Mat3<f64> {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flat_map(|r| r.iter()).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn from_columns(c: [Vec3<f64>; 3]) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| c[j].0[i])))
    }
}

impl<T: Scalar> Add for Mat3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][j] + o.0[i][j])
        }))
    }
}

impl<T: Scalar> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][j] - o.0[i][j])
        }))
    }
}
