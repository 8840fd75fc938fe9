//! Rotation-group utilities used by the director update and the null-space
//! construction.

use serde::{Deserialize, Serialize};

use crate::ad::Scalar;
use crate::tensor::{Mat3, Vec3};

/// Below this rotation angle the trigonometric ratios of the exponential map
/// are evaluated by their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Incremental rotation vector (axis times angle, radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationVector(pub Vec3);

/// Proper orthogonal 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(pub Mat3);

impl RotationVector {
    pub fn exp(&self) -> RotationMatrix {
        RotationMatrix(exp_map(&self.0))
    }
}

impl RotationMatrix {
    /// `max |R^T R - I|` over all entries.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.0.transpose().mat_mul(&self.0) - Mat3::identity()).max_abs()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0.mul_vec(v)
    }
}

/// Skew-symmetric matrix with `hat(v) w = v x w`.
pub fn hat<T: Scalar>(v: &Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    let [a, b, c] = v.0;
    Mat3([[z, -c, b], [c, z, -a], [-b, a, z]])
}

/// Exponential map `R = I + sinc(|t|) hat(t) + 1/2 sinc(|t|/2)^2 hat(t)^2`.
pub fn exp_map<T: Scalar>(theta: &Vec3<T>) -> Mat3<T> {
    let x2 = theta.norm_squared();
    let (a, b) = if x2.re() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        let x4 = x2 * x2;
        (-(x2 / 6.0) + x4 / 120.0 + 1.0, -(x2 / 12.0) + x4 / 360.0 + 1.0)
    } else {
        let x = x2.sqrt();
        let half = x * 0.5;
        let s = half.sin() / half;
        (x.sin() / x, s * s)
    };
    let k = hat(theta);
    let k2 = k.mat_mul(&k);
    Mat3::identity() + k.scale(a) + k2.scale(b * 0.5)
}
