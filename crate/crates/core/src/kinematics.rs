//! Beam strain measures, deformation gradient and electric field.
//!
//! An element is interpolated linearly between its two nodes and evaluated
//! at its midpoint. The midpoint director triad is the average of the nodal
//! directors, re-orthonormalized by Gram-Schmidt; it defines the rotation
//! `Lambda = d_i (x) d_i^0` that pulls spatial strains back to the reference
//! frame.

use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::tensor::{Mat3, Vec3};

/// Smallest admissible volume ratio `J` at a quadrature point.
pub const J_MIN: f64 = 1e-9;

/// Orthonormal triad `[d1, d2, d3]`.
pub type Triad<T = f64> = [Vec3<T>; 3];

/// Nodal configuration: centerline position, three directors and the
/// electrical unknowns `(phi_o, alpha, beta)`.
///
/// The same layout is used for nodal rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeState<T = f64> {
    pub phi: Vec3<T>,
    pub d: Triad<T>,
    pub elec: Vec3<T>,
}

impl<T: Scalar> NodeState<T> {
    pub const DOFS: usize = 15;

    pub fn from_slice(q: &[T]) -> Self {
        let v = |o: usize| Vec3([q[o], q[o + 1], q[o + 2]]);
        Self {
            phi: v(0),
            d: [v(3), v(6), v(9)],
            elec: v(12),
        }
    }

    pub fn write_to(&self, out: &mut [T]) {
        for (k, v) in [self.phi, self.d[0], self.d[1], self.d[2], self.elec]
            .iter()
            .enumerate()
        {
            out[3 * k..3 * k + 3].copy_from_slice(&v.0);
        }
    }
}

impl NodeState<f64> {
    /// Straight-beam node at arc length `s` along `frame[2]`.
    pub fn reference(frame: &ReferenceFrame) -> Self {
        Self {
            phi: frame.d0[2] * frame.s,
            d: frame.d0,
            elec: Vec3([0.0; 3]),
        }
    }

    pub fn to_array(&self) -> [f64; 15] {
        let mut a = [0.0; 15];
        self.write_to(&mut a);
        a
    }

    /// Largest deviation of the director Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                m = m.max((self.d[i].dot(&self.d[j]) - target).abs());
            }
        }
        m
    }
}

/// Initial director triad and arc-length coordinate of a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceFrame {
    pub d0: Triad,
    pub s: f64,
}

impl ReferenceFrame {
    pub fn straight(s: f64) -> Self {
        Self {
            d0: [Vec3::unit(0), Vec3::unit(1), Vec3::unit(2)],
            s,
        }
    }
}

/// Strain measures in the reference frame: the inputs of every beam energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedStrains<T = f64> {
    /// Shear/elongation `Gamma`.
    pub gamma_ref: Vec3<T>,
    /// Curvature/twist `K`.
    pub kappa_ref: Vec3<T>,
    /// Strain-like electrical variable `(alpha, beta, phi_o')`.
    pub eps: Vec3<T>,
    /// `(alpha', beta', 0)`.
    pub e: Vec3<T>,
}

impl<T: Scalar> ReducedStrains<T> {
    pub const LEN: usize = 11;

    pub fn zero() -> Self {
        Self {
            gamma_ref: Vec3::zeros(),
            kappa_ref: Vec3::zeros(),
            eps: Vec3::zeros(),
            e: Vec3::zeros(),
        }
    }

    pub fn from_array(s: &[T; 11]) -> Self {
        Self {
            gamma_ref: Vec3([s[0], s[1], s[2]]),
            kappa_ref: Vec3([s[3], s[4], s[5]]),
            eps: Vec3([s[6], s[7], s[8]]),
            e: Vec3([s[9], s[10], T::zero()]),
        }
    }

    pub fn to_array(&self) -> [T; 11] {
        [
            self.gamma_ref[0],
            self.gamma_ref[1],
            self.gamma_ref[2],
            self.kappa_ref[0],
            self.kappa_ref[1],
            self.kappa_ref[2],
            self.eps[0],
            self.eps[1],
            self.eps[2],
            self.e[0],
            self.e[1],
        ]
    }
}

/// Element midpoint strains with both reference and spatial measures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamStrains<T = f64> {
    pub gamma_ref: Vec3<T>,
    pub kappa_ref: Vec3<T>,
    pub gamma: Vec3<T>,
    pub kappa: Vec3<T>,
    pub eps: Vec3<T>,
    pub e: Vec3<T>,
    /// Orthonormalized current midpoint triad.
    pub directors: Triad<T>,
    /// Reference midpoint triad `d_i^0`.
    pub reference: Triad,
}

impl<T: Scalar> BeamStrains<T> {
    pub fn reduced(&self) -> ReducedStrains<T> {
        ReducedStrains {
            gamma_ref: self.gamma_ref,
            kappa_ref: self.kappa_ref,
            eps: self.eps,
            e: self.e,
        }
    }

    /// `Lambda = d_i (x) d_i^0`.
    pub fn rotation(&self) -> Mat3<T> {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            m = m + self.directors[i].outer(&self.reference[i].lift());
        }
        m
    }
}

/// Orthonormal triad from the first two (approximate) directors.
pub fn gram_schmidt<T: Scalar>(d1: &Vec3<T>, d2: &Vec3<T>) -> Triad<T> {
    let t1 = d1.scale(d1.norm().recip());
    let p = *d2 - t1.scale(t1.dot(d2));
    let t2 = p.scale(p.norm().recip());
    let t3 = t1.cross(&t2);
    [t1, t2, t3]
}

fn midpoint_reference(a: &ReferenceFrame, b: &ReferenceFrame) -> Triad {
    if a.d0 == b.d0 {
        return a.d0;
    }
    let m = |i: usize| (a.d0[i] + b.d0[i]) * 0.5;
    gram_schmidt(&m(0), &m(1))
}

/// Midpoint strains of a two-node element.
pub fn element_strains<T: Scalar>(
    nodes: (&NodeState<T>, &NodeState<T>),
    refs: (&ReferenceFrame, &ReferenceFrame),
    element_length: f64,
) -> Result<BeamStrains<T>> {
    if !(element_length > 0.0) || !element_length.is_finite() {
        return Err(Error::DegenerateElement { length: element_length });
    }
    let (a, b) = nodes;
    let inv_l = 1.0 / element_length;
    let reference = midpoint_reference(refs.0, refs.1);

    let dphi = (b.phi - a.phi) * inv_l;
    let mid = |i: usize| (a.d[i] + b.d[i]) * 0.5;
    let dd = |i: usize| (b.d[i] - a.d[i]) * inv_l;
    let t = gram_schmidt(&mid(0), &mid(1));

    let gamma = dphi - t[2];
    // axial vector of the director gradients, d_k' = kappa x d_k
    let kappa = (t[0].cross(&dd(0)) + t[1].cross(&dd(1)) + t[2].cross(&dd(2))) * 0.5;

    let pull_back = |v: &Vec3<T>| {
        let c = [t[0].dot(v), t[1].dot(v), t[2].dot(v)];
        let mut out = Vec3::zeros();
        for i in 0..3 {
            out = out + reference[i].lift::<T>().scale(c[i]);
        }
        out
    };

    let eps = Vec3([
        (a.elec[1] + b.elec[1]) * 0.5,
        (a.elec[2] + b.elec[2]) * 0.5,
        (b.elec[0] - a.elec[0]) * inv_l,
    ]);
    let e = Vec3([
        (b.elec[1] - a.elec[1]) * inv_l,
        (b.elec[2] - a.elec[2]) * inv_l,
        T::zero(),
    ]);

    Ok(BeamStrains {
        gamma_ref: pull_back(&gamma),
        kappa_ref: pull_back(&kappa),
        gamma,
        kappa,
        eps,
        e,
        directors: t,
        reference,
    })
}

/// `a^r = Gamma + K x (X1 d1^0 + X2 d2^0)`.
pub fn a_reference<T: Scalar>(strains: &ReducedStrains<T>, reference: &Triad, x1: f64, x2: f64) -> Vec3<T> {
    let r: Vec3<T> = (reference[0] * x1 + reference[1] * x2).lift();
    strains.gamma_ref + strains.kappa_ref.cross(&r)
}

/// `a = gamma + kappa x (X1 d1 + X2 d2)` with current directors.
pub fn a_spatial<T: Scalar>(strains: &BeamStrains<T>, x1: f64, x2: f64) -> Vec3<T> {
    let r = strains.directors[0] * x1 + strains.directors[1] * x2;
    strains.gamma + strains.kappa.cross(&r)
}

/// Deformation gradient `F = [I + a (x) d3] Lambda` and `J = 1 + a . d3`.
pub fn deformation_gradient<T: Scalar>(strains: &BeamStrains<T>, x1: f64, x2: f64) -> Result<(Mat3<T>, T)> {
    let a = a_spatial(strains, x1, x2);
    let d3 = strains.directors[2];
    let j = a.dot(&d3) + 1.0;
    if j.re() <= J_MIN {
        return Err(Error::InvertedElement {
            jacobian: j.re(),
            point: [x1, x2],
        });
    }
    let f = (Mat3::identity() + a.outer(&d3)).mat_mul(&strains.rotation());
    Ok((f, j))
}

/// Right Cauchy-Green tensor in closed form,
/// `C = I + 2 sym(a^r (x) d3^0) + |a^r|^2 d3^0 (x) d3^0`.
pub fn right_cauchy_green<T: Scalar>(strains: &ReducedStrains<T>, reference: &Triad, x1: f64, x2: f64) -> Mat3<T> {
    let ar = a_reference(strains, reference, x1, x2);
    let d3: Vec3<T> = reference[2].lift();
    let m = ar.outer(&d3);
    Mat3::identity() + m + m.transpose() + d3.outer(&d3).scale(ar.norm_squared())
}

/// Green-Lagrange strain `E = sym(a^r (x) d3^0) + 1/2 |a^r|^2 d3^0 (x) d3^0`.
pub fn green_lagrange<T: Scalar>(strains: &ReducedStrains<T>, reference: &Triad, x1: f64, x2: f64) -> Mat3<T> {
    let ar = a_reference(strains, reference, x1, x2);
    let d3: Vec3<T> = reference[2].lift();
    let m = ar.outer(&d3);
    (m + m.transpose()).scale(T::cst(0.5)) + d3.outer(&d3).scale(ar.norm_squared() * 0.5)
}

/// Gradient of the interpolated placement `x = phi + X^k d_k` at the element
/// midpoint, `d1 (x) d1^0 + d2 (x) d2^0 + (phi' + X1 d1' + X2 d2') (x) d3^0`.
///
/// The map is linear in the nodal values, so applying it to nodal rates
/// yields `F_dot`.
pub fn placement_gradient<T: Scalar>(
    nodes: (&NodeState<T>, &NodeState<T>),
    reference: &Triad,
    element_length: f64,
    x1: f64,
    x2: f64,
) -> Mat3<T> {
    let (a, b) = nodes;
    let inv_l = 1.0 / element_length;
    let mid = |i: usize| (a.d[i] + b.d[i]) * 0.5;
    let dd = |i: usize| (b.d[i] - a.d[i]) * inv_l;
    let axial = (b.phi - a.phi) * inv_l + dd(0) * x1 + dd(1) * x2;
    mid(0).outer(&reference[0].lift()) + mid(1).outer(&reference[1].lift()) + axial.outer(&reference[2].lift())
}

/// Rate of the deformation gradient from nodal rates.
pub fn deformation_gradient_rate<T: Scalar>(
    rates: (&NodeState<T>, &NodeState<T>),
    refs: (&ReferenceFrame, &ReferenceFrame),
    element_length: f64,
    x1: f64,
    x2: f64,
) -> Mat3<T> {
    let reference = midpoint_reference(refs.0, refs.1);
    placement_gradient(rates, &reference, element_length, x1, x2)
}

/// Electric field `E = -[alpha d1^0 + beta d2^0 + (phi_o' + X1 alpha' + X2 beta') d3^0]`.
pub fn electric_field<T: Scalar>(strains: &ReducedStrains<T>, reference: &Triad, x1: f64, x2: f64) -> Vec3<T> {
    let axial = strains.eps[2] + strains.e[0] * x1 + strains.e[1] * x2;
    -(reference[0].lift::<T>().scale(strains.eps[0])
        + reference[1].lift::<T>().scale(strains.eps[1])
        + reference[2].lift::<T>().scale(axial))
}
