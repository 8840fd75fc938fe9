//! Forward-mode automatic differentiation.
//!
//! Two number types carry derivative information alongside a value:
//!
//! * [`Dual<N>`] propagates a gradient with respect to `N` seeded inputs.
//! * [`HyperDual<N>`] additionally propagates the (symmetric) Hessian.
//!
//! Kernels are written once against the [`Scalar`] trait and instantiated
//! with `f64`, `Dual<N>` or `HyperDual<N>` depending on how many derivative
//! orders the caller needs. `HyperDual` stores only the upper triangle
//! (`j >= i`) of its Hessian; [`HyperDual::hessian`] mirrors it on output.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Real-number interface shared by `f64` and the dual number types.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Value part, dropping derivative information.
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn recip(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// First-order dual number with an `N`-dimensional tangent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; N] }
    }

    /// Independent variable `i` with value `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut g = [0.0; N];
        g[i] = 1.0;
        Self { v, g }
    }

    /// Seeds a slice of values as the first `values.len()` independent variables.
    pub fn seed<const M: usize>(values: &[f64; M], offset: usize) -> [Self; M] {
        std::array::from_fn(|i| Self::variable(values[i], offset + i))
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut g = self.g;
        for gi in g.iter_mut() {
            *gi *= df;
        }
        Self { v: f, g }
    }
}

impl<const N: usize> Scalar for Dual<N> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn re(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.g[i] -= o.g[i];
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        Self { v: self.v * o.v, g }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = (self.g[i] - v * o.g[i]) * inv;
        }
        Self { v, g }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, o: f64) -> Self {
        self.v *= o;
        for gi in self.g.iter_mut() {
            *gi *= o;
        }
        self
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

/// Second-order forward-mode number: value, gradient and Hessian with
/// respect to `N` seeded inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    h: [[f64; N]; N],
}

impl<const N: usize> HyperDual<N> {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut x = Self::constant(v);
        x.g[i] = 1.0;
        x
    }

    pub fn seed<const M: usize>(values: &[f64; M], offset: usize) -> [Self; M] {
        std::array::from_fn(|i| Self::variable(values[i], offset + i))
    }

    /// Full symmetric Hessian.
    pub fn hessian(&self) -> [[f64; N]; N] {
        let mut out = self.h;
        for i in 0..N {
            for j in 0..i {
                out[i][j] = self.h[j][i];
            }
        }
        out
    }

    /// `f(self)` given `f`, `f'` and `f''` at the value.
    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.g[i] = df * self.g[i];
            let gi = d2f * self.g[i];
            for j in i..N {
                out.h[i][j] = df * self.h[i][j] + gi * self.g[j];
            }
        }
        out
    }
}

impl<const N: usize> Scalar for HyperDual<N> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn re(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl<const N: usize> Add for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
            for j in i..N {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.g[i] -= o.g[i];
            for j in i..N {
                self.h[i][j] -= o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..N {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            let (ai, bi) = (self.g[i], o.g[i]);
            for j in i..N {
                out.h[i][j] = self.v * o.h[i][j] + o.v * self.h[i][j] + ai * o.g[j] + bi * self.g[j];
            }
        }
        out
    }
}

impl<const N: usize> Div for HyperDual<N> {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<const N: usize> Neg for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Add<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl<const N: usize> Sub<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl<const N: usize> Mul<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, o: f64) -> Self {
        self.v *= o;
        for i in 0..N {
            self.g[i] *= o;
            for j in i..N {
                self.h[i][j] *= o;
            }
        }
        self
    }
}

impl<const N: usize> Div<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Scalar>(x: T, y: T) -> T {
        (x * y).sin() + x.ln() * y.sqrt() - (x / y).cos() + x.powi(3).recip()
    }

    fn fd_grad(x: f64, y: f64) -> [f64; 2] {
        let h = 1e-6;
        [
            (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            (f(x, y + h) - f(x, y - h)) / (2.0 * h),
        ]
    }

    #[test]
    fn dual_gradient_matches_finite_differences() {
        let (x, y) = (1.3, 0.7);
        let [dx, dy] = Dual::<2>::seed(&[x, y], 0);
        let r = f(dx, dy);
        assert_eq!(r.v, f(x, y));
        let fd = fd_grad(x, y);
        for i in 0..2 {
            assert!((r.g[i] - fd[i]).abs() < 1e-8, "{} vs {}", r.g[i], fd[i]);
        }
    }

    #[test]
    fn hyperdual_hessian_matches_finite_differences_of_gradient() {
        let (x, y) = (1.3, 0.7);
        let [hx, hy] = HyperDual::<2>::seed(&[x, y], 0);
        let r = f(hx, hy);
        let hess = r.hessian();
        let h = 1e-5;
        let gp = fd_grad(x + h, y);
        let gm = fd_grad(x - h, y);
        let gq = fd_grad(x, y + h);
        let gr = fd_grad(x, y - h);
        let fd = [
            [(gp[0] - gm[0]) / (2.0 * h), (gp[1] - gm[1]) / (2.0 * h)],
            [(gq[0] - gr[0]) / (2.0 * h), (gq[1] - gr[1]) / (2.0 * h)],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((hess[i][j] - fd[i][j]).abs() < 1e-4, "{i}{j}");
            }
        }
        assert_eq!(hess[0][1], hess[1][0]);
        let d = Dual::<2>::seed(&[x, y], 0);
        let first = f(d[0], d[1]);
        assert!((first.g[0] - r.g[0]).abs() < 1e-14);
        assert!((first.g[1] - r.g[1]).abs() < 1e-14);
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        let [x, y] = HyperDual::<2>::seed(&[2.0, -3.0], 0);
        let q = x * x * 3.0 + x * y * 2.0 - y * y;
        assert_eq!(q.hessian(), [[6.0, 2.0], [2.0, -2.0]]);
        assert_eq!(q.g, [2.0 * 6.0 + 2.0 * -3.0, 2.0 * 2.0 + 6.0]);
    }
}
