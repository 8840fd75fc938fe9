//! Banded LU factorization with partial pivoting.
//!
//! The reduced tangent of a two-node element mesh couples only neighbouring
//! nodes, so its bandwidth stays below twice the nodal unknown count no
//! matter how many elements are used.

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals. Row `i` stores
/// columns `i - kl ..= i + ku + kl`; the extra `kl` columns receive pivoting
/// fill-in.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.ku + self.kl {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` at `(i, j)`; panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place factorization `P A = L U`.
    pub fn factorize(mut self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularTangent { pivot: k });
            }
            piv[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandedLu { m: self, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    m: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n.saturating_sub(1)) {
                    x[i] -= m.data[m.idx(i, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..=(i + m.ku + m.kl).min(n - 1) {
                acc -= m.data[m.idx(i, j)] * x[j];
            }
            x[i] = acc / m.data[m.idx(i, i)];
        }
        x
    }
}
