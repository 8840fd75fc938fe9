//! Finite-difference derivatives of black-box maps, used as test oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdScheme {
    #[default]
    Central,
    Forward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdSettings {
    pub scheme: FdScheme,
    pub h_rel: f64,
    pub h_abs: f64,
}

impl Default for FdSettings {
    fn default() -> Self {
        Self {
            scheme: FdScheme::Central,
            h_rel: 1e-6,
            h_abs: 1e-9,
        }
    }
}

impl FdSettings {
    pub fn central(h_rel: f64, h_abs: f64) -> Self {
        Self {
            scheme: FdScheme::Central,
            h_rel,
            h_abs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_rel > 0.0 && self.h_abs > 0.0) {
            return Err(Error::Config(format!(
                "finite-difference steps must be positive (h_rel={}, h_abs={})",
                self.h_rel, self.h_abs
            )));
        }
        Ok(())
    }

    pub fn step(&self, x: f64) -> f64 {
        (self.h_rel * x.abs()).max(self.h_abs)
    }
}

/// Column `i` of a finite-difference derivative of `f`.
fn probe<F, E>(f: &mut F, x: &[f64], i: usize, f0: Option<&[f64]>, s: &FdSettings) -> Result<Vec<f64>, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let h = s.step(x[i]);
    // divide by the representable step, not the requested one
    let mut xp = x.to_vec();
    xp[i] += h;
    let fp = f(&xp)?;
    match (s.scheme, f0) {
        (FdScheme::Forward, Some(f0)) => {
            let dx = xp[i] - x[i];
            Ok(fp.iter().zip(f0).map(|(a, b)| (a - b) / dx).collect())
        }
        _ => {
            let mut xm = x.to_vec();
            xm[i] -= h;
            let fm = f(&xm)?;
            let dx = xp[i] - xm[i];
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / dx).collect())
        }
    }
}

/// Jacobian `J[r][c] = d f_r / d x_c`.
pub fn fd_jacobian<F, E>(mut f: F, x: &[f64], settings: &FdSettings) -> Result<Vec<Vec<f64>>, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let f0 = match settings.scheme {
        FdScheme::Forward => Some(f(x)?),
        FdScheme::Central => None,
    };
    let cols = (0..x.len())
        .map(|c| probe(&mut f, x, c, f0.as_deref(), settings))
        .collect::<Result<Vec<_>, E>>()?;
    let rows = cols.first().map_or(0, Vec::len);
    Ok((0..rows).map(|r| cols.iter().map(|col| col[r]).collect()).collect())
}

pub fn fd_gradient<F, E>(mut f: F, x: &[f64], settings: &FdSettings) -> Result<Vec<f64>, E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    let j = fd_jacobian(|y: &[f64]| f(y).map(|v| vec![v]), x, settings)?;
    Ok(j.into_iter().next().unwrap_or_default())
}

/// Hessian as the Jacobian of a supplied gradient.
pub fn fd_hessian<F, E>(grad: F, x: &[f64], settings: &FdSettings) -> Result<Vec<Vec<f64>>, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    fd_jacobian(grad, x, settings)
}

/// `max |a - b| / max(max |b|, floor)` over all entries.
pub fn max_relative_error(a: &[Vec<f64>], b: &[Vec<f64>], floor: f64) -> f64 {
    let scale = b.iter().flatten().fold(floor, |m, x| m.max(x.abs()));
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
