//! Uniform trait grid on a truncated interval with trapezoid quadrature.

use crate::error::{Error, Result};

/// Uniform grid `x_lo = x_0 < x_1 < ... < x_{n-1} = x_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraitGrid {
    x_lo: f64,
    x_hi: f64,
    n: usize,
    spacing: f64,
}

impl TraitGrid {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite()) || x_lo >= x_hi {
            return Err(Error::Invalid(format!(
                "grid bounds must satisfy x_lo < x_hi (got {x_lo}, {x_hi})"
            )));
        }
        if n < 3 {
            return Err(Error::Invalid(format!("grid needs n >= 3 nodes (got {n})")));
        }
        let spacing = (x_hi - x_lo) / (n - 1) as f64;
        Ok(Self {
            x_lo,
            x_hi,
            n,
            spacing,
        })
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.weight(i)).collect()
    }

    /// Index of the node closest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let pos = ((x - self.x_lo) / self.spacing).round();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.n - 1)
        }
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.node(i))).collect()
    }

    /// Trapezoid rule `sum_i w_i f_i`.
    pub fn quadrature(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.integrate(f))
    }

    /// Unchecked variant of [`quadrature`](Self::quadrature) for hot loops
    /// whose vectors are sized at construction.
    pub(crate) fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let interior: f64 = f[1..self.n - 1].iter().sum();
        self.spacing * (interior + 0.5 * (f[0] + f[self.n - 1]))
    }

    /// Trapezoid quadrature of the pointwise product `f * g`.
    pub(crate) fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.n;
        let interior: f64 = f[1..n - 1].iter().zip(&g[1..n - 1]).map(|(a, b)| a * b).sum();
        self.spacing * (interior + 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]))
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: f.len(),
            });
        }
        Ok(())
    }
}
