//! Symmetric tridiagonal kernels: Thomas solves and Sturm counts.

/// Symmetric tridiagonal matrix stored as diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Number of eigenvalues strictly below `shift` (negative LDLᵀ pivots of `A - shift I`).
    pub fn count_below(&self, shift: f64) -> usize {
        let n = self.len();
        if n == 0 {
            return 0;
        }
        let guard = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - shift;
        for i in 0..n {
            if i > 0 {
                let prev = if q.abs() < guard { guard.copysign(q) } else { q };
                q = self.diag[i] - shift - self.off[i - 1] * self.off[i - 1] / prev;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves `(A + shift I) x = rhs` by the Thomas algorithm.
    ///
    /// Returns `None` on a vanishing pivot. Stable without pivoting when
    /// `A + shift I` is positive definite or diagonally dominant.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut denom = self.diag[0] + shift;
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        if n > 1 {
            c[0] = self.off[0] / denom;
        }
        x[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] + shift - self.off[i - 1] * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return None;
            }
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            x[i] = (rhs[i] - self.off[i - 1] * x[i - 1]) / denom;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Some(x)
    }
}

/// Pre-factored Thomas solver for a fixed tridiagonal system, reused across
/// many right-hand sides.
#[derive(Debug, Clone)]
pub struct FactoredTridiag {
    off: Vec<f64>,
    c: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl FactoredTridiag {
    /// Factors the symmetric tridiagonal matrix `(diag, off)`.
    ///
    /// # Panics
    /// On a vanishing pivot, which cannot happen for the diagonally dominant
    /// systems this is used with.
    pub fn new(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        for i in 0..n {
            let denom = if i == 0 { diag[0] } else { diag[i] - off[i - 1] * c[i - 1] };
            assert!(denom.is_finite() && denom != 0.0, "tridiagonal breakdown at row {i}");
            inv_denom[i] = 1.0 / denom;
            if i + 1 < n {
                c[i] = off[i] * inv_denom[i];
            }
        }
        Self {
            off: off.to_vec(),
            c,
            inv_denom,
        }
    }

    /// Solves in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv_denom[0];
        for i in 1..n {
            x[i] = (x[i] - self.off[i - 1] * x[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
    }
}
