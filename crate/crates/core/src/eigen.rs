//! Principal Dirichlet eigenpairs of `-d²/dx² - q(x)` on the truncated grid.
//!
//! The operator is discretized on the interior nodes with the standard
//! three-point Laplacian; boundary nodes carry the homogeneous Dirichlet
//! condition. The principal eigenvalue is located by Sturm-count bisection
//! and then polished by shifted inverse iteration and a Rayleigh quotient.

use crate::error::{Error, Result};
use crate::grid::TraitGrid;
use crate::resource::ResourceFunction;
use crate::tridiag::SymTridiag;

/// Default absolute tolerance on the eigenvalue.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

const MAX_INVERSE_ITERATIONS: usize = 100;

/// `-D2 - diag(q) + shift I` restricted to the interior nodes.
pub fn dirichlet_operator(q_values: &[f64], grid: &TraitGrid, shift: f64) -> Result<SymTridiag> {
    grid.check_len(q_values)?;
    let n = grid.len();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let diag = q_values[1..n - 1].iter().map(|q| 2.0 * inv_h2 - q + shift).collect();
    Ok(SymTridiag::new(diag, vec![-inv_h2; n - 3]))
}

/// Principal eigenpair with `phi` positive, zero on the boundary and of
/// unit `L²` norm under the trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalMode {
    /// Shift `s*` making the principal eigenvalue of `-D2 - q + s*` vanish.
    pub shift: f64,
    pub phi: Vec<f64>,
    /// `‖(-D2 - q + s*) phi‖∞ / ‖phi‖∞` on the interior nodes.
    pub residual: f64,
}

/// Smallest eigenvalue of `-D2 - diag(q) + shift I` by bisection on the Sturm count.
pub fn principal_eigenvalue(q_values: &[f64], grid: &TraitGrid, shift: f64, tol: f64) -> Result<f64> {
    let op = dirichlet_operator(q_values, grid, shift)?;
    let (lo, hi) = bisect_lowest(&op, tol)?;
    Ok(0.5 * (lo + hi))
}

/// Bracket `[lo, hi]` of width `<= tol` with no eigenvalue below `lo` and at
/// least one below `hi`.
fn bisect_lowest(op: &SymTridiag, tol: f64) -> Result<(f64, f64)> {
    let n = op.len();
    let rad = op.off.first().map_or(0.0, |o| 2.0 * o.abs());
    let dmin = op.diag.iter().copied().fold(f64::INFINITY, f64::min);
    // Gershgorin below, Rayleigh quotient of a unit vector above
    let mut lo = dmin - rad - 1.0;
    let mut hi = dmin + 1.0;
    if !(lo.is_finite() && hi.is_finite()) || op.count_below(lo) != 0 || op.count_below(hi) == 0 {
        return Err(Error::Bracket { lo, hi });
    }
    let floor = 4.0 * f64::EPSILON * (dmin.abs() + rad).max(1.0);
    while hi - lo > tol.max(floor) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if op.count_below(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(n > 0);
    Ok((lo, hi))
}

/// Principal mode for sampled `q`.
pub fn principal_shift_values(q_values: &[f64], grid: &TraitGrid, tol: f64) -> Result<PrincipalMode> {
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("eigen tolerance must be > 0 (got {tol})")));
    }
    if q_values.iter().any(|q| !q.is_finite()) {
        return Err(Error::Invalid("potential has non-finite values".into()));
    }
    let op = dirichlet_operator(q_values, grid, 0.0)?;
    let (lo, hi) = bisect_lowest(&op, tol)?;
    let m = op.len();

    // inverse iteration just below the bracket keeps the shifted matrix SPD
    let gap = (hi - lo).max(tol).max(1e-9);
    let sigma = lo - gap;
    let mut x = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..MAX_INVERSE_ITERATIONS {
        let mut y = op
            .solve_shifted(-sigma, &x)
            .ok_or(Error::Bracket { lo, hi })?;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|v| *v *= sign / norm);
        let change = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if change < 1e-14 {
            break;
        }
    }
    let mut ax = vec![0.0; m];
    op.mul_vec(&x, &mut ax);
    let lambda = x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let residual = ax
        .iter()
        .zip(&x)
        .map(|(a, v)| (a - lambda * v).abs())
        .fold(0.0, f64::max)
        / xmax;

    let mut phi = Vec::with_capacity(m + 2);
    phi.push(0.0);
    phi.extend(x.iter().map(|v| v.max(0.0)));
    phi.push(0.0);
    let norm = grid.integrate_product(&phi, &phi).sqrt();
    phi.iter_mut().for_each(|v| *v /= norm);
    Ok(PrincipalMode {
        shift: -lambda,
        phi,
        residual,
    })
}

pub fn principal_shift(q: &ResourceFunction, grid: &TraitGrid, tol: f64) -> Result<PrincipalMode> {
    principal_shift_values(&q.sample(grid), grid, tol)
}
