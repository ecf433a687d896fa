//! Strang-split time stepping for the nonlocal reaction–diffusion model:
//! half a reaction step, one Crank–Nicolson diffusion step with homogeneous
//! Dirichlet boundaries, half a reaction step.
//!
//! The reaction substeps are exponential updates with Heun-averaged masses,
//! as in the mutation-free stepper. Crank–Nicolson keeps nonnegative data
//! nonnegative when `dt <= spacing²`.

use crate::error::Result;
use crate::grid::TraitGrid;
use crate::model::{ModelParams, PopulationState};
use crate::tridiag::FactoredTridiag;

/// `(I - dt/2 A) x_new = (I + dt/2 A) x` with `A = D2 + diag(p)` on the
/// interior nodes; boundary nodes are pinned to zero.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    half_dt: f64,
    inv_h2: f64,
    potential: Vec<f64>,
    factor: FactoredTridiag,
}

impl CrankNicolson {
    /// `potential` holds `p` on all nodes (boundary entries unused); `None`
    /// for pure diffusion.
    pub fn new(grid: &TraitGrid, dt: f64, potential: Option<&[f64]>) -> Self {
        let n = grid.len();
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let half_dt = 0.5 * dt;
        let potential: Vec<f64> = match potential {
            Some(p) => p[1..n - 1].to_vec(),
            None => vec![0.0; n - 2],
        };
        let diag: Vec<f64> = potential
            .iter()
            .map(|p| 1.0 + 2.0 * half_dt * inv_h2 - half_dt * p)
            .collect();
        let off = vec![-half_dt * inv_h2; n - 3];
        Self {
            half_dt,
            inv_h2,
            potential,
            factor: FactoredTridiag::new(&diag, &off),
        }
    }

    /// Advances `x` (all nodes) by one step in place.
    pub fn apply(&self, x: &mut [f64]) {
        let n = x.len();
        let mut rhs = vec![0.0; n - 2];
        for i in 1..n - 1 {
            let left = if i > 1 { x[i - 1] } else { 0.0 };
            let right = if i + 2 < n { x[i + 1] } else { 0.0 };
            let lap = (left - 2.0 * x[i] + right) * self.inv_h2;
            rhs[i - 1] = x[i] + self.half_dt * (lap + self.potential[i - 1] * x[i]);
        }
        self.factor.solve_in_place(&mut rhs);
        x[0] = 0.0;
        x[n - 1] = 0.0;
        x[1..n - 1].copy_from_slice(&rhs);
    }
}

/// One Strang step `R(dt/2) D(dt) R(dt/2)`.
#[derive(Debug, Clone)]
pub struct ImexStepper {
    dt: f64,
    b: f64,
    c: f64,
    half_growth_u: Vec<f64>,
    half_growth_v: Vec<f64>,
    weights: Vec<f64>,
    diffusion: CrankNicolson,
}

impl ImexStepper {
    pub fn new(params: &ModelParams, grid: &TraitGrid, dt: f64) -> Self {
        let half = 0.5 * dt;
        Self {
            dt,
            b: params.b,
            c: params.c,
            half_growth_u: params.d.sample(grid).iter().map(|d| (half * d).exp()).collect(),
            half_growth_v: params.m.sample(grid).iter().map(|m| (half * m).exp()).collect(),
            weights: grid.weights(),
            diffusion: CrankNicolson::new(grid, dt, None),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn mass(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    fn weighted_growth(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.weights).map(|((x, g), w)| x * g * w).sum()
    }

    /// Exponential reaction update over `dt/2`.
    fn reaction_half(&self, u: &mut [f64], v: &mut [f64]) {
        let tau = 0.5 * self.dt;
        let (r1, r2) = (self.mass(u), self.mass(v));
        let rate_u = r1 + self.b * r2;
        let rate_v = self.c * r1 + r2;
        let pred_r1 = (-tau * rate_u).exp() * self.weighted_growth(u, &self.half_growth_u);
        let pred_r2 = (-tau * rate_v).exp() * self.weighted_growth(v, &self.half_growth_v);
        let decay_u = (-tau * 0.5 * (rate_u + pred_r1 + self.b * pred_r2)).exp();
        let decay_v = (-tau * 0.5 * (rate_v + self.c * pred_r1 + pred_r2)).exp();
        for (x, g) in u.iter_mut().zip(&self.half_growth_u) {
            *x *= g * decay_u;
        }
        for (x, g) in v.iter_mut().zip(&self.half_growth_v) {
            *x *= g * decay_v;
        }
    }

    /// Advances raw density vectors by one step.
    pub fn advance(&self, u: &mut [f64], v: &mut [f64]) {
        self.reaction_half(u, v);
        self.diffusion.apply(u);
        self.diffusion.apply(v);
        self.reaction_half(u, v);
    }

    pub fn step(&self, grid: &TraitGrid, state: &mut PopulationState) -> Result<()> {
        let t = state.t() + self.dt;
        state.update(grid, t, |u, v| self.advance(u, v))
    }
}

/// One IMEX step; builds a fresh [`ImexStepper`].
pub fn imex_step(state: &mut PopulationState, params: &ModelParams, grid: &TraitGrid, dt: f64) -> Result<()> {
    ImexStepper::new(params, grid, dt).step(grid, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::ResourceFunction;
    use std::f64::consts::PI;

    #[test]
    fn zero_stays_zero() {
        let g = TraitGrid::new(-5.0, 5.0, 51).unwrap();
        let p = ModelParams::integro(0.5, 0.25, 1.0, ResourceFunction::gaussian(2.0, 1.0, 0.0, 1.0)).unwrap();
        let mut s = PopulationState::new(&g, 0.0, vec![0.0; 51], vec![0.0; 51]).unwrap();
        imex_step(&mut s, &p, &g, 0.01).unwrap();
        assert!(s.u().iter().chain(s.v()).all(|&x| x == 0.0));
    }

    #[test]
    fn heat_mode_decays_at_discrete_rate() {
        let g = TraitGrid::new(0.0, 1.0, 51).unwrap();
        let l = g.width();
        let dt = 1e-3;
        let cn = CrankNicolson::new(&g, dt, None);
        let mut x = g.sample(|x| (PI * x / l).sin());
        let x0 = x.clone();
        cn.apply(&mut x);
        // CN amplification of the discrete mode
        let h = g.spacing();
        let mu = 4.0 / (h * h) * (PI * h / (2.0 * l)).sin().powi(2);
        let amp = (1.0 - 0.5 * dt * mu) / (1.0 + 0.5 * dt * mu);
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - amp * b).abs() < 1e-14);
        }
        // third-order local agreement with the exact decay
        assert!((amp - (-dt * mu).exp()).abs() < (dt * mu).powi(3) / 6.0);
    }

    #[test]
    fn cn_preserves_sign_under_step_limit() {
        let g = TraitGrid::new(-1.0, 1.0, 21).unwrap();
        let h2 = g.spacing() * g.spacing();
        let cn = CrankNicolson::new(&g, h2, None);
        let mut x = vec![0.0; 21];
        x[10] = 1.0;
        for _ in 0..5 {
            cn.apply(&mut x);
            assert!(x.iter().all(|&v| v >= 0.0));
        }
    }
}
