//! Nonlocal reaction–diffusion competition
//!
//! ```text
//! u_t = u_xx + u (d(x) - r1 - b r2)
//! v_t = v_xx + v (m(x) - c r1 - r2)
//! ```
//!
//! Steady states come from two principal-eigenvalue shifts and a 2×2 linear
//! system for the masses; the long-time outcome is predicted from the
//! projections of the initial data onto the steady profiles.

use crate::eigen::{principal_shift, EIGEN_TOLERANCE};
use crate::error::{Error, Result};
use crate::grid::TraitGrid;
use crate::imex::{CrankNicolson, ImexStepper};
use crate::model::{solve_competition_pair, ModelParams, PopulationState};
use crate::phase_plane::{self, Basin, LvParams, SeparatrixCurve, SeparatrixOptions};
use crate::rk::{self, Tolerances, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution {
    pub u_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
    /// `r1 + b r2`, the principal shift of `d`.
    pub s1: f64,
    /// `c r1 + r2`, the principal shift of `m`.
    pub s2: f64,
    pub r1_bar: f64,
    pub r2_bar: f64,
    /// `‖-D2 u - (d - s1) u‖∞ / ‖u‖∞`, likewise for `v`.
    pub residual_u: f64,
    pub residual_v: f64,
}

impl SteadyStateSolution {
    /// Effective Lotka–Volterra rates `(s1, s2)` of the mass dynamics.
    pub fn effective_lv(&self, params: &ModelParams) -> Result<LvParams> {
        LvParams::new(self.s1, self.s2, params.b, params.c)
    }
}

/// Relative residual of `-D2 f - (q - s) f` at interior nodes.
pub fn stationary_residual(f: &[f64], q_values: &[f64], s: f64, grid: &TraitGrid) -> f64 {
    let n = f.len();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let fmax = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if fmax == 0.0 {
        return 0.0;
    }
    (1..n - 1)
        .map(|i| (-(f[i - 1] - 2.0 * f[i] + f[i + 1]) * inv_h2 - (q_values[i] - s) * f[i]).abs())
        .fold(0.0, f64::max)
        / fmax
}

pub fn steady_state(params: &ModelParams, grid: &TraitGrid) -> Result<SteadyStateSolution> {
    if params.is_singular() {
        return Err(Error::Singular {
            det: params.determinant(),
        });
    }
    let mode_u = principal_shift(&params.d, grid, EIGEN_TOLERANCE)?;
    let mode_v = principal_shift(&params.m, grid, EIGEN_TOLERANCE)?;
    let (s1, s2) = (mode_u.shift, mode_v.shift);
    let (r1, r2) = solve_competition_pair(s1, s2, params.b, params.c)?;
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Inadmissible { r1, r2, s1, s2 });
    }
    let scale = |phi: Vec<f64>, mass: f64| -> Vec<f64> {
        let total = grid.integrate(&phi);
        phi.into_iter().map(|p| p * mass / total).collect()
    };
    let u_bar = scale(mode_u.phi, r1);
    let v_bar = scale(mode_v.phi, r2);
    let residual_u = stationary_residual(&u_bar, &params.d.sample(grid), s1, grid);
    let residual_v = stationary_residual(&v_bar, &params.m.sample(grid), s2, grid);
    Ok(SteadyStateSolution {
        u_bar,
        v_bar,
        s1,
        s2,
        r1_bar: r1,
        r2_bar: r2,
        residual_u,
        residual_v,
    })
}

/// Projections `K = ∫ profile · initial / ∫ profile²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projections {
    pub k1: f64,
    pub k2: f64,
}

pub fn projection_constants(ss: &SteadyStateSolution, u0: &[f64], v0: &[f64], grid: &TraitGrid) -> Result<Projections> {
    grid.check_len(u0)?;
    grid.check_len(v0)?;
    let project = |profile: &[f64], init: &[f64]| -> Result<f64> {
        let norm = grid.integrate_product(profile, profile);
        if !(norm > 0.0) {
            return Err(Error::Invalid("steady profile is identically zero".into()));
        }
        Ok(grid.integrate_product(profile, init) / norm)
    };
    Ok(Projections {
        k1: project(&ss.u_bar, u0)?,
        k2: project(&ss.v_bar, v0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdeOutcome {
    /// Convergence to `(u_bar, v_bar)`.
    Coexist,
    /// `u → scale · u_bar`, `v → 0`.
    UWins { scale: f64 },
    /// `v → scale · v_bar`, `u → 0`.
    VWins { scale: f64 },
    /// `K2 r2 = h(K1 r1)`; no limit claim.
    OnSeparatrix,
}

impl PdeOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            PdeOutcome::Coexist => "coexist",
            PdeOutcome::UWins { .. } => "u_wins",
            PdeOutcome::VWins { .. } => "v_wins",
            PdeOutcome::OnSeparatrix => "on_separatrix",
        }
    }

    /// Predicted limit profiles, when the outcome determines them.
    pub fn limit_profiles(&self, ss: &SteadyStateSolution) -> Option<(Vec<f64>, Vec<f64>)> {
        let zero = vec![0.0; ss.u_bar.len()];
        match *self {
            PdeOutcome::Coexist => Some((ss.u_bar.clone(), ss.v_bar.clone())),
            PdeOutcome::UWins { scale } => Some((ss.u_bar.iter().map(|x| scale * x).collect(), zero)),
            PdeOutcome::VWins { scale } => Some((zero, ss.v_bar.iter().map(|x| scale * x).collect())),
            PdeOutcome::OnSeparatrix => None,
        }
    }

    /// Predicted `(r1, r2)` limit.
    pub fn limit_masses(&self, ss: &SteadyStateSolution) -> Option<(f64, f64)> {
        match *self {
            PdeOutcome::Coexist => Some((ss.r1_bar, ss.r2_bar)),
            PdeOutcome::UWins { scale } => Some((scale * ss.r1_bar, 0.0)),
            PdeOutcome::VWins { scale } => Some((0.0, scale * ss.r2_bar)),
            PdeOutcome::OnSeparatrix => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdePrediction {
    pub outcome: PdeOutcome,
    pub projections: Projections,
    /// `(K1 r1_bar, K2 r2_bar)`, the long-time masses of the linear companion.
    pub point: (f64, f64),
    /// `h(K1 r1_bar)` in the bistable branch.
    pub h_at_point: Option<f64>,
    pub separatrix: Option<SeparatrixCurve>,
}

pub fn predict_pde_outcome(
    params: &ModelParams,
    grid: &TraitGrid,
    u0: &[f64],
    v0: &[f64],
    ss: &SteadyStateSolution,
    opts: &SeparatrixOptions,
) -> Result<PdePrediction> {
    if params.is_singular() {
        return Err(Error::Singular {
            det: params.determinant(),
        });
    }
    let projections = projection_constants(ss, u0, v0, grid)?;
    let point = (projections.k1 * ss.r1_bar, projections.k2 * ss.r2_bar);
    if params.determinant() > 0.0 {
        return Ok(PdePrediction {
            outcome: PdeOutcome::Coexist,
            projections,
            point,
            h_at_point: None,
            separatrix: None,
        });
    }
    let lv = ss.effective_lv(params)?;
    let curve = phase_plane::global_separatrix(&lv, opts)?;
    let h = curve.eval(point.0)?;
    let outcome = match phase_plane::basin_query(&curve, point.0, point.1)? {
        Basin::ToP2 => PdeOutcome::UWins { scale: ss.s1 / ss.r1_bar },
        Basin::ToP3 => PdeOutcome::VWins { scale: ss.s2 / ss.r2_bar },
        Basin::OnSeparatrix => PdeOutcome::OnSeparatrix,
    };
    Ok(PdePrediction {
        outcome,
        projections,
        point,
        h_at_point: Some(h),
        separatrix: Some(curve),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeSimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl PdeSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Invalid(format!("dt must be > 0 (got {})", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::Invalid(format!("t_end must be >= dt (got {})", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Invalid("record_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PdeDiagnostics {
    pub t: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// `‖u - target_u‖∞`, relative to `‖target_u‖∞` when that is positive.
    pub dist_u: Vec<f64>,
    pub dist_v: Vec<f64>,
}

impl PdeDiagnostics {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// `‖f - target‖∞`, divided by `‖target‖∞` when positive.
pub fn sup_distance(f: &[f64], target: &[f64]) -> f64 {
    let diff = f.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let norm = target.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

#[derive(Debug, Clone)]
pub struct PdeRun {
    pub final_state: PopulationState,
    pub diagnostics: PdeDiagnostics,
}

/// Integrates to `config.t_end`, recording distances to `targets` (NaN
/// without targets).
pub fn run_pde_sim(
    params: &ModelParams,
    grid: &TraitGrid,
    u0: &[f64],
    v0: &[f64],
    config: &PdeSimConfig,
    targets: Option<(&[f64], &[f64])>,
) -> Result<PdeRun> {
    config.validate()?;
    let mut state = PopulationState::new(grid, 0.0, u0.to_vec(), v0.to_vec())?;
    if !(state.r1() > 0.0 || state.r2() > 0.0) {
        return Err(Error::Invalid("both initial masses are zero".into()));
    }
    let (_, d_max) = params.d_range(grid);
    let m_max = params.m.sample(grid).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let guard1 = crate::ode_sim::BLOW_UP_FACTOR * d_max.max(state.r1());
    let guard2 = crate::ode_sim::BLOW_UP_FACTOR * m_max.max(state.r2());

    let mut diag = PdeDiagnostics::default();
    let record = |diag: &mut PdeDiagnostics, s: &PopulationState| {
        diag.t.push(s.t());
        diag.r1.push(s.r1());
        diag.r2.push(s.r2());
        let (du, dv) = match targets {
            Some((tu, tv)) => (sup_distance(s.u(), tu), sup_distance(s.v(), tv)),
            None => (f64::NAN, f64::NAN),
        };
        diag.dist_u.push(du);
        diag.dist_v.push(dv);
    };
    record(&mut diag, &state);
    let stepper = ImexStepper::new(params, grid, config.dt);
    let steps = config.steps();
    for k in 1..=steps {
        stepper.step(grid, &mut state)?;
        if state.r1() > guard1 || state.r2() > guard2 {
            return Err(Error::BlowUp {
                t: state.t(),
                r1: state.r1(),
                r2: state.r2(),
                guard1,
                guard2,
            });
        }
        if k % config.record_every == 0 || k == steps {
            record(&mut diag, &state);
        }
    }
    Ok(PdeRun {
        final_state: state,
        diagnostics: diag,
    })
}

/// Recorded masses and steady-profile pairings of the linear companion
/// `ũ_t = ũ_xx + ũ (d - s1)`, `ṽ_t = ṽ_xx + ṽ (m - s2)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearRun {
    pub t: Vec<f64>,
    /// `λ1(t) = ∫ ũ`.
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// `∫ ū ũ`, constant in time.
    pub pairing_u: Vec<f64>,
    pub pairing_v: Vec<f64>,
}

impl LinearRun {
    /// Largest `|pairing(t) - pairing(0)| / |pairing(0)|` per unit time.
    pub fn pairing_drift_rate(&self) -> f64 {
        let t_end = *self.t.last().unwrap_or(&0.0);
        if t_end <= 0.0 {
            return 0.0;
        }
        let drift = |p: &[f64]| {
            p.iter()
                .map(|x| (x - p[0]).abs() / p[0].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        drift(&self.pairing_u).max(drift(&self.pairing_v)) / t_end
    }
}

/// Crank–Nicolson integration of the linear companion.
pub fn run_linear_companion(
    params: &ModelParams,
    grid: &TraitGrid,
    ss: &SteadyStateSolution,
    u0: &[f64],
    v0: &[f64],
    config: &PdeSimConfig,
) -> Result<LinearRun> {
    config.validate()?;
    grid.check_len(u0)?;
    grid.check_len(v0)?;
    let pot_u: Vec<f64> = params.d.sample(grid).iter().map(|d| d - ss.s1).collect();
    let pot_v: Vec<f64> = params.m.sample(grid).iter().map(|m| m - ss.s2).collect();
    let cn_u = CrankNicolson::new(grid, config.dt, Some(&pot_u));
    let cn_v = CrankNicolson::new(grid, config.dt, Some(&pot_v));
    let (mut u, mut v) = (u0.to_vec(), v0.to_vec());
    let n = grid.len();
    // the companion lives on the Dirichlet space
    u[0] = 0.0;
    u[n - 1] = 0.0;
    v[0] = 0.0;
    v[n - 1] = 0.0;
    let mut out = LinearRun::default();
    let mut record = |t: f64, u: &[f64], v: &[f64]| {
        out.t.push(t);
        out.lambda1.push(grid.integrate(u));
        out.lambda2.push(grid.integrate(v));
        out.pairing_u.push(grid.integrate_product(&ss.u_bar, u));
        out.pairing_v.push(grid.integrate_product(&ss.v_bar, v));
    };
    record(0.0, &u, &v);
    let steps = config.steps();
    for k in 1..=steps {
        cn_u.apply(&mut u);
        cn_v.apply(&mut v);
        if k % config.record_every == 0 || k == steps {
            record(k as f64 * config.dt, &u, &v);
        }
    }
    Ok(out)
}

/// Masses `λ1(t), λ2(t)` of the linear companion driving the reduced system.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSeries {
    Frozen { lambda1: f64, lambda2: f64 },
    /// Linear interpolation between samples, held constant past the ends.
    Sampled { t: Vec<f64>, lambda1: Vec<f64>, lambda2: Vec<f64> },
}

impl LambdaSeries {
    pub fn at(&self, t: f64) -> (f64, f64) {
        match self {
            LambdaSeries::Frozen { lambda1, lambda2 } => (*lambda1, *lambda2),
            LambdaSeries::Sampled { t: ts, lambda1, lambda2 } => {
                let j = ts.partition_point(|&s| s <= t);
                if j == 0 {
                    return (lambda1[0], lambda2[0]);
                }
                if j == ts.len() {
                    return (lambda1[j - 1], lambda2[j - 1]);
                }
                let a = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
                (
                    lambda1[j - 1] + a * (lambda1[j] - lambda1[j - 1]),
                    lambda2[j - 1] + a * (lambda2[j] - lambda2[j - 1]),
                )
            }
        }
    }
}

/// Integrates
/// `w' = -w (w λ1 + b z λ2 - r1 - b r2)`, `z' = -z (c w λ1 + z λ2 - c r1 - r2)`
/// from `(w0, z0)`; `y = [w, z]` in the returned trajectory.
pub fn reduced_wz(
    lambda: &LambdaSeries,
    params: &ModelParams,
    ss: &SteadyStateSolution,
    w0: f64,
    z0: f64,
    t_end: f64,
    tol: Tolerances,
) -> Result<Trajectory> {
    if !(w0 >= 0.0 && z0 >= 0.0) {
        return Err(Error::Invalid(format!("w(0), z(0) must be >= 0 (got {w0}, {z0})")));
    }
    if let LambdaSeries::Sampled { t, lambda1, lambda2 } = lambda {
        if t.is_empty() || t.len() != lambda1.len() || t.len() != lambda2.len() {
            return Err(Error::LengthMismatch {
                expected: t.len(),
                got: lambda1.len().min(lambda2.len()),
            });
        }
    }
    let (b, c) = (params.b, params.c);
    let (r1, r2) = (ss.r1_bar, ss.r2_bar);
    rk::integrate(
        |t, y, dy| {
            let (l1, l2) = lambda.at(t);
            dy[0] = -y[0] * (y[0] * l1 + b * y[1] * l2 - r1 - b * r2);
            dy[1] = -y[1] * (c * y[0] * l1 + y[1] * l2 - c * r1 - r2);
        },
        0.0,
        &[w0, z0],
        t_end,
        tol,
    )
}

/// `(w, z)` of the reduced system at each of the ascending `times`,
/// restarting the integrator at every sample.
pub fn reduced_wz_at(
    lambda: &LambdaSeries,
    params: &ModelParams,
    ss: &SteadyStateSolution,
    w0: f64,
    z0: f64,
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<[f64; 2]>> {
    let (b, c) = (params.b, params.c);
    let (r1, r2) = (ss.r1_bar, ss.r2_bar);
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut y) = (0.0, vec![w0, z0]);
    for &target in times {
        if target < t {
            return Err(Error::Invalid(format!("sample times must ascend from 0 (got {target} after {t})")));
        }
        if target > t {
            let traj = rk::integrate(
                |s, y, dy| {
                    let (l1, l2) = lambda.at(s);
                    dy[0] = -y[0] * (y[0] * l1 + b * y[1] * l2 - r1 - b * r2);
                    dy[1] = -y[1] * (c * y[0] * l1 + y[1] * l2 - c * r1 - r2);
                },
                t,
                &y,
                target,
                tol,
            )?;
            y = traj.y.last().cloned().unwrap_or(y);
            t = target;
        }
        out.push([y[0], y[1]]);
    }
    Ok(out)
}
