//! Mutation-free integro-differential competition
//!
//! ```text
//! u_t = u (d(x) - r1 - b r2)
//! v_t = v (m - c r1 - r2),      r1 = ∫u, r2 = ∫v
//! ```
//!
//! Stepped with an exponential update whose rates use a Heun average of the
//! masses, so positivity, the support of `u` and the shape of `v` are kept
//! exactly.

use crate::error::{Error, Result};
use crate::grid::TraitGrid;
use crate::model::{validate_assumptions, AssumptionReport, ConcentrationMetrics, ModelParams, PopulationState};
use crate::phase_plane::{self, Basin, LvCase, LvParams, SeparatrixCurve};

/// Runs abort once a mass exceeds this multiple of its a-priori bound.
pub const BLOW_UP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Diagnostics are recorded every this many steps (and at the end).
    pub record_every: usize,
    /// Half-width of the concentration window around `x̄`.
    pub eps_conc: f64,
}

impl OdeSimConfig {
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
        if !(self.eps_conc.is_finite() && self.eps_conc > 0.0) {
            return Err(Error::Invalid(format!("eps_conc must be > 0 (got {})", self.eps_conc)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }
}

/// Exponential stepper with `exp(dt d_i)` precomputed.
#[derive(Debug, Clone)]
pub struct OdeStepper {
    dt: f64,
    b: f64,
    c: f64,
    m_bar: f64,
    growth: Vec<f64>,
    weights: Vec<f64>,
}

impl OdeStepper {
    pub fn new(params: &ModelParams, grid: &TraitGrid, dt: f64) -> Self {
        Self {
            dt,
            b: params.b,
            c: params.c,
            m_bar: params.m_bar,
            growth: params.d.sample(grid).iter().map(|d| (dt * d).exp()).collect(),
            weights: grid.weights(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` by one step of length `dt`.
    pub fn step(&self, grid: &TraitGrid, state: &mut PopulationState) -> Result<()> {
        let (r1, r2) = (state.r1(), state.r2());
        let rate_u = r1 + self.b * r2;
        let rate_v = self.c * r1 + r2;
        // predictor: frozen rates over the whole step
        let decay_u = (-self.dt * rate_u).exp();
        let scale_v = (self.dt * (self.m_bar - rate_v)).exp();
        let pred_r1 = decay_u
            * state
                .u()
                .iter()
                .zip(&self.growth)
                .zip(&self.weights)
                .map(|((u, g), w)| w * u * g)
                .sum::<f64>();
        let pred_r2 = scale_v * r2;
        let mean_u = 0.5 * (rate_u + pred_r1 + self.b * pred_r2);
        let mean_v = 0.5 * (rate_v + self.c * pred_r1 + pred_r2);
        let decay_u = (-self.dt * mean_u).exp();
        let scale_v = (self.dt * (self.m_bar - mean_v)).exp();
        let t = state.t() + self.dt;
        state.update(grid, t, |u, v| {
            for (x, g) in u.iter_mut().zip(&self.growth) {
                *x *= g * decay_u;
            }
            for x in v.iter_mut() {
                *x *= scale_v;
            }
        })
    }
}

/// One exponential step; builds a fresh [`OdeStepper`].
pub fn step(state: &mut PopulationState, params: &ModelParams, grid: &TraitGrid, dt: f64) -> Result<()> {
    OdeStepper::new(params, grid, dt).step(grid, state)
}

/// `u0(x) exp(t d(x) - ∫_0^t (r1 + b r2) ds)`, the time integral by the
/// trapezoid rule on the recorded series.
///
/// `times` must start at 0 and include `t`; consecutive samples may be at
/// most `max_gap` apart.
pub fn semi_explicit_reconstruct(
    u0: &[f64],
    d_values: &[f64],
    times: &[f64],
    r1: &[f64],
    r2: &[f64],
    t: f64,
    b: f64,
    max_gap: f64,
) -> Result<Vec<f64>> {
    if d_values.len() != u0.len() {
        return Err(Error::LengthMismatch {
            expected: u0.len(),
            got: d_values.len(),
        });
    }
    if r1.len() != times.len() || r2.len() != times.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: r1.len().min(r2.len()),
        });
    }
    if t == 0.0 {
        return Ok(u0.to_vec());
    }
    if times.first() != Some(&0.0) {
        return Err(Error::Invalid("mass series must start at t = 0".into()));
    }
    let tol = 1e-9 * t.abs().max(1.0);
    let end = times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .ok_or_else(|| Error::Invalid(format!("t = {t} is not a recorded time")))?;
    let mut integral = 0.0;
    for j in 0..end {
        let gap = times[j + 1] - times[j];
        if gap > max_gap * (1.0 + 1e-9) {
            return Err(Error::SeriesGap {
                t: times[j],
                gap,
                max_gap,
            });
        }
        integral += 0.5 * gap * (r1[j] + b * r2[j] + r1[j + 1] + b * r2[j + 1]);
    }
    Ok(u0
        .iter()
        .zip(d_values)
        .map(|(u, d)| u * (t * d - integral).exp())
        .collect())
}

/// `P(r1, r2) = (c r1² + 2bc r1 r2 + b (r2 - m)²) / (2 c r1)`.
pub fn lyapunov_p(r1: f64, r2: f64, b: f64, c: f64, m_bar: f64) -> f64 {
    (c * r1 * r1 + 2.0 * b * c * r1 * r2 + b * (r2 - m_bar) * (r2 - m_bar)) / (2.0 * c * r1)
}

/// `∫ (d(x) - P(r1, r2)) u dx`, nondecreasing along solutions.
pub fn lyapunov_value(grid: &TraitGrid, d_values: &[f64], u: &[f64], r2: f64, params: &ModelParams) -> Result<f64> {
    grid.check_len(d_values)?;
    grid.check_len(u)?;
    let r1 = grid.integrate(u);
    if !(r1 > 0.0) {
        return Err(Error::Invalid(format!("Lyapunov functional needs r1 > 0 (got {r1})")));
    }
    let p = lyapunov_p(r1, r2, params.b, params.c, params.m_bar);
    Ok(grid.integrate_product(d_values, u) - p * r1)
}

/// `I1 = ∫ (d - r1 - b r2)² u dx`, `I2 = r2 (c r1 + r2 - m)²`.
pub fn entropy_residuals(grid: &TraitGrid, d_values: &[f64], state: &PopulationState, params: &ModelParams) -> (f64, f64) {
    let (r1, r2) = (state.r1(), state.r2());
    let rate = r1 + params.b * r2;
    let n = grid.len();
    let i1 = (0..n)
        .map(|i| {
            let f = d_values[i] - rate;
            grid.weight(i) * f * f * state.u()[i]
        })
        .sum();
    let g = params.c * r1 + r2 - params.m_bar;
    (i1, r2 * g * g)
}

/// Recorded diagnostics as parallel columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OdeDiagnostics {
    pub t: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub conc_frac: Vec<f64>,
    pub argmax_u: Vec<f64>,
}

impl OdeDiagnostics {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest decrease between consecutive Lyapunov samples, relative to
    /// `max |L|`. Zero for a nondecreasing series.
    pub fn lyapunov_max_drop(&self) -> f64 {
        let scale = self.lyapunov.iter().filter(|x| x.is_finite()).fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        self.lyapunov
            .windows(2)
            .filter(|w| w[0].is_finite() && w[1].is_finite())
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max)
            / scale
    }

    /// Largest excess of `(r1, r2)` over the a-priori bounds.
    pub fn bound_excess(&self, d_max: f64, m_bar: f64) -> f64 {
        let (b1, b2) = (d_max.max(self.r1[0]), m_bar.max(self.r2[0]));
        self.r1
            .iter()
            .zip(&self.r2)
            .map(|(r1, r2)| (r1 - b1).max(r2 - b2))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }
}

/// Predicted long-time behaviour of the integro-differential model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeOutcome {
    Coexist { r1_star: f64, r2_star: f64, x_bar: f64 },
    UWins { d_max: f64, x_bar: f64 },
    VWins { m_bar: f64 },
    /// Limits lie on `r1 + b r2 = d_max`; which point is not predicted.
    Continuum { d_max: f64, b: f64 },
    /// Bistable with `r2(0) = h(r1(0))`; no limit claim.
    OnSeparatrix,
    /// A boundary equality not covered by the theory.
    Unresolved,
}

impl OdeOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            OdeOutcome::Coexist { .. } => "coexist",
            OdeOutcome::UWins { .. } => "u_wins",
            OdeOutcome::VWins { .. } => "v_wins",
            OdeOutcome::Continuum { .. } => "continuum",
            OdeOutcome::OnSeparatrix => "on_separatrix",
            OdeOutcome::Unresolved => "unresolved",
        }
    }

    /// Predicted `(r1, r2)` limit when the outcome pins one down.
    pub fn limit_masses(&self) -> Option<(f64, f64)> {
        match *self {
            OdeOutcome::Coexist { r1_star, r2_star, .. } => Some((r1_star, r2_star)),
            OdeOutcome::UWins { d_max, .. } => Some((d_max, 0.0)),
            OdeOutcome::VWins { m_bar } => Some((0.0, m_bar)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdePrediction {
    pub outcome: OdeOutcome,
    /// Case of the mass system with `d̄ = d_max`.
    pub case: LvCase,
    pub d_max: f64,
    pub x_bar: f64,
    /// `(r1(0), r2(0))`.
    pub initial_masses: (f64, f64),
}

/// Mass-level Lotka–Volterra parameters `(d_max, m, b, c)` for this data.
pub fn mass_system(params: &ModelParams, grid: &TraitGrid, u0: &[f64], v0: &[f64]) -> Result<(LvParams, AssumptionReport)> {
    let report = validate_assumptions(params, grid, u0, v0)?;
    if !report.mandatory_ok() {
        return Err(Error::Invalid(format!(
            "standing assumptions fail: r1(0) = {}, r2(0) = {}, d range [{}, {}]",
            report.r1_initial, report.r2_initial, report.d_min, report.d_max
        )));
    }
    let lv = LvParams::new(report.d_max, params.m_bar, params.b, params.c)?;
    Ok((lv, report))
}

pub fn predict_ode_outcome(
    params: &ModelParams,
    grid: &TraitGrid,
    u0: &[f64],
    v0: &[f64],
    separatrix: Option<&SeparatrixCurve>,
) -> Result<OdePrediction> {
    let (lv, report) = mass_system(params, grid, u0, v0)?;
    let x_bar = report.x_bar.unwrap_or(f64::NAN);
    let d_max = report.d_max;
    let case = phase_plane::classify(&lv);
    let outcome = match case {
        LvCase::Coexistence => {
            let (r1_star, r2_star) = report.limit_pair.ok_or(Error::Singular {
                det: params.determinant(),
            })?;
            OdeOutcome::Coexist { r1_star, r2_star, x_bar }
        }
        LvCase::ExclusionU => OdeOutcome::UWins { d_max, x_bar },
        LvCase::ExclusionV => OdeOutcome::VWins { m_bar: params.m_bar },
        LvCase::Degenerate => OdeOutcome::Continuum { d_max, b: params.b },
        LvCase::NonGeneric => OdeOutcome::Unresolved,
        LvCase::Bistable => {
            let curve = separatrix.ok_or(Error::MissingSeparatrix)?;
            match phase_plane::basin_query(curve, report.r1_initial, report.r2_initial)? {
                Basin::ToP2 => OdeOutcome::UWins { d_max, x_bar },
                Basin::ToP3 => OdeOutcome::VWins { m_bar: params.m_bar },
                Basin::OnSeparatrix => OdeOutcome::OnSeparatrix,
            }
        }
    };
    Ok(OdePrediction {
        outcome,
        case,
        d_max,
        x_bar,
        initial_masses: (report.r1_initial, report.r2_initial),
    })
}

#[derive(Debug, Clone)]
pub struct OdeRun {
    pub final_state: PopulationState,
    pub diagnostics: OdeDiagnostics,
    pub metrics: ConcentrationMetrics,
    pub assumptions: AssumptionReport,
}

/// Integrates to `config.t_end`, recording diagnostics.
pub fn run_ode_sim(
    params: &ModelParams,
    grid: &TraitGrid,
    u0: &[f64],
    v0: &[f64],
    config: &OdeSimConfig,
) -> Result<OdeRun> {
    config.validate()?;
    let assumptions = validate_assumptions(params, grid, u0, v0)?;
    if !assumptions.mandatory_ok() {
        return Err(Error::Invalid(format!(
            "standing assumptions fail: r1(0) = {}, r2(0) = {}, d range [{}, {}]",
            assumptions.r1_initial, assumptions.r2_initial, assumptions.d_min, assumptions.d_max
        )));
    }
    let x_ref = assumptions.x_bar.unwrap_or(0.0);
    let d_values = params.d.sample(grid);
    let guard1 = BLOW_UP_FACTOR * assumptions.d_max.max(assumptions.r1_initial);
    let guard2 = BLOW_UP_FACTOR * params.m_bar.max(assumptions.r2_initial);

    let mut state = PopulationState::new(grid, 0.0, u0.to_vec(), v0.to_vec())?;
    let mut diag = OdeDiagnostics::default();
    let record = |diag: &mut OdeDiagnostics, state: &PopulationState| {
        let (i1, i2) = entropy_residuals(grid, &d_values, state, params);
        let m = ConcentrationMetrics::compute(grid, state.u(), x_ref, config.eps_conc);
        diag.t.push(state.t());
        diag.r1.push(state.r1());
        diag.r2.push(state.r2());
        diag.lyapunov
            .push(lyapunov_value(grid, &d_values, state.u(), state.r2(), params).unwrap_or(f64::NAN));
        diag.i1.push(i1);
        diag.i2.push(i2);
        diag.conc_frac.push(m.mass_fraction_near_peak);
        diag.argmax_u.push(m.peak_location);
    };
    record(&mut diag, &state);

    let steps = config.steps();
    let stepper = OdeStepper::new(params, grid, config.dt);
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
    let metrics = ConcentrationMetrics::compute(grid, state.u(), x_ref, config.eps_conc);
    Ok(OdeRun {
        final_state: state,
        diagnostics: diag,
        metrics,
        assumptions,
    })
}
