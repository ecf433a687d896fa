//! Embedded Dormand–Prince 5(4) integrator with adaptive step control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

/// Accepted steps of an integration, including the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.t.last()?, self.y.last()?.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MAX_STEPS: usize = 50_000_000;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
        }
    }
}

fn rms_norm(v: impl Iterator<Item = f64>, dim: usize) -> f64 {
    (v.map(|x| x * x).sum::<f64>() / dim as f64).sqrt()
}

/// One trial step from `(t, y)` with `k[0] = f(t, y)` already filled.
/// Leaves the 5th-order solution in `s.y_new`, `f(t+h, y_new)` in `s.k[6]`,
/// and returns the scaled error norm.
fn trial_step<F>(rhs: &mut F, t: f64, y: &[f64], h: f64, tol: Tolerances, s: &mut Stages) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    macro_rules! stage {
        ($out:expr, $c:expr, $($a:expr => $j:expr),+) => {{
            for i in 0..dim {
                s.tmp[i] = y[i] + h * (0.0 $(+ $a * s.k[$j][i])+);
            }
            rhs(t + $c * h, &s.tmp, &mut s.k[$out]);
        }};
    }
    stage!(1, C2, A21 => 0);
    stage!(2, C3, A31 => 0, A32 => 1);
    stage!(3, C4, A41 => 0, A42 => 1, A43 => 2);
    stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
    stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
    for i in 0..dim {
        s.y_new[i] = y[i]
            + h * (A71 * s.k[0][i] + A73 * s.k[2][i] + A74 * s.k[3][i] + A75 * s.k[4][i] + A76 * s.k[5][i]);
    }
    rhs(t + h, &s.y_new, &mut s.k[6]);
    rms_norm(
        (0..dim).map(|i| {
            let e = h
                * (E1 * s.k[0][i] + E3 * s.k[2][i] + E4 * s.k[3][i] + E5 * s.k[4][i] + E6 * s.k[5][i]
                    + E7 * s.k[6][i]);
            e / (tol.atol + tol.rtol * y[i].abs().max(s.y_new[i].abs()))
        }),
        dim,
    )
}

fn initial_step<F>(rhs: &mut F, t0: f64, y0: &[f64], f0: &[f64], tol: Tolerances) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| tol.atol + tol.rtol * y.abs()).collect();
    let d0 = rms_norm(y0.iter().zip(&sc).map(|(y, s)| y / s), dim);
    let d1 = rms_norm(f0.iter().zip(&sc).map(|(f, s)| f / s), dim);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; dim];
    rhs(t0 + h0, &y1, &mut f1);
    let d2 = rms_norm(f1.iter().zip(f0).zip(&sc).map(|((a, b), s)| (a - b) / s), dim) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`.
///
/// `max_step(t, y)` caps the next step; `observer(t, y)` is called on every
/// accepted point and stops the integration early by returning `false`.
pub fn integrate_with<F, M, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    tol: Tolerances,
    mut max_step: M,
    mut observer: O,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    M: FnMut(f64, &[f64]) -> f64,
    O: FnMut(f64, &[f64]) -> bool,
{
    if !(tol.rtol > 0.0 && tol.atol > 0.0) {
        return Err(Error::Invalid("integrator tolerances must be positive".into()));
    }
    let dim = y0.len();
    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0.to_vec()],
    };
    if !observer(t0, y0) || t_end <= t0 {
        return Ok(traj);
    }
    let mut s = Stages::new(dim);
    let mut t = t0;
    let mut y = y0.to_vec();
    rhs(t, &y, &mut s.k[0]);
    let mut h = initial_step(&mut rhs, t0, y0, &s.k[0].clone(), tol);
    let mut last_rejected = false;
    for _ in 0..MAX_STEPS {
        let remaining = t_end - t;
        h = h.min(max_step(t, &y)).min(remaining);
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min && h < remaining {
            return Err(Error::StepUnderflow { t, h });
        }
        let err = trial_step(&mut rhs, t, &y, h, tol, &mut s);
        if err.is_finite() && err <= 1.0 {
            let reached_end = t_end - (t + h) <= 1e-13 * t_end.abs().max(1.0);
            t = if reached_end { t_end } else { t + h };
            std::mem::swap(&mut y, &mut s.y_new);
            s.k.swap(0, 6);
            traj.t.push(t);
            traj.y.push(y.clone());
            if reached_end || !observer(t, &y) {
                return Ok(traj);
            }
            let mut factor = if err == 0.0 { 5.0 } else { SAFETY * err.powf(-0.2) };
            factor = factor.clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h *= factor;
        } else {
            last_rejected = true;
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= factor;
        }
    }
    Err(Error::Invalid(format!("integrator exceeded {MAX_STEPS} steps at t = {t}")))
}

/// Plain integration from `t0` to `t_end` without step caps.
pub fn integrate<F>(rhs: F, t0: f64, y0: &[f64], t_end: f64, tol: Tolerances) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_with(rhs, t0, y0, t_end, tol, |_, _| f64::INFINITY, |_, _| true)
}
