//! Classical two-species Lotka–Volterra competition
//!
//! ```text
//! Y' = Y (d - Y - b X)
//! X' = X (m - c Y - X)
//! ```
//!
//! Equilibria and their classification, saddle spectral data, the local
//! quadratic approximation of the saddle's stable manifold, the global
//! manifold by backward-time integration, and basin queries against it.

use crate::error::{Error, Result};
use crate::rk::{self, Tolerances, Trajectory};

/// Relative tolerance for the equalities separating the generic cases.
pub const CASE_TOLERANCE: f64 = 1e-12;

/// Distance to the separatrix below which a point counts as on it.
pub const ON_SEPARATRIX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvParams {
    /// Intrinsic rate of `Y`.
    pub d_bar: f64,
    /// Intrinsic rate of `X`.
    pub m_bar: f64,
    pub b: f64,
    pub c: f64,
}

impl LvParams {
    pub fn new(d_bar: f64, m_bar: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("d_bar", d_bar), ("m_bar", m_bar), ("b", b), ("c", c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be > 0 (got {v})")));
            }
        }
        Ok(Self { d_bar, m_bar, b, c })
    }

    pub fn vector_field(&self, y: f64, x: f64) -> [f64; 2] {
        [
            y * (self.d_bar - y - self.b * x),
            x * (self.m_bar - self.c * y - x),
        ]
    }

    pub fn jacobian(&self, y: f64, x: f64) -> [[f64; 2]; 2] {
        [
            [self.d_bar - 2.0 * y - self.b * x, -self.b * y],
            [-self.c * x, self.m_bar - self.c * y - 2.0 * x],
        ]
    }

    /// Coexistence point `((d - b m)/(1 - bc), (m - c d)/(1 - bc))`, `None` when `bc = 1`.
    pub fn interior_point(&self) -> Option<[f64; 2]> {
        let det = 1.0 - self.b * self.c;
        if det.abs() <= CASE_TOLERANCE * (1.0 + self.b * self.c) {
            return None;
        }
        Some([
            (self.d_bar - self.b * self.m_bar) / det,
            (self.m_bar - self.c * self.d_bar) / det,
        ])
    }
}

/// Dynamical regime of the competition system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LvCase {
    /// `c < m/d`, `b < d/m`: the interior point is globally stable.
    Coexistence,
    /// `c > m/d`, `b < d/m`: `(d, 0)` is globally stable.
    ExclusionU,
    /// `c < m/d`, `b > d/m`: `(0, m)` is globally stable.
    ExclusionV,
    /// `bc = 1`, `b m = d`: a segment of equilibria on `Y + b X = d`.
    Degenerate,
    /// `c > m/d`, `b > d/m`: saddle between two stable exclusion states.
    Bistable,
    /// Remaining boundary equalities.
    NonGeneric,
}

impl LvCase {
    pub fn label(&self) -> &'static str {
        match self {
            LvCase::Coexistence => "coexistence",
            LvCase::ExclusionU => "exclusion_u",
            LvCase::ExclusionV => "exclusion_v",
            LvCase::Degenerate => "degenerate",
            LvCase::Bistable => "bistable",
            LvCase::NonGeneric => "non_generic",
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CASE_TOLERANCE * a.abs().max(b.abs())
}

pub fn classify(p: &LvParams) -> LvCase {
    let c_crit = p.m_bar / p.d_bar;
    let b_crit = p.d_bar / p.m_bar;
    if close(p.b * p.c, 1.0) && close(p.b * p.m_bar, p.d_bar) {
        return LvCase::Degenerate;
    }
    if close(p.c, c_crit) || close(p.b, b_crit) {
        return LvCase::NonGeneric;
    }
    match (p.c < c_crit, p.b < b_crit) {
        (true, true) => LvCase::Coexistence,
        (false, true) => LvCase::ExclusionU,
        (true, false) => LvCase::ExclusionV,
        (false, false) => LvCase::Bistable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSpectrum {
    /// Stable eigenvalue (negative).
    pub lambda1: f64,
    /// Unstable eigenvalue (positive).
    pub lambda2: f64,
    /// Slope of the stable manifold at the saddle.
    pub k: f64,
    /// Quadratic coefficient of the stable manifold at the saddle.
    pub a2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    /// Positive coexistence point, when it exists.
    pub p1: Option<[f64; 2]>,
    pub p2: [f64; 2],
    pub p3: [f64; 2],
    pub origin: [f64; 2],
    pub case: LvCase,
    /// Present in the bistable case only.
    pub saddle: Option<SaddleSpectrum>,
}

pub fn equilibria(p: &LvParams) -> EquilibriumReport {
    let case = classify(p);
    let p1 = p.interior_point().filter(|q| q[0] > 0.0 && q[1] > 0.0);
    let saddle = if case == LvCase::Bistable {
        local_quadratic(p).ok().and_then(|(k, a2)| {
            let (lambda1, lambda2, _) = saddle_spectrum(p).ok()?;
            Some(SaddleSpectrum { lambda1, lambda2, k, a2 })
        })
    } else {
        None
    };
    EquilibriumReport {
        p1,
        p2: [p.d_bar, 0.0],
        p3: [0.0, p.m_bar],
        origin: [0.0, 0.0],
        case,
        saddle,
    }
}

fn saddle_point(p: &LvParams) -> Result<[f64; 2]> {
    let case = classify(p);
    if case != LvCase::Bistable {
        return Err(Error::NotBistable(case));
    }
    p.interior_point().ok_or(Error::NotBistable(case))
}

/// `(lambda1, lambda2, k)` at the saddle, with `lambda1 < 0 < lambda2`.
pub fn saddle_spectrum(p: &LvParams) -> Result<(f64, f64, f64)> {
    let [ys, xs] = saddle_point(p)?;
    let disc = xs * xs + ys * ys + (4.0 * p.b * p.c - 2.0) * xs * ys;
    let root = disc.sqrt();
    let lambda1 = (-(xs + ys) - root) / 2.0;
    let lambda2 = (-(xs + ys) + root) / 2.0;
    let k = (ys + lambda1) / (-p.b * ys);
    Ok((lambda1, lambda2, k))
}

/// `(k, a2)` of `h(Y) ≈ X* + k (Y - Y*) + a2 (Y - Y*)^2`.
pub fn local_quadratic(p: &LvParams) -> Result<(f64, f64)> {
    let [ys, xs] = saddle_point(p)?;
    let (lambda1, _, k) = saddle_spectrum(p)?;
    let a2 = ((p.c - 1.0) * k + (1.0 - p.b) * k * k) / (-ys - xs - 3.0 * lambda1);
    Ok((k, a2))
}

/// Unit stable eigenvector at the saddle, oriented into the positive quadrant.
pub fn stable_direction(p: &LvParams) -> Result<[f64; 2]> {
    let [ys, _] = saddle_point(p)?;
    let (lambda1, _, _) = saddle_spectrum(p)?;
    let vy = -p.b * ys / (ys + lambda1);
    let norm = (vy * vy + 1.0).sqrt();
    Ok([vy / norm, 1.0 / norm])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixOptions {
    /// Seed offset along the stable direction; `None` uses `1e-6 |P1|`.
    pub eps: Option<f64>,
    pub t_max: f64,
    pub tol: Tolerances,
    /// Largest arclength between consecutive stored points.
    pub max_spacing: f64,
    /// Smallest arclength between consecutive stored points.
    pub min_spacing: f64,
}

impl Default for SeparatrixOptions {
    fn default() -> Self {
        Self {
            eps: None,
            t_max: 1000.0,
            tol: Tolerances {
                rtol: 1e-12,
                atol: 1e-14,
            },
            max_spacing: 1e-3,
            min_spacing: 1e-5,
        }
    }
}

/// Lower branch stops once `Y` falls below this.
pub const ORIGIN_CUTOFF: f64 = 1e-8;

/// Graph `X = h(Y)` of the saddle's stable manifold as a sorted polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixCurve {
    points: Vec<[f64; 2]>,
    saddle: [f64; 2],
    local_k: f64,
    local_a2: f64,
}

impl SeparatrixCurve {
    /// Points `(Y, X)` sorted by `Y`, starting at the origin.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn saddle(&self) -> [f64; 2] {
        self.saddle
    }

    pub fn local_k(&self) -> f64 {
        self.local_k
    }

    pub fn local_a2(&self) -> f64 {
        self.local_a2
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.points[0][0], self.points[self.points.len() - 1][0])
    }

    /// `h(y)` by linear interpolation.
    pub fn eval(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.y_range();
        if !(y >= lo && y <= hi) {
            return Err(Error::Extrapolation { y, lo, hi });
        }
        let j = self.points.partition_point(|q| q[0] < y);
        if j == 0 {
            return Ok(self.points[0][1]);
        }
        let [y0, x0] = self.points[j - 1];
        let [y1, x1] = self.points[j];
        if y == y1 {
            return Ok(x1);
        }
        Ok(x0 + (x1 - x0) * (y - y0) / (y1 - y0))
    }

    /// Largest residual of `Y (d - Y - b h) h' = h (m - c Y - h)` over stored
    /// interior points with `Y` in `[y_lo, y_hi]`, `h'` by three-point
    /// differences on the non-uniform samples.
    pub fn functional_residual(&self, p: &LvParams, y_lo: f64, y_hi: f64) -> f64 {
        self.points
            .windows(3)
            .filter(|w| w[1][0] >= y_lo && w[1][0] <= y_hi)
            .map(|w| {
                let [y, h] = w[1];
                let slope = three_point_slope(w);
                (y * (p.d_bar - y - p.b * h) * slope - h * (p.m_bar - p.c * y - h)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Smallest `X`-increment between consecutive points (positive iff strictly increasing).
    pub fn min_increment(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][1] - w[0][1]).min(w[1][0] - w[0][0]))
            .fold(f64::INFINITY, f64::min)
    }

    /// `h''(y)` by a centred second difference of the interpolant with step `delta`.
    pub fn curvature_at(&self, y: f64, delta: f64) -> Result<f64> {
        let hm = self.eval(y - delta)?;
        let h0 = self.eval(y)?;
        let hp = self.eval(y + delta)?;
        Ok((hp - 2.0 * h0 + hm) / (delta * delta))
    }

    /// Deviations `|h(Y) - quadratic(Y)|` at stored points with
    /// `window / 10 <= |Y - Y*| <= window`, as `(|Y - Y*|, deviation)`.
    pub fn quadratic_deviations(&self, window: f64) -> Vec<(f64, f64)> {
        let [ys, xs] = self.saddle;
        self.points
            .iter()
            .filter_map(|&[y, x]| {
                let s = y - ys;
                let dist = s.abs();
                (dist >= window / 10.0 && dist <= window).then(|| {
                    let q = xs + self.local_k * s + self.local_a2 * s * s;
                    (dist, (x - q).abs())
                })
            })
            .collect()
    }

    /// Least-squares slope of `log(deviation)` against `log|Y - Y*|`.
    pub fn quadratic_deviation_order(&self, window: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .quadratic_deviations(window)
            .into_iter()
            .filter(|&(_, e)| e > 0.0)
            .map(|(s, e)| (s.ln(), e.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }
}

fn three_point_slope(w: &[[f64; 2]]) -> f64 {
    let (d1, d2) = (w[1][0] - w[0][0], w[2][0] - w[1][0]);
    -d2 / (d1 * (d1 + d2)) * w[0][1] + (d2 - d1) / (d1 * d2) * w[1][1] + d1 / (d2 * (d1 + d2)) * w[2][1]
}

/// Integrates one branch of the stable manifold backward in time from `seed`.
fn backward_branch(p: &LvParams, seed: [f64; 2], opts: &SeparatrixOptions, bound: f64) -> Result<Vec<[f64; 2]>> {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let reversed = |_: f64, y: &[f64], dy: &mut [f64]| {
        let f = p.vector_field(y[0], y[1]);
        dy[0] = -f[0];
        dy[1] = -f[1];
    };
    let max_step = |_: f64, y: &[f64]| {
        let f = p.vector_field(y[0], y[1]);
        let speed = f[0].hypot(f[1]);
        if speed > 0.0 {
            opts.max_spacing / speed
        } else {
            f64::INFINITY
        }
    };
    let observer = |_: f64, y: &[f64]| {
        let q = [y[0], y[1]];
        let keep = pts
            .last()
            .is_none_or(|l: &[f64; 2]| (q[0] - l[0]).hypot(q[1] - l[1]) >= opts.min_spacing);
        if keep {
            pts.push(q);
        }
        q[0] >= ORIGIN_CUTOFF && q[0] <= bound && q[1] <= bound && q[1] >= 0.0
    };
    rk::integrate_with(reversed, 0.0, &seed, opts.t_max, opts.tol, max_step, observer)?;
    Ok(pts)
}

/// Global stable manifold of the saddle by backward integration from
/// `P1 ± eps v`, with `v` the stable eigenvector.
pub fn global_separatrix(p: &LvParams, opts: &SeparatrixOptions) -> Result<SeparatrixCurve> {
    let saddle = saddle_point(p)?;
    let (local_k, local_a2) = local_quadratic(p)?;
    let dir = stable_direction(p)?;
    let eps = opts.eps.unwrap_or(1e-6 * saddle[0].hypot(saddle[1]));
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("seed offset must be positive (got {eps})")));
    }
    let bound = 10.0 * p.d_bar.max(p.m_bar);
    let lower = backward_branch(p, [saddle[0] - eps * dir[0], saddle[1] - eps * dir[1]], opts, bound)?;
    let upper = backward_branch(p, [saddle[0] + eps * dir[0], saddle[1] + eps * dir[1]], opts, bound)?;

    let near_saddle = |q: &[f64; 2]| (q[0] - saddle[0]).hypot(q[1] - saddle[1]) < opts.min_spacing;
    let mut points = Vec::with_capacity(lower.len() + upper.len() + 2);
    points.push([0.0, 0.0]);
    points.extend(lower.iter().rev().filter(|q| !near_saddle(q) && q[0] > 0.0));
    points.push(saddle);
    points.extend(upper.iter().filter(|q| !near_saddle(q)));
    points.sort_by(|a, b| a[0].total_cmp(&b[0]));

    let curve = SeparatrixCurve {
        points,
        saddle,
        local_k,
        local_a2,
    };
    if !(curve.min_increment() > 0.0) {
        return Err(Error::NotMonotone { eps });
    }
    Ok(curve)
}

/// Long-time fate predicted by the separatrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basin {
    /// Below the separatrix: converges to `(d, 0)`.
    ToP2,
    /// Above the separatrix: converges to `(0, m)`.
    ToP3,
    OnSeparatrix,
}

impl Basin {
    pub fn label(&self) -> &'static str {
        match self {
            Basin::ToP2 => "to_p2",
            Basin::ToP3 => "to_p3",
            Basin::OnSeparatrix => "on_separatrix",
        }
    }
}

pub fn basin_query(curve: &SeparatrixCurve, y0: f64, x0: f64) -> Result<Basin> {
    if !(y0 >= 0.0 && x0 >= 0.0) {
        return Err(Error::Invalid(format!("basin query needs Y0, X0 >= 0 (got {y0}, {x0})")));
    }
    let h = curve.eval(y0)?;
    Ok(if (x0 - h).abs() <= ON_SEPARATRIX_TOLERANCE {
        Basin::OnSeparatrix
    } else if x0 < h {
        Basin::ToP2
    } else {
        Basin::ToP3
    })
}

/// Forward trajectory from `(y0, x0)` to `t_end`.
pub fn integrate_lv(p: &LvParams, y0: f64, x0: f64, t_end: f64, tol: Tolerances) -> Result<Trajectory> {
    if !(y0 >= 0.0 && x0 >= 0.0 && y0.is_finite() && x0.is_finite()) {
        return Err(Error::Invalid(format!("initial data must be nonnegative (got {y0}, {x0})")));
    }
    rk::integrate(
        |_, y, dy| {
            let f = p.vector_field(y[0], y[1]);
            dy[0] = f[0];
            dy[1] = f[1];
        },
        0.0,
        &[y0, x0],
        t_end,
        tol,
    )
}
