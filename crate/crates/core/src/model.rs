//! Shared model types: parameters, population state, concentration metrics
//! and the standing-assumption report.

use crate::error::{Error, Result};
use crate::grid::TraitGrid;
use crate::resource::ResourceFunction;

/// Densities below this are treated as roundoff; anything lower is a hard failure.
pub const NEGATIVITY_TOLERANCE: f64 = -1e-12;

/// Relative tolerance under which `1 - b c` counts as zero.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Competition of `v` on `u`.
    pub b: f64,
    /// Competition of `u` on `v`.
    pub c: f64,
    /// Constant growth rate of `v` in the mutation-free model.
    pub m_bar: f64,
    pub d: ResourceFunction,
    /// Growth landscape of `v` in the diffusive model.
    pub m: ResourceFunction,
}

impl ModelParams {
    pub fn new(b: f64, c: f64, m_bar: f64, d: ResourceFunction, m: ResourceFunction) -> Result<Self> {
        for (name, v) in [("b", b), ("c", c), ("m_bar", m_bar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be > 0 (got {v})")));
            }
        }
        d.check_shape()?;
        m.check_shape()?;
        Ok(Self { b, c, m_bar, d, m })
    }

    /// Mutation-free parameters with `m(x) = m_bar`.
    pub fn integro(b: f64, c: f64, m_bar: f64, d: ResourceFunction) -> Result<Self> {
        Self::new(b, c, m_bar, d, ResourceFunction::Constant { level: m_bar })
    }

    pub fn determinant(&self) -> f64 {
        1.0 - self.b * self.c
    }

    pub fn is_singular(&self) -> bool {
        self.determinant().abs() <= SINGULAR_TOLERANCE * (1.0 + self.b * self.c)
    }

    /// `(min d, max d)` over the grid.
    pub fn d_range(&self, grid: &TraitGrid) -> (f64, f64) {
        range(&self.d.sample(grid))
    }
}

fn range(vals: &[f64]) -> (f64, f64) {
    vals.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Solves `r1 + b r2 = a1`, `c r1 + r2 = a2`.
pub fn solve_competition_pair(a1: f64, a2: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let det = 1.0 - b * c;
    if det.abs() <= SINGULAR_TOLERANCE * (1.0 + b * c) {
        return Err(Error::Singular { det });
    }
    Ok(((a1 - b * a2) / det, (a2 - c * a1) / det))
}

/// Fitness peak of `d` restricted to the support of `u0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessPeak {
    pub index: usize,
    pub x: f64,
    pub d_max: f64,
    /// No other supported node attains `d_max` (relative tolerance 1e-12).
    pub unique: bool,
}

pub fn fitness_peak(d_values: &[f64], u0: &[f64], grid: &TraitGrid) -> Option<FitnessPeak> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&d, &u)) in d_values.iter().zip(u0).enumerate() {
        if u > 0.0 && best.is_none_or(|(_, b)| d > b) {
            best = Some((i, d));
        }
    }
    let (index, d_max) = best?;
    let tol = 1e-12 * d_max.abs().max(1.0);
    let ties = d_values
        .iter()
        .zip(u0)
        .enumerate()
        .filter(|&(i, (&d, &u))| i != index && u > 0.0 && (d - d_max).abs() <= tol)
        .count();
    Some(FitnessPeak {
        index,
        x: grid.node(index),
        d_max,
        unique: ties == 0,
    })
}

/// Densities of both species on the grid with their masses.
///
/// Masses are recomputed by quadrature whenever the densities change.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    t: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    r1: f64,
    r2: f64,
}

impl PopulationState {
    pub fn new(grid: &TraitGrid, t: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        grid.check_len(&u)?;
        grid.check_len(&v)?;
        check_densities(t, &u)?;
        check_densities(t, &v)?;
        let r1 = grid.integrate(&u);
        let r2 = grid.integrate(&v);
        Ok(Self { t, u, v, r1, r2 })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn into_densities(self) -> (Vec<f64>, Vec<f64>) {
        (self.u, self.v)
    }

    /// Replaces the densities and time; masses are recomputed.
    pub fn update(&mut self, grid: &TraitGrid, t: f64, f: impl FnOnce(&mut [f64], &mut [f64])) -> Result<()> {
        f(&mut self.u, &mut self.v);
        self.t = t;
        for (i, x) in self.u.iter().chain(&self.v).enumerate() {
            if !x.is_finite() {
                self.r1 = grid.integrate(&self.u);
                self.r2 = grid.integrate(&self.v);
                return Err(Error::NonFinite {
                    t,
                    r1: self.r1,
                    r2: self.r2,
                    node: i % self.u.len(),
                });
            }
        }
        check_densities(t, &self.u)?;
        check_densities(t, &self.v)?;
        self.r1 = grid.integrate(&self.u);
        self.r2 = grid.integrate(&self.v);
        Ok(())
    }
}

fn check_densities(t: f64, f: &[f64]) -> Result<()> {
    for (node, &value) in f.iter().enumerate() {
        if !(value >= NEGATIVITY_TOLERANCE) {
            if value.is_nan() {
                return Err(Error::NonFinite {
                    t,
                    r1: f64::NAN,
                    r2: f64::NAN,
                    node,
                });
            }
            return Err(Error::Negative { t, node, value });
        }
    }
    Ok(())
}

/// Grid-level proxies for concentration of `u` toward a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationMetrics {
    pub peak_location: f64,
    pub mass_fraction_near_peak: f64,
    pub half_mass_width: f64,
}

impl ConcentrationMetrics {
    /// `reference` is the point the mass fraction is measured around
    /// (usually the fitness peak), `eps` the window half-width.
    pub fn compute(grid: &TraitGrid, u: &[f64], reference: f64, eps: f64) -> Self {
        let n = grid.len();
        let peak = u
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
            .0;
        let total = grid.integrate(u);
        if !(total > 0.0) {
            return Self {
                peak_location: grid.node(peak),
                mass_fraction_near_peak: 0.0,
                half_mass_width: 0.0,
            };
        }
        let tol = 1e-9 * grid.spacing();
        let near: f64 = (0..n)
            .filter(|&i| (grid.node(i) - reference).abs() <= eps + tol)
            .map(|i| grid.weight(i) * u[i])
            .sum();
        // grow [lo, hi] around the peak, always toward the heavier neighbour
        let (mut lo, mut hi) = (peak, peak);
        let mut mass = grid.weight(peak) * u[peak];
        while mass < 0.5 * total && (lo > 0 || hi + 1 < n) {
            let left = (lo > 0).then(|| grid.weight(lo - 1) * u[lo - 1]);
            let right = (hi + 1 < n).then(|| grid.weight(hi + 1) * u[hi + 1]);
            match (left, right) {
                (Some(l), Some(r)) if l >= r => {
                    lo -= 1;
                    mass += l;
                }
                (_, Some(r)) => {
                    hi += 1;
                    mass += r;
                }
                (Some(l), None) => {
                    lo -= 1;
                    mass += l;
                }
                (None, None) => break,
            }
        }
        Self {
            peak_location: grid.node(peak),
            mass_fraction_near_peak: (near / total).clamp(0.0, 1.0),
            half_mass_width: grid.node(hi) - grid.node(lo),
        }
    }
}

/// Outcome of checking the standing assumptions on initial data and `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub r1_initial: f64,
    pub r2_initial: f64,
    /// `0 < r1(0) < inf` and `0 < r2(0) < inf`.
    pub positive_initial_masses: bool,
    pub d_min: f64,
    pub d_max: f64,
    /// `0 < d_min < d_max < inf` over the support of `u0`.
    pub d_bounded: bool,
    /// The maximum of `d` over the support is attained at a single node.
    pub single_maximizer: bool,
    pub x_bar: Option<f64>,
    /// `(r1*, r2*)` solving `d_max = r1 + b r2`, `m_bar = c r1 + r2`.
    pub limit_pair: Option<(f64, f64)>,
    pub limit_pair_positive: bool,
    /// `max (d - r1* - b r2*) < 0` over the outer 10% of nodes at each end.
    pub tail_negative: bool,
}

impl AssumptionReport {
    /// Checks every simulator needs before it will run.
    pub fn mandatory_ok(&self) -> bool {
        self.positive_initial_masses && self.d_bounded
    }

    /// Everything the coexistence limit relies on.
    pub fn all_ok(&self) -> bool {
        self.mandatory_ok() && self.single_maximizer && self.limit_pair_positive && self.tail_negative
    }
}

pub fn validate_assumptions(params: &ModelParams, grid: &TraitGrid, u0: &[f64], v0: &[f64]) -> Result<AssumptionReport> {
    grid.check_len(u0)?;
    grid.check_len(v0)?;
    let r1_initial = grid.integrate(u0);
    let r2_initial = grid.integrate(v0);
    let positive_initial_masses =
        r1_initial > 0.0 && r1_initial.is_finite() && r2_initial > 0.0 && r2_initial.is_finite();

    let d_values = params.d.sample(grid);
    let (grid_min, _) = range(&d_values);
    let peak = fitness_peak(&d_values, u0, grid);
    let d_max = peak.map_or(range(&d_values).1, |p| p.d_max);
    let d_bounded = grid_min > 0.0 && grid_min < d_max && d_max.is_finite();

    let limit_pair = solve_competition_pair(d_max, params.m_bar, params.b, params.c).ok();
    let limit_pair_positive = limit_pair.is_some_and(|(a, b)| a > 0.0 && b > 0.0);
    let tail_negative = match limit_pair {
        Some((r1, r2)) => {
            let n = grid.len();
            let band = (n / 10).max(1);
            d_values[..band]
                .iter()
                .chain(&d_values[n - band..])
                .all(|&d| d - r1 - params.b * r2 < 0.0)
        }
        None => false,
    };

    Ok(AssumptionReport {
        r1_initial,
        r2_initial,
        positive_initial_masses,
        d_min: grid_min,
        d_max,
        d_bounded,
        single_maximizer: peak.is_some_and(|p| p.unique),
        x_bar: peak.map(|p| p.x),
        limit_pair,
        limit_pair_positive,
        tail_negative,
    })
}
