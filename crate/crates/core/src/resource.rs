//! Parametric resource landscapes `d(x)`, `m(x)`.
//!
//! The same families double as initial-condition profiles, where a zero
//! base level is allowed.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::TraitGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResourceFunction {
    Constant {
        level: f64,
    },
    /// `base + amplitude * exp(-((x - center) / width)^2)`
    GaussianBump {
        base: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `base + amplitude * (1 + cos(pi (x - center) / halfwidth)) / 2` inside
    /// `|x - center| < halfwidth`, `base` outside.
    CosineBump {
        base: f64,
        amplitude: f64,
        center: f64,
        halfwidth: f64,
    },
    /// Sum of two Gaussian bumps over a common base.
    TwoPeaks {
        base: f64,
        amp1: f64,
        center1: f64,
        width1: f64,
        amp2: f64,
        center2: f64,
        width2: f64,
    },
}

fn gauss(x: f64, center: f64, width: f64) -> f64 {
    let z = (x - center) / width;
    (-z * z).exp()
}

impl ResourceFunction {
    pub fn gaussian(base: f64, amplitude: f64, center: f64, width: f64) -> Self {
        Self::GaussianBump {
            base,
            amplitude,
            center,
            width,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { level } => level,
            Self::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => base + amplitude * gauss(x, center, width),
            Self::CosineBump {
                base,
                amplitude,
                center,
                halfwidth,
            } => {
                let z = (x - center) / halfwidth;
                if z.abs() < 1.0 {
                    base + amplitude * 0.5 * (1.0 + (PI * z).cos())
                } else {
                    base
                }
            }
            Self::TwoPeaks {
                base,
                amp1,
                center1,
                width1,
                amp2,
                center2,
                width2,
            } => base + amp1 * gauss(x, center1, width1) + amp2 * gauss(x, center2, width2),
        }
    }

    pub fn sample(&self, grid: &TraitGrid) -> Vec<f64> {
        grid.sample(|x| self.eval(x))
    }

    /// Level approached away from the bumps.
    pub fn base_level(&self) -> f64 {
        match *self {
            Self::Constant { level } => level,
            Self::GaussianBump { base, .. }
            | Self::CosineBump { base, .. }
            | Self::TwoPeaks { base, .. } => base,
        }
    }

    /// Checks that every parameter is finite and widths are positive.
    pub fn check_shape(&self) -> Result<()> {
        let (vals, widths): (Vec<f64>, Vec<f64>) = match *self {
            Self::Constant { level } => (vec![level], vec![]),
            Self::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => (vec![base, amplitude, center], vec![width]),
            Self::CosineBump {
                base,
                amplitude,
                center,
                halfwidth,
            } => (vec![base, amplitude, center], vec![halfwidth]),
            Self::TwoPeaks {
                base,
                amp1,
                center1,
                width1,
                amp2,
                center2,
                width2,
            } => (vec![base, amp1, center1, amp2, center2], vec![width1, width2]),
        };
        if vals.iter().chain(&widths).any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite parameter in {self:?}")));
        }
        if widths.iter().any(|&w| w <= 0.0) {
            return Err(Error::Invalid(format!("widths must be positive in {self:?}")));
        }
        Ok(())
    }

    /// Largest distance between the function and its base level on the two
    /// boundary nodes of `grid`.
    pub fn boundary_excess(&self, grid: &TraitGrid) -> f64 {
        let base = self.base_level();
        (self.eval(grid.x_lo()) - base)
            .abs()
            .max((self.eval(grid.x_hi()) - base).abs())
    }
}
