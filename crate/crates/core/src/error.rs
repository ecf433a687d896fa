use thiserror::Error;

use crate::phase_plane::LvCase;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("singular competition system: 1 - b*c = {det:e}")]
    Singular { det: f64 },

    #[error("parameters are not bistable (case {0:?}); a saddle is required")]
    NotBistable(LvCase),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}: r1 = {r1}, r2 = {r2}, first bad node {node}")]
    NonFinite { t: f64, r1: f64, r2: f64, node: usize },

    #[error("mass blow-up at t = {t}: (r1, r2) = ({r1}, {r2}) exceeds guard ({guard1}, {guard2})")]
    BlowUp {
        t: f64,
        r1: f64,
        r2: f64,
        guard1: f64,
        guard2: f64,
    },

    #[error("negative density {value:e} at node {node}, t = {t}")]
    Negative { t: f64, node: usize, value: f64 },

    #[error("separatrix is not monotone after sorting (eps = {eps:e}); retry with a smaller seed offset")]
    NotMonotone { eps: f64 },

    #[error("query Y = {y} outside separatrix range [{lo}, {hi}]")]
    Extrapolation { y: f64, lo: f64, hi: f64 },

    #[error("principal eigenvalue bracket failed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("inadmissible steady state: r1 = {r1}, r2 = {r2} (shifts s1 = {s1}, s2 = {s2})")]
    Inadmissible { r1: f64, r2: f64, s1: f64, s2: f64 },

    #[error("bistable parameters need a separatrix to resolve the outcome")]
    MissingSeparatrix,

    #[error("time series gap {gap} exceeds {max_gap} near t = {t}")]
    SeriesGap { t: f64, gap: f64, max_gap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
