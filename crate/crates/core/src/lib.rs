//! Numerical tools for two-species phenotype-structured competition.
//!
//! * [`phase_plane`]: the classical Lotka–Volterra competition ODE, its
//!   equilibria, saddle separatrix and basins.
//! * [`ode_sim`]: the mutation-free integro-differential model, stepped with
//!   exponential updates and checked against its Lyapunov diagnostics.
//! * [`pde_sim`]: the nonlocal reaction–diffusion model, its steady states
//!   via principal-eigenvalue shifts, and an IMEX solver.

pub mod eigen;
pub mod error;
pub mod grid;
pub mod imex;
pub mod model;
pub mod ode_sim;
pub mod pde_sim;
pub mod phase_plane;
pub mod resource;
pub mod rk;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::TraitGrid;
pub use model::{ConcentrationMetrics, ModelParams, PopulationState};
pub use resource::ResourceFunction;
