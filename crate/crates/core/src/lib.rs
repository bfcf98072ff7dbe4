//! Finite-volume simulator for the parabolic-parabolic chemotaxis system
//!
//! ```text
//! u_t = Δu − χ ∇·(u v^{−k} ∇v) + r u − μ u²
//! v_t = Δv − α v + β u
//! ```
//!
//! on a rectangular box with homogeneous Neumann walls, instrumented with
//! monitors for the a-priori estimates that control boundedness (mass bound,
//! signal floor, the `y`/`h` energy functionals and the weighted gradient
//! functional) and with experiment drivers for manufactured-solution
//! convergence, parameter sweeps and empirical damping thresholds.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod integrator;
pub mod io;
pub mod model;
pub mod operators;

pub mod cli;

pub use error::{Error, Result};
pub use model::{
    make_initial_condition, steady_state, validate_functional_spec, Field, FunctionalSpec, Grid,
    InitialCondition, Params, State,
};
