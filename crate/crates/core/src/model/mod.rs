//! Parameters, mesh, fields, state and initial data.

mod field;
mod grid;
mod initial;
mod params;

pub use field::{Field, State};
pub use grid::{AxisLayout, Grid};
pub use initial::{make_initial_condition, smooth_noise, InitialCondition, SMOOTHING_PASSES};
pub use params::{steady_state, validate_functional_spec, FunctionalSpec, Params};
#[cfg(test)]
pub(crate) use params::test_params;
