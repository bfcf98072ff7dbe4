//! Canonical set-ups shared by the command line and the acceptance suite.

use crate::experiments::{MmsRunConfig, MmsSpec, RunSetup};
use crate::integrator::{Cadence, DiagSpec, Scheme, SchemeConfig};
use crate::model::{steady_state, FunctionalSpec, InitialCondition, Params};
use crate::operators::VFloorPolicy;

pub const STEADY_TOLERANCE: f64 = 1e-8;

/// Box edge used for the 2-D and 3-D demonstration runs.
pub const BOX_LENGTH: f64 = 10.0;

fn params(chi: f64, r: f64, mu: f64, alpha: f64, beta: f64, k: f64, length: f64, cells: &[usize]) -> Params {
    Params {
        chi,
        r,
        mu,
        alpha,
        beta,
        k,
        lengths: vec![length; cells.len()],
        cells: cells.to_vec(),
    }
}

fn functional() -> FunctionalSpec {
    FunctionalSpec { p: 4.0, q: 2.0, gradient_eligible: true }
}

/// Homogeneous equilibrium `(0.5, 1.0)` on a 2-D 64² box.
pub fn steady_setup(scheme: Scheme) -> RunSetup {
    let params = params(1.0, 1.0, 2.0, 0.5, 1.0, 0.5, BOX_LENGTH, &[64, 64]);
    let (u0, v0) = steady_state(&params);
    RunSetup {
        params,
        scheme: SchemeConfig::new(scheme, 10.0, 0.1),
        floor: VFloorPolicy::default(),
        ic: InitialCondition::Constant { u0, v0 },
        seed: 0,
        diag: DiagSpec { functional: functional(), cadence: Cadence::EverySteps(10) },
    }
}

/// Gaussian bump in the middle of the box with `χ = 1`, `k = 1/2`,
/// `r = α = β = 1`; `cells` gives the dimension.
pub fn bump_setup(mu: f64, cells: &[usize], t_end: f64) -> RunSetup {
    let params = params(1.0, 1.0, mu, 1.0, 1.0, 0.5, BOX_LENGTH, cells);
    let mut functional = functional();
    functional.gradient_eligible = crate::model::validate_functional_spec(4.0, 2.0, &params)
        .map(|f| f.gradient_eligible)
        .unwrap_or(false);
    RunSetup {
        params,
        scheme: SchemeConfig::new(Scheme::ImexDiffusion, t_end, 0.05),
        floor: VFloorPolicy::default(),
        ic: InitialCondition::GaussianBump {
            center: vec![0.5 * BOX_LENGTH; cells.len()],
            width: 1.0,
            amplitude_u: 5.0,
            amplitude_v: 1.0,
            floor_u: 0.1,
            floor_v: 0.1,
        },
        seed: 0,
        diag: DiagSpec { functional, cadence: Cadence::EveryTime(0.1) },
    }
}

pub fn mms_spec() -> MmsSpec {
    MmsSpec { amplitude_u: 0.1, amplitude_v: 0.3, omega: 2.0, levels: vec![64, 128, 256] }
}

pub fn mms_run_config() -> MmsRunConfig {
    MmsRunConfig { scheme: Scheme::ExplicitEuler, t_end: 0.1, dt_factor: 0.5 }
}

/// Pure reaction-diffusion (`χ = 0`) on the unit interval.
pub fn mms_diffusion_params() -> Params {
    params(0.0, 1.0, 1.0, 1.0, 1.0, 0.5, 1.0, &[64])
}

/// Chemotaxis coupling (`χ = 1`, `k = 1/2`) on the unit interval.
///
/// The upwind transport makes the `u` error first order; the secretion term
/// feeds it into `v` at `O(βh)`, which would mask the second-order `v`
/// discretization on practical grids. A weak secretion rate keeps that
/// leakage below the intrinsic `v` error over the three levels.
pub fn mms_chemotaxis_params() -> Params {
    params(1.0, 1.0, 1.0, 1.0, 0.01, 0.5, 1.0, &[64])
}
