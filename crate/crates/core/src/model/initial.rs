use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::snapshot::read_snapshot;
use crate::model::{Field, Grid, State};

/// Number of discrete-Laplacian smoothing passes applied to white noise.
pub const SMOOTHING_PASSES: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Constant {
        u0: f64,
        v0: f64,
    },
    /// `floor + amplitude·exp(−|x − center|² / (2 width²))` for each field.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude_u: f64,
        amplitude_v: f64,
        floor_u: f64,
        floor_v: f64,
    },
    /// Smoothed white noise rescaled to `[floor, floor + amplitude]`.
    RandomSmooth {
        amplitude_u: f64,
        amplitude_v: f64,
        floor_u: f64,
        floor_v: f64,
    },
    FromSnapshot(PathBuf),
}

impl InitialCondition {
    pub fn kind(&self) -> &'static str {
        match self {
            InitialCondition::Constant { .. } => "constant",
            InitialCondition::GaussianBump { .. } => "gaussian-bump",
            InitialCondition::RandomSmooth { .. } => "random-smooth",
            InitialCondition::FromSnapshot(_) => "from-snapshot",
        }
    }
}

/// White noise in `[0, 1)` smoothed by [`SMOOTHING_PASSES`] passes of
/// `w ← w + Δ_1 w / (4d)` (grid-unit Laplacian, mirrored walls), then
/// rescaled to span `[0, 1]`.
pub fn smooth_noise(grid: &Grid, rng: &mut impl Rng) -> Vec<f64> {
    let n = grid.len();
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut lap = vec![0.0; n];
    let weight = 1.0 / (4.0 * grid.dim() as f64);
    for _ in 0..SMOOTHING_PASSES {
        lap.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..grid.dim() {
            let ax = grid.axis(a);
            ax.for_each(|i, j| {
                let c = w[i];
                let lo = if j > 0 { w[i - ax.stride] } else { c };
                let hi = if j + 1 < ax.n { w[i + ax.stride] } else { c };
                lap[i] += lo - 2.0 * c + hi;
            });
        }
        w.iter_mut().zip(&lap).for_each(|(x, l)| *x += weight * l);
    }
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span > 0.0 {
        w.iter_mut().for_each(|x| *x = (*x - lo) / span);
    } else {
        w.iter_mut().for_each(|x| *x = 0.0);
    }
    w
}

fn check_levels(floor_u: f64, amplitude_u: f64, floor_v: f64, amplitude_v: f64) -> Result<()> {
    if !(floor_u >= 0.0 && amplitude_u >= 0.0) {
        return Err(Error::validation("u floor and amplitude must be nonnegative"));
    }
    if floor_u + amplitude_u <= 0.0 {
        return Err(Error::validation("initial u must have positive mass"));
    }
    if !(floor_v > 0.0) {
        return Err(Error::validation(format!(
            "v floor must be positive (got {floor_v})"
        )));
    }
    if !(amplitude_v >= 0.0) {
        return Err(Error::validation("v amplitude must be nonnegative"));
    }
    Ok(())
}

/// Builds the initial state at `t = 0` (or the snapshot time).
///
/// The result has `u ≥ 0`, `∫u > 0` and `v > 0`; `seed` only matters for
/// random data and the same seed reproduces bit-identical fields.
pub fn make_initial_condition(
    kind: &InitialCondition,
    grid: &Grid,
    seed: u64,
) -> Result<State> {
    let state = match kind {
        InitialCondition::Constant { u0, v0 } => {
            check_levels(*u0, 0.0, *v0, 0.0)?;
            State {
                u: Field::constant(grid, *u0),
                v: Field::constant(grid, *v0),
                t: 0.0,
            }
        }
        InitialCondition::GaussianBump {
            center,
            width,
            amplitude_u,
            amplitude_v,
            floor_u,
            floor_v,
        } => {
            check_levels(*floor_u, *amplitude_u, *floor_v, *amplitude_v)?;
            if center.len() != grid.dim() {
                return Err(Error::validation(format!(
                    "bump center needs {} coordinates (got {})",
                    grid.dim(),
                    center.len()
                )));
            }
            if !(*width > 0.0) {
                return Err(Error::validation("bump width must be positive"));
            }
            let profile = Field::from_fn(grid, |x| {
                let r2: f64 = center
                    .iter()
                    .enumerate()
                    .map(|(a, c)| (x[a] - c).powi(2))
                    .sum();
                (-r2 / (2.0 * width * width)).exp()
            });
            let u = profile.iter().map(|g| floor_u + amplitude_u * g).collect();
            let v = profile.iter().map(|g| floor_v + amplitude_v * g).collect();
            State {
                u: Field::from_vec(u),
                v: Field::from_vec(v),
                t: 0.0,
            }
        }
        InitialCondition::RandomSmooth {
            amplitude_u,
            amplitude_v,
            floor_u,
            floor_v,
        } => {
            check_levels(*floor_u, *amplitude_u, *floor_v, *amplitude_v)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nu = smooth_noise(grid, &mut rng);
            let nv = smooth_noise(grid, &mut rng);
            State {
                u: Field::from_vec(nu.iter().map(|w| floor_u + amplitude_u * w).collect()),
                v: Field::from_vec(nv.iter().map(|w| floor_v + amplitude_v * w).collect()),
                t: 0.0,
            }
        }
        InitialCondition::FromSnapshot(path) => {
            let (state, snap_grid) = read_snapshot(path)?;
            if snap_grid.cells() != grid.cells() || snap_grid.lengths() != grid.lengths() {
                return Err(Error::format(
                    path,
                    format!(
                        "snapshot grid {:?}/{:?} does not match configured grid {:?}/{:?}",
                        snap_grid.cells(),
                        snap_grid.lengths(),
                        grid.cells(),
                        grid.lengths()
                    ),
                ));
            }
            state
        }
    };
    state.validate()?;
    if grid.integrate(&state.u) <= 0.0 {
        return Err(Error::validation("initial u must have positive mass"));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid2() -> Grid {
        Grid::new(&[16, 12], &[2.0, 1.5]).unwrap()
    }

    #[test]
    fn constant_fields() {
        let s = make_initial_condition(
            &InitialCondition::Constant { u0: 0.5, v0: 1.0 },
            &grid2(),
            0,
        )
        .unwrap();
        assert!(s.u.iter().all(|&x| x == 0.5));
        assert!(s.v.iter().all(|&x| x == 1.0));
        assert_eq!(s.t, 0.0);
    }

    #[test]
    fn bump_respects_floor() {
        let ic = InitialCondition::GaussianBump {
            center: vec![1.0, 0.75],
            width: 0.2,
            amplitude_u: 3.0,
            amplitude_v: 2.0,
            floor_u: 0.0,
            floor_v: 0.1,
        };
        let s = make_initial_condition(&ic, &grid2(), 0).unwrap();
        assert!(s.v.min() >= 0.1);
        assert!(s.u.min() >= 0.0);
        assert!(s.u.max() > 2.0);
    }

    #[test]
    fn random_smooth_is_deterministic() {
        let ic = InitialCondition::RandomSmooth {
            amplitude_u: 1.0,
            amplitude_v: 1.0,
            floor_u: 0.1,
            floor_v: 0.2,
        };
        let a = make_initial_condition(&ic, &grid2(), 7).unwrap();
        let b = make_initial_condition(&ic, &grid2(), 7).unwrap();
        assert_eq!(a, b);
        let c = make_initial_condition(&ic, &grid2(), 8).unwrap();
        assert_ne!(a.u, c.u);
    }

    #[test]
    fn rejects_nonpositive_signal() {
        let ic = InitialCondition::Constant { u0: 1.0, v0: 0.0 };
        assert!(make_initial_condition(&ic, &grid2(), 0).is_err());
        let ic = InitialCondition::Constant { u0: 0.0, v0: 1.0 };
        assert!(make_initial_condition(&ic, &grid2(), 0).is_err());
    }

    #[test]
    fn missing_snapshot_is_an_error() {
        let ic = InitialCondition::FromSnapshot("/nonexistent/snap.bin".into());
        assert!(make_initial_condition(&ic, &grid2(), 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_states_are_valid(seed in any::<u64>(), floor_u in 0.0..1.0f64, floor_v in 1e-3..1.0f64) {
            let ic = InitialCondition::RandomSmooth {
                amplitude_u: 2.0, amplitude_v: 1.0, floor_u, floor_v,
            };
            let g = Grid::new(&[10, 6], &[1.0, 1.0]).unwrap();
            let s = make_initial_condition(&ic, &g, seed).unwrap();
            prop_assert!(s.validate().is_ok());
            prop_assert!(g.integrate(&s.u) > 0.0);
            prop_assert!(s.v.min() >= floor_v);
        }
    }
}
