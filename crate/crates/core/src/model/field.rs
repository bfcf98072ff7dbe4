use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::model::Grid;

/// Cell-centered scalar values in the grid's row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Field(vec![value; grid.len()])
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Evaluates `f` at every cell center.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        Field((0..grid.len()).map(|i| f(grid.center(i))).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Cell density `u`, signal `v` and the current time.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    /// Checks `u ≥ 0`, `v > 0` and finiteness.
    pub fn validate(&self) -> Result<()> {
        if !self.u.is_finite() {
            return Err(Error::NonFinite("u"));
        }
        if !self.v.is_finite() {
            return Err(Error::NonFinite("v"));
        }
        let umin = self.u.min();
        if umin < 0.0 {
            return Err(Error::validation(format!("u must be nonnegative (min {umin:e})")));
        }
        let vmin = self.v.min();
        if vmin <= 0.0 {
            return Err(Error::validation(format!("v must be positive (min {vmin:e})")));
        }
        Ok(())
    }
}
