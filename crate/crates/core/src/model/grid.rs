use crate::error::{Error, Result};

/// Decomposition of the flat index space along one axis:
/// `idx = (outer * n + j) * stride + inner`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisLayout {
    pub outer: usize,
    pub n: usize,
    pub stride: usize,
}

impl AxisLayout {
    /// Calls `f(idx, j)` for every cell, where `j` is the index along the axis.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut(usize, usize)) {
        for o in 0..self.outer {
            let base = o * self.n * self.stride;
            for j in 0..self.n {
                let row = base + j * self.stride;
                for inner in 0..self.stride {
                    f(row + inner, j);
                }
            }
        }
    }
}

/// Uniform cell-centered Cartesian mesh on `[0, L_0] × … × [0, L_{d-1}]`.
///
/// Storage is row-major with axis 0 varying slowest. Cell `i` along axis `a`
/// has its center at `(i + 1/2) h_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    cells: Vec<usize>,
    lengths: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(cells: &[usize], lengths: &[f64]) -> Result<Self> {
        let dim = cells.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::validation(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if lengths.len() != dim {
            return Err(Error::validation(format!(
                "expected {dim} box lengths, got {}",
                lengths.len()
            )));
        }
        for (a, &n) in cells.iter().enumerate() {
            if n < Self::MIN_CELLS {
                return Err(Error::validation(format!(
                    "cells along axis {a} must be at least {} (got {n})",
                    Self::MIN_CELLS
                )));
            }
        }
        for (a, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::validation(format!(
                    "length along axis {a} must be positive (got {l})"
                )));
            }
        }
        let spacing = cells
            .iter()
            .zip(lengths)
            .map(|(&n, &l)| l / n as f64)
            .collect();
        let mut strides = vec![1; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * cells[a + 1];
        }
        Ok(Grid {
            cells: cells.to_vec(),
            lengths: lengths.to_vec(),
            spacing,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn h_min(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn axis(&self, a: usize) -> AxisLayout {
        let n = self.cells[a];
        let stride = self.strides[a];
        AxisLayout {
            outer: self.len() / (n * stride),
            n,
            stride,
        }
    }

    /// Multi-index of a flat cell index.
    pub fn index_of(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in 0..self.dim() {
            out[a] = idx / self.strides[a];
            idx %= self.strides[a];
        }
        out
    }

    /// Cell-center coordinates; unused axes are zero.
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let m = self.index_of(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = (m[a] as f64 + 0.5) * self.spacing[a];
        }
        x
    }

    /// Cell-center coordinate along one axis for every cell.
    pub fn coordinates(&self, a: usize) -> Vec<f64> {
        let h = self.spacing[a];
        let mut x = vec![0.0; self.len()];
        self.axis(a)
            .for_each(|idx, j| x[idx] = (j as f64 + 0.5) * h);
        x
    }

    /// Midpoint-rule quadrature: cell sum times cell volume.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume()
    }
}
