//! Discrete spatial operators with ghost-cell Neumann closure.
//!
//! Ghost cells mirror the adjacent interior value, so every wall face carries
//! zero flux and all operators below telescope to zero when summed.

use crate::error::{Error, Result};
use crate::model::{Field, Grid, Params};

/// Guard for the `v^{-k}` singularity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VFloorPolicy {
    /// Lower clamp applied to face values of `v` inside `v^{-k}` only.
    pub eps_v: f64,
    /// A run aborts once `min(v)` drops to this value.
    pub hard_floor: f64,
}

impl Default for VFloorPolicy {
    fn default() -> Self {
        VFloorPolicy {
            eps_v: 1e-10,
            hard_floor: 1e-12,
        }
    }
}

impl VFloorPolicy {
    pub fn new(eps_v: f64, hard_floor: f64) -> Result<Self> {
        if !(hard_floor > 0.0 && hard_floor <= eps_v && eps_v.is_finite()) {
            return Err(Error::validation(format!(
                "need 0 < hard_floor <= eps_v (got hard_floor = {hard_floor}, eps_v = {eps_v})"
            )));
        }
        Ok(VFloorPolicy { eps_v, hard_floor })
    }
}

/// Drift `χ v^{-k} ∂_a v` on faces, one array per axis.
///
/// Entry `idx` of axis `a` belongs to the face between cell `idx` and
/// `idx + stride_a`; entries of the last cell along the axis are wall faces
/// and stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceVelocity {
    pub axes: Vec<Vec<f64>>,
}

impl FaceVelocity {
    pub fn zeros(grid: &Grid) -> Self {
        FaceVelocity {
            axes: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Second-order Laplacian, written into `out`.
pub fn laplacian_into(w: &[f64], grid: &Grid, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for a in 0..grid.dim() {
        let ax = grid.axis(a);
        let inv_h2 = 1.0 / (grid.spacing()[a] * grid.spacing()[a]);
        ax.for_each(|i, j| {
            let c = w[i];
            let mut acc = 0.0;
            if j > 0 {
                acc += w[i - ax.stride] - c;
            }
            if j + 1 < ax.n {
                acc += w[i + ax.stride] - c;
            }
            out[i] += acc * inv_h2;
        });
    }
}

pub fn laplacian_neumann(w: &[f64], grid: &Grid) -> Field {
    let mut out = Field::zeros(grid);
    laplacian_into(w, grid, &mut out);
    out
}

/// Face drift `χ · max(v̄, eps_v)^{-k} · (v_{i+1} − v_i)/h` with `v̄` the
/// arithmetic mean of the two adjacent cells.
pub fn face_drift(
    v: &[f64],
    params: &Params,
    floor: &VFloorPolicy,
    grid: &Grid,
) -> Result<FaceVelocity> {
    let mut drift = FaceVelocity::zeros(grid);
    face_drift_into(v, params.chi, params.k, floor, grid, &mut drift)?;
    Ok(drift)
}

pub(crate) fn face_drift_into(
    v: &[f64],
    chi: f64,
    k: f64,
    floor: &VFloorPolicy,
    grid: &Grid,
    drift: &mut FaceVelocity,
) -> Result<()> {
    let min_v = v.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_v > floor.hard_floor) {
        return Err(Error::VFloorBreached {
            min_v,
            hard_floor: floor.hard_floor,
        });
    }
    for a in 0..grid.dim() {
        let ax = grid.axis(a);
        let inv_h = 1.0 / grid.spacing()[a];
        let out = &mut drift.axes[a];
        ax.for_each(|i, j| {
            out[i] = if j + 1 < ax.n {
                let (lo, hi) = (v[i], v[i + ax.stride]);
                let mean = (0.5 * (lo + hi)).max(floor.eps_v);
                chi * mean.powf(-k) * (hi - lo) * inv_h
            } else {
                0.0
            };
        });
    }
    Ok(())
}

/// Conservative divergence of the donor-cell flux `drift · u_upwind`.
///
/// Returns `∇·(u · drift)`; the caller applies the minus sign.
pub fn chemo_divergence(u: &[f64], drift: &FaceVelocity, grid: &Grid) -> Field {
    let mut out = Field::zeros(grid);
    chemo_divergence_into(u, drift, grid, &mut out);
    out
}

pub(crate) fn chemo_divergence_into(u: &[f64], drift: &FaceVelocity, grid: &Grid, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for a in 0..grid.dim() {
        let ax = grid.axis(a);
        let inv_h = 1.0 / grid.spacing()[a];
        let d = &drift.axes[a];
        ax.for_each(|i, j| {
            if j + 1 < ax.n {
                let nb = i + ax.stride;
                let s = d[i];
                let flux = if s >= 0.0 { s * u[i] } else { s * u[nb] } * inv_h;
                out[i] += flux;
                out[nb] -= flux;
            }
        });
    }
}

/// Outflow and inflow rates of the donor-cell flux per cell, both ≥ 0 and
/// `outflow − inflow = divergence`.
pub(crate) fn chemo_in_out_into(
    u: &[f64],
    drift: &FaceVelocity,
    grid: &Grid,
    inflow: &mut [f64],
    outflow: &mut [f64],
) {
    inflow.iter_mut().for_each(|x| *x = 0.0);
    outflow.iter_mut().for_each(|x| *x = 0.0);
    for a in 0..grid.dim() {
        let ax = grid.axis(a);
        let inv_h = 1.0 / grid.spacing()[a];
        let d = &drift.axes[a];
        ax.for_each(|i, j| {
            if j + 1 < ax.n {
                let nb = i + ax.stride;
                let s = d[i];
                if s >= 0.0 {
                    let f = s * u[i] * inv_h;
                    outflow[i] += f;
                    inflow[nb] += f;
                } else {
                    let f = -s * u[nb] * inv_h;
                    outflow[nb] += f;
                    inflow[i] += f;
                }
            }
        });
    }
}

/// Per-axis face gradients `(w_{i+1} − w_i)/h`, wall faces zero.
pub fn face_gradients(w: &[f64], grid: &Grid) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|a| {
            let ax = grid.axis(a);
            let inv_h = 1.0 / grid.spacing()[a];
            let mut g = vec![0.0; grid.len()];
            ax.for_each(|i, j| {
                if j + 1 < ax.n {
                    g[i] = (w[i + ax.stride] - w[i]) * inv_h;
                }
            });
            g
        })
        .collect()
}

/// Euclidean norm of the cell gradient, each component being the average
/// of the two faces bounding the cell along that axis.
pub fn cell_gradient_norm(w: &[f64], grid: &Grid) -> Vec<f64> {
    let faces = face_gradients(w, grid);
    let mut sq = vec![0.0; grid.len()];
    for (a, g) in faces.iter().enumerate() {
        let ax = grid.axis(a);
        ax.for_each(|i, j| {
            let lo = if j > 0 { g[i - ax.stride] } else { 0.0 };
            let c = 0.5 * (lo + g[i]);
            sq[i] += c * c;
        });
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// Largest face-gradient magnitude over all faces.
pub fn max_face_gradient(w: &[f64], grid: &Grid) -> f64 {
    face_gradients(w, grid)
        .iter()
        .flat_map(|g| g.iter())
        .fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelmholtzOptions {
    /// Relative sup-norm residual target.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for HelmholtzOptions {
    fn default() -> Self {
        HelmholtzOptions {
            tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn apply_helmholtz(x: &[f64], a: f64, grid: &Grid, out: &mut [f64]) {
    laplacian_into(x, grid, out);
    out.iter_mut().zip(x).for_each(|(o, xi)| *o = xi - a * *o);
}

/// Solves `(I − a Δ_h) w = rhs` by conjugate gradients.
///
/// The operator is symmetric positive definite for `a > 0`. Starting from
/// `w = rhs` keeps every residual orthogonal to constants, so the mean of `w`
/// equals the mean of `rhs` up to roundoff.
pub fn helmholtz_solve(rhs: &[f64], a: f64, grid: &Grid, opts: HelmholtzOptions) -> Result<Field> {
    assert!(a > 0.0, "helmholtz coefficient must be positive");
    let n = rhs.len();
    let scale = sup(rhs);
    let mut x = rhs.to_vec();
    if scale == 0.0 {
        return Ok(Field::from_vec(x));
    }
    let target = opts.tol * scale;
    let mut ap = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut iterations = 0;

    // Outer loop re-seeds from the true residual if the recursive one drifts.
    loop {
        apply_helmholtz(&x, a, grid, &mut ap);
        r.iter_mut()
            .zip(rhs.iter().zip(&ap))
            .for_each(|(ri, (b, axi))| *ri = b - axi);
        let true_res = sup(&r);
        if true_res <= target {
            return Ok(Field::from_vec(x));
        }
        if iterations >= opts.max_iters {
            return Err(Error::SolverDiverged {
                iterations,
                residual: true_res / scale,
            });
        }
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        while iterations < opts.max_iters {
            iterations += 1;
            apply_helmholtz(&p, a, grid, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if sup(&r) <= 0.5 * target {
                break;
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
    }
}
