//! Time stepping: explicit Euler or IMEX (implicit diffusion), adaptive step
//! size, blow-up and signal-floor detection.
//!
//! Both schemes treat the signal decay `−αv` with a Patankar weight
//! `v^{n+1}/v^n`, i.e. `v ← (v + dt·(…))/(1 + α dt)`. Since
//! `1/(1 + α dt) ≥ e^{−α dt}`, the discrete minimum of `v` never falls below
//! `e^{−αt} min v₀`, matching the comparison principle for the continuous
//! equation.

use std::fmt;

use crate::diagnostics::{eval_record, DiagRecord};
use crate::error::{Error, Result};
use crate::model::{Field, FunctionalSpec, Grid, Params, State};
use crate::operators::{
    chemo_in_out_into, face_drift_into, helmholtz_solve, laplacian_into, max_face_gradient,
    FaceVelocity, HelmholtzOptions, VFloorPolicy,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ExplicitEuler,
    ImexDiffusion,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "explicit-euler",
            Scheme::ImexDiffusion => "imex-diffusion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "explicit-euler" => Some(Scheme::ExplicitEuler),
            "imex-diffusion" => Some(Scheme::ImexDiffusion),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub cfl_diffusion: f64,
    pub cfl_advection: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub t_end: f64,
    /// Cutoff for `‖u‖∞` and for `‖v‖∞ + ‖∇v‖∞`.
    pub blowup_threshold: f64,
    pub helmholtz: HelmholtzOptions,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, t_end: f64, dt_max: f64) -> Self {
        SchemeConfig {
            scheme,
            cfl_diffusion: 0.9,
            cfl_advection: 0.5,
            dt_max,
            dt_min: 1e-12,
            t_end,
            blowup_threshold: 1e6,
            helmholtz: HelmholtzOptions::default(),
        }
    }

    pub fn validated(self) -> Result<Self> {
        let unit = |name: &str, x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} must lie in (0,1] (got {x})")))
            }
        };
        unit("cfl_diffusion", self.cfl_diffusion)?;
        unit("cfl_advection", self.cfl_advection)?;
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return Err(Error::validation(format!(
                "need 0 < dt_min <= dt_max (got dt_min = {}, dt_max = {})",
                self.dt_min, self.dt_max
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::validation(format!("t_end must be positive (got {})", self.t_end)));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::validation(format!(
                "blowup_threshold must be positive (got {})",
                self.blowup_threshold
            )));
        }
        if !(self.helmholtz.tol > 0.0) {
            return Err(Error::validation("helmholtz tolerance must be positive"));
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    BlowupDetected,
    VFloorBreached,
    DtUnderflow,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowupDetected => "blowup-detected",
            RunStatus::VFloorBreached => "v-floor-breached",
            RunStatus::DtUnderflow => "dt-underflow",
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub state: State,
    /// Time of the abort, `None` when completed.
    pub abort_time: Option<f64>,
    pub steps: usize,
}

/// Source terms added to both equations; used by manufactured solutions.
pub trait Forcing: Sync {
    fn eval(&self, t: f64, grid: &Grid, f_u: &mut [f64], f_v: &mut [f64]);
}

/// When diagnostic records are emitted. The initial and final states are
/// always recorded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cadence {
    EverySteps(usize),
    EveryTime(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagSpec {
    pub functional: FunctionalSpec,
    pub cadence: Cadence,
}

/// Receives diagnostic records from a single run.
pub trait DiagSink {
    fn accept(&mut self, record: &DiagRecord, state: &State) -> Result<()>;
}

impl DiagSink for Vec<DiagRecord> {
    fn accept(&mut self, record: &DiagRecord, _state: &State) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Largest admissible step; see the module docs for the limits involved.
pub fn stable_dt(
    state: &State,
    drift: &FaceVelocity,
    grid: &Grid,
    cfg: &SchemeConfig,
    params: &Params,
) -> Result<f64> {
    let d = grid.dim() as f64;
    let h = grid.h_min();
    let mut dt = cfg.dt_max;
    if cfg.scheme == Scheme::ExplicitEuler {
        dt = dt.min(cfg.cfl_diffusion * h * h / (2.0 * d));
    }
    let dmax = drift.max_abs();
    if dmax > 0.0 {
        dt = dt.min(cfg.cfl_advection * h / (2.0 * d * dmax));
    }
    let rate = params.r + params.mu * state.u.max() + params.alpha + params.beta;
    if rate > 0.0 {
        dt = dt.min(0.5 / rate);
    }
    if !(dt >= cfg.dt_min) {
        return Err(Error::DtUnderflow {
            dt,
            dt_min: cfg.dt_min,
        });
    }
    Ok(dt)
}

/// Reusable buffers for stepping on a fixed grid.
pub struct Stepper {
    grid: Grid,
    params: Params,
    cfg: SchemeConfig,
    floor: VFloorPolicy,
    drift: FaceVelocity,
    /// Diffusive outflow coefficient per cell, `Σ_a (#neighbors along a)/h_a²`.
    diag: Vec<f64>,
    lap_u: Vec<f64>,
    lap_v: Vec<f64>,
    inflow: Vec<f64>,
    outflow: Vec<f64>,
    f_u: Vec<f64>,
    f_v: Vec<f64>,
    patankar_cells: usize,
}

impl Stepper {
    pub fn new(params: &Params, cfg: &SchemeConfig, floor: &VFloorPolicy) -> Self {
        let grid = params.grid();
        let n = grid.len();
        let mut diag = vec![0.0; n];
        for a in 0..grid.dim() {
            let ax = grid.axis(a);
            let inv_h2 = 1.0 / (grid.spacing()[a] * grid.spacing()[a]);
            ax.for_each(|i, j| {
                let nb = (j > 0) as usize + (j + 1 < ax.n) as usize;
                diag[i] += nb as f64 * inv_h2;
            });
        }
        Stepper {
            drift: FaceVelocity::zeros(&grid),
            grid,
            params: params.clone(),
            cfg: *cfg,
            floor: *floor,
            diag,
            lap_u: vec![0.0; n],
            lap_v: vec![0.0; n],
            inflow: vec![0.0; n],
            outflow: vec![0.0; n],
            f_u: vec![0.0; n],
            f_v: vec![0.0; n],
            patankar_cells: 0,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn drift(&self) -> &FaceVelocity {
        &self.drift
    }

    /// Cells so far where the sign-safe density update replaced explicit Euler.
    pub fn patankar_cells(&self) -> usize {
        self.patankar_cells
    }

    /// Recomputes the face drift from the current signal.
    pub fn update_drift(&mut self, state: &State) -> Result<()> {
        face_drift_into(
            &state.v,
            self.params.chi,
            self.params.k,
            &self.floor,
            &self.grid,
            &mut self.drift,
        )
    }

    pub fn stable_dt(&self, state: &State) -> Result<f64> {
        stable_dt(state, &self.drift, &self.grid, &self.cfg, &self.params)
    }

    /// Advances `state` by `dt` using the drift from the last
    /// [`Stepper::update_drift`].
    pub fn advance(&mut self, state: &mut State, dt: f64, forcing: Option<&dyn Forcing>) -> Result<()> {
        let Params { r, mu, alpha, beta, .. } = self.params;
        let implicit = self.cfg.scheme == Scheme::ImexDiffusion;
        let n = self.grid.len();

        match forcing {
            Some(f) => f.eval(state.t, &self.grid, &mut self.f_u, &mut self.f_v),
            None => {
                self.f_u.iter_mut().for_each(|x| *x = 0.0);
                self.f_v.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        chemo_in_out_into(&state.u, &self.drift, &self.grid, &mut self.inflow, &mut self.outflow);
        if implicit {
            self.lap_u.iter_mut().for_each(|x| *x = 0.0);
            self.lap_v.iter_mut().for_each(|x| *x = 0.0);
        } else {
            laplacian_into(&state.u, &self.grid, &mut self.lap_u);
            laplacian_into(&state.v, &self.grid, &mut self.lap_v);
        }

        // v first: it needs the old u.
        let decay = 1.0 / (1.0 + alpha * dt);
        for i in 0..n {
            let v = state.v[i];
            state.v[i] = (v + dt * (self.lap_v[i] + beta * state.u[i] + self.f_v[i])) * decay;
        }

        for i in 0..n {
            let u = state.u[i];
            let (inn, out, fu) = (self.inflow[i], self.outflow[i], self.f_u[i]);
            let explicit = u + dt * (self.lap_u[i] - (out - inn) + r * u - mu * u * u + fu);
            state.u[i] = if explicit >= 0.0 {
                explicit
            } else {
                // Modified Patankar-Euler: destruction terms weighted by u^{n+1}/u^n.
                self.patankar_cells += 1;
                let diff_out = if implicit { 0.0 } else { self.diag[i] * u };
                let production = (self.lap_u[i] + diff_out) + inn + r * u + fu.max(0.0);
                let destruction = diff_out + out + mu * u * u + (-fu).max(0.0);
                let num = u + dt * production;
                let den = u + dt * destruction;
                if den > 0.0 {
                    num * u / den
                } else {
                    num
                }
            };
        }

        if implicit {
            let opts = self.cfg.helmholtz;
            let u_new = helmholtz_solve(&state.u, dt, &self.grid, opts)?;
            let v_new = helmholtz_solve(&state.v, dt, &self.grid, opts)?;
            // The exact inverse is entrywise positive; CG leaves residual-sized noise.
            let slack = 10.0 * opts.tol * state.u.max_abs();
            let mut u_new = u_new.into_vec();
            for x in u_new.iter_mut() {
                if *x < 0.0 {
                    if *x < -slack {
                        return Err(Error::validation(format!(
                            "implicit diffusion produced negative density {x:e}"
                        )));
                    }
                    *x = 0.0;
                }
            }
            state.u = Field::from_vec(u_new);
            state.v = v_new;
        }
        state.t += dt;
        Ok(())
    }
}

/// One step of size `dt`; returns the new state.
pub fn step(
    state: &State,
    dt: f64,
    params: &Params,
    cfg: &SchemeConfig,
    floor: &VFloorPolicy,
    forcing: Option<&dyn Forcing>,
) -> Result<State> {
    let mut stepper = Stepper::new(params, cfg, floor);
    stepper.update_drift(state)?;
    let mut next = state.clone();
    stepper.advance(&mut next, dt, forcing)?;
    if !next.u.is_finite() || !next.v.is_finite() {
        return Err(Error::NonFinite(if next.u.is_finite() { "v" } else { "u" }));
    }
    Ok(next)
}

fn blown_up(state: &State, grid: &Grid, threshold: f64) -> bool {
    if !state.u.is_finite() || !state.v.is_finite() {
        return true;
    }
    state.u.max() > threshold || state.v.max_abs() + max_face_gradient(&state.v, grid) > threshold
}

/// Steps from `initial` to `cfg.t_end` or until a detector fires.
///
/// Abort conditions end up in [`RunOutcome::status`]; `Err` is reserved for
/// sink failures and linear-solver breakdown.
pub fn run(
    initial: &State,
    params: &Params,
    cfg: &SchemeConfig,
    floor: &VFloorPolicy,
    diag: &DiagSpec,
    sinks: &mut [&mut dyn DiagSink],
    forcing: Option<&dyn Forcing>,
) -> Result<RunOutcome> {
    let mut stepper = Stepper::new(params, cfg, floor);
    let grid = stepper.grid().clone();
    let mut state = initial.clone();
    let mut steps = 0usize;
    let mut last_dt = 0.0;
    let mut next_diag_time = initial.t;

    let emit = |state: &State, step: usize, dt: f64, sinks: &mut [&mut dyn DiagSink]| -> Result<bool> {
        match eval_record(state, &grid, &diag.functional, params) {
            Ok(mut rec) => {
                rec.dt = dt;
                rec.step = step;
                for s in sinks.iter_mut() {
                    s.accept(&rec, state)?;
                }
                Ok(true)
            }
            Err(Error::DiagnosticOverflow(_)) | Err(Error::NonFinite(_)) => Ok(false),
            Err(e) => Err(e),
        }
    };

    let abort = |status, state: State, steps| RunOutcome {
        abort_time: Some(state.t),
        status,
        state,
        steps,
    };

    loop {
        if blown_up(&state, &grid, cfg.blowup_threshold) {
            emit(&state, steps, last_dt, sinks)?;
            return Ok(abort(RunStatus::BlowupDetected, state, steps));
        }
        let due = match diag.cadence {
            Cadence::EverySteps(every) => steps % every.max(1) == 0,
            Cadence::EveryTime(_) => state.t >= next_diag_time,
        };
        let done = state.t >= cfg.t_end;
        if due || done {
            if !emit(&state, steps, last_dt, sinks)? {
                return Ok(abort(RunStatus::BlowupDetected, state, steps));
            }
            if let Cadence::EveryTime(every) = diag.cadence {
                while next_diag_time <= state.t {
                    next_diag_time += every;
                }
            }
        }
        if done {
            return Ok(RunOutcome {
                status: RunStatus::Completed,
                state,
                abort_time: None,
                steps,
            });
        }

        if let Err(e) = stepper.update_drift(&state) {
            return match e {
                Error::VFloorBreached { .. } => {
                    emit(&state, steps, last_dt, sinks)?;
                    Ok(abort(RunStatus::VFloorBreached, state, steps))
                }
                other => Err(other),
            };
        }
        let dt = match stepper.stable_dt(&state) {
            Ok(dt) => dt,
            Err(Error::DtUnderflow { .. }) => {
                emit(&state, steps, last_dt, sinks)?;
                return Ok(abort(RunStatus::DtUnderflow, state, steps));
            }
            Err(e) => return Err(e),
        };
        let remaining = cfg.t_end - state.t;
        let last = dt >= remaining;
        let dt = if last { remaining } else { dt };
        stepper.advance(&mut state, dt, forcing)?;
        if last {
            state.t = cfg.t_end;
        }
        steps += 1;
        last_dt = dt;
    }
}
