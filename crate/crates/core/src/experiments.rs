//! Manufactured-solution convergence studies, parameter sweeps and the
//! empirical damping-threshold bisection.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{classify_boundedness, Classification, DiagRecord};
use crate::error::{Error, Result};
use crate::integrator::{run, Cadence, DiagSink, DiagSpec, Forcing, RunStatus, Scheme, SchemeConfig};
use crate::io::csv::CsvSink;
use crate::model::{make_initial_condition, steady_state, Field, Grid, InitialCondition, Params, State};
use crate::operators::VFloorPolicy;

/// Exact pair `u = 2 + a_u cos(ωt) cos(πx/L)`, `v = 2 + a_v cos(ωt) cos(πx/L)`
/// with `x` the first coordinate and `L` the box length along it.
#[derive(Clone, Debug, PartialEq)]
pub struct MmsSpec {
    pub amplitude_u: f64,
    pub amplitude_v: f64,
    pub omega: f64,
    /// Cells along each axis, coarsest first; each level doubles the previous.
    pub levels: Vec<usize>,
}

impl MmsSpec {
    pub fn validated(self) -> Result<Self> {
        for (name, a) in [("amplitude_u", self.amplitude_u), ("amplitude_v", self.amplitude_v)] {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::validation(format!("{name} must lie in [0,1) (got {a})")));
            }
        }
        if self.levels.len() < 3 {
            return Err(Error::validation("a convergence study needs at least 3 levels"));
        }
        Ok(self)
    }

    pub fn exact(&self, length: f64, x: f64, t: f64) -> (f64, f64) {
        let m = (self.omega * t).cos() * (PI * x / length).cos();
        (2.0 + self.amplitude_u * m, 2.0 + self.amplitude_v * m)
    }
}

/// Residuals of both equations at the exact pair, in closed form.
///
/// With `c = cos ωt`, `s = sin ωt`, `φ = cos κx`, `ψ = sin κx`, `κ = π/L`:
/// `u_t = −a_u ω s φ`, `u_x = −a_u c κ ψ`, `u_xx = −a_u c κ² φ` (same for `v`)
/// and `∂_x(u v^{-k} v_x) = v^{-k}(u_x v_x − k u v_x²/v + u v_xx)`.
pub fn mms_forcing(spec: &MmsSpec, params: &Params, x: f64, t: f64) -> (f64, f64) {
    let kappa = PI / params.lengths[0];
    let (s, c) = (spec.omega * t).sin_cos();
    let (psi, phi) = (kappa * x).sin_cos();
    let (au, av) = (spec.amplitude_u, spec.amplitude_v);

    let u = 2.0 + au * c * phi;
    let v = 2.0 + av * c * phi;
    let u_t = -au * spec.omega * s * phi;
    let v_t = -av * spec.omega * s * phi;
    let u_x = -au * c * kappa * psi;
    let v_x = -av * c * kappa * psi;
    let u_xx = -au * c * kappa * kappa * phi;
    let v_xx = -av * c * kappa * kappa * phi;

    let k = params.k;
    let flux_div = v.powf(-k) * (u_x * v_x - k * u * v_x * v_x / v + u * v_xx);
    let f_u = u_t - u_xx + params.chi * flux_div - params.r * u + params.mu * u * u;
    let f_v = v_t - v_xx + params.alpha * v - params.beta * u;
    (f_u, f_v)
}

/// [`mms_forcing`] evaluated at cell centers.
pub struct MmsForcing {
    spec: MmsSpec,
    params: Params,
    x: Vec<f64>,
}

impl MmsForcing {
    pub fn new(spec: &MmsSpec, params: &Params, grid: &Grid) -> Self {
        MmsForcing {
            spec: spec.clone(),
            params: params.clone(),
            x: grid.coordinates(0),
        }
    }
}

impl Forcing for MmsForcing {
    fn eval(&self, t: f64, _grid: &Grid, f_u: &mut [f64], f_v: &mut [f64]) {
        for (i, &x) in self.x.iter().enumerate() {
            let (a, b) = mms_forcing(&self.spec, &self.params, x, t);
            f_u[i] = a;
            f_v[i] = b;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsRunConfig {
    pub scheme: Scheme,
    pub t_end: f64,
    /// For IMEX, `dt = dt_factor · h²`; explicit runs use the diffusion limit,
    /// which already scales with `h²`.
    pub dt_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub h: f64,
    pub error_u: f64,
    pub error_v: f64,
    /// `log₂(e_{2h}/e_h)` against the previous level.
    pub order_u: Option<f64>,
    pub order_v: Option<f64>,
}

/// Discrete L² error of both fields against the exact pair at `state.t`.
pub fn mms_errors(spec: &MmsSpec, grid: &Grid, state: &State) -> (f64, f64) {
    let l = grid.lengths()[0];
    let x = grid.coordinates(0);
    let (mut eu, mut ev) = (0.0, 0.0);
    for i in 0..grid.len() {
        let (ue, ve) = spec.exact(l, x[i], state.t);
        eu += (state.u[i] - ue).powi(2);
        ev += (state.v[i] - ve).powi(2);
    }
    let vol = grid.cell_volume();
    ((eu * vol).sqrt(), (ev * vol).sqrt())
}

/// Runs the manufactured solution on every level and tabulates the errors.
///
/// `params.cells` is ignored except for its length (the dimension); the
/// model parameters are not range-checked so that `χ = 0` studies work.
pub fn run_convergence(spec: &MmsSpec, params: &Params, cfg: &MmsRunConfig) -> Result<Vec<ConvergenceRow>> {
    let spec = spec.clone().validated()?;
    let dim = params.dim();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in &spec.levels {
        let level = Params {
            cells: vec![n; dim],
            ..params.clone()
        };
        let grid = Grid::new(&level.cells, &level.lengths)?;
        let h = grid.spacing()[0];
        let l = level.lengths[0];
        let x = grid.coordinates(0);
        let initial = State {
            u: Field::from_vec(x.iter().map(|&xi| spec.exact(l, xi, 0.0).0).collect()),
            v: Field::from_vec(x.iter().map(|&xi| spec.exact(l, xi, 0.0).1).collect()),
            t: 0.0,
        };
        let dt_max = match cfg.scheme {
            Scheme::ExplicitEuler => cfg.t_end,
            Scheme::ImexDiffusion => cfg.dt_factor * h * h,
        };
        let scheme = SchemeConfig::new(cfg.scheme, cfg.t_end, dt_max).validated()?;
        let forcing = MmsForcing::new(&spec, &level, &grid);
        let diag = DiagSpec {
            functional: crate::model::FunctionalSpec { p: 4.0, q: 2.0, gradient_eligible: false },
            cadence: Cadence::EverySteps(usize::MAX),
        };
        let out = run(&initial, &level, &scheme, &VFloorPolicy::default(), &diag, &mut [], Some(&forcing))?;
        if out.status != RunStatus::Completed {
            return Err(Error::Inconclusive(format!(
                "manufactured run on {n} cells ended with {}",
                out.status
            )));
        }
        let (error_u, error_v) = mms_errors(&spec, &grid, &out.state);
        let (order_u, order_v) = match rows.last() {
            Some(prev) => (
                Some((prev.error_u / error_u).log2()),
                Some((prev.error_v / error_v).log2()),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow { cells: n, h, error_u, error_v, order_u, order_v });
    }
    Ok(rows)
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("cells,h,error_u,error_v,order_u,order_v\n");
    for r in rows {
        let o = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{:.6e},{:.6e},{:.6e},{},{}",
            r.cells,
            r.h,
            r.error_u,
            r.error_v,
            o(r.order_u),
            o(r.order_v)
        );
    }
    s
}

/// Everything needed to start one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSetup {
    pub params: Params,
    pub scheme: SchemeConfig,
    pub floor: VFloorPolicy,
    pub ic: InitialCondition,
    pub seed: u64,
    pub diag: DiagSpec,
}

/// Result of [`simulate`]: outcome plus the full record stream.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub status: RunStatus,
    pub final_state: State,
    pub abort_time: Option<f64>,
    pub steps: usize,
    pub initial: State,
    pub records: Vec<DiagRecord>,
}

/// Builds the initial condition and runs to completion, collecting records
/// and forwarding them to `extra` sinks.
pub fn simulate(setup: &RunSetup, extra: &mut [&mut dyn DiagSink]) -> Result<Simulation> {
    let grid = setup.params.grid();
    let initial = make_initial_condition(&setup.ic, &grid, setup.seed)?;
    let mut records: Vec<DiagRecord> = Vec::new();
    let outcome = {
        let mut sinks: Vec<&mut dyn DiagSink> = Vec::with_capacity(extra.len() + 1);
        sinks.push(&mut records);
        for s in extra.iter_mut() {
            sinks.push(&mut **s);
        }
        run(&initial, &setup.params, &setup.scheme, &setup.floor, &setup.diag, &mut sinks, None)?
    };
    Ok(Simulation {
        status: outcome.status,
        final_state: outcome.state,
        abort_time: outcome.abort_time,
        steps: outcome.steps,
        initial,
        records,
    })
}

/// Largest deviation of either field from the equilibrium over a run.
pub fn steady_deviation(setup: &RunSetup) -> Result<(RunStatus, f64)> {
    let (us, vs) = steady_state(&setup.params);
    struct MaxDev(f64, f64, f64);
    impl DiagSink for MaxDev {
        fn accept(&mut self, _r: &DiagRecord, s: &State) -> Result<()> {
            for (u, v) in s.u.iter().zip(s.v.iter()) {
                self.0 = self.0.max((u - self.1).abs()).max((v - self.2).abs());
            }
            Ok(())
        }
    }
    let mut dev = MaxDev(0.0, us, vs);
    let sim = simulate(setup, &mut [&mut dev])?;
    Ok((sim.status, dev.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: RunSetup,
    pub mu: Vec<f64>,
    pub chi: Vec<f64>,
    pub k: Vec<f64>,
    pub window_fraction: f64,
    pub growth_tol: f64,
}

impl SweepSpec {
    pub fn new(base: RunSetup, mu: Vec<f64>, chi: Vec<f64>, k: Vec<f64>) -> Self {
        SweepSpec {
            base,
            mu,
            chi,
            k,
            window_fraction: 0.2,
            growth_tol: 1.05,
        }
    }

    /// Cartesian product in `(μ, χ, k)` order, `k` varying fastest.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.mu.len() * self.chi.len() * self.k.len());
        for &mu in &self.mu {
            for &chi in &self.chi {
                for &k in &self.k {
                    out.push((mu, chi, k));
                }
            }
        }
        out
    }

    pub fn validated(self) -> Result<Self> {
        if self.mu.is_empty() || self.chi.is_empty() || self.k.is_empty() {
            return Err(Error::validation("sweep lists must be non-empty"));
        }
        for (mu, chi, k) in self.cells() {
            Params { mu, chi, k, ..self.base.params.clone() }.validated()?;
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub mu: f64,
    pub chi: f64,
    pub k: f64,
    /// `None` when the record stream was too short to classify.
    pub classification: Option<&'static str>,
    pub status: String,
    pub sup_linf_u: f64,
    pub sup_h_pq: f64,
    pub abort_time: Option<f64>,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,mu,chi,k,classification,status,sup_linf_u,sup_h_pq,abort_time,steps\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{},{}",
                r.index,
                r.mu,
                r.chi,
                r.k,
                r.classification.unwrap_or("inconclusive"),
                r.status,
                r.sup_linf_u,
                r.sup_h_pq,
                r.abort_time.map(|t| format!("{t:.16e}")).unwrap_or_default(),
                r.steps
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep rows serialize")
    }
}

fn classification_from_name(name: Option<&str>) -> Option<Classification> {
    match name {
        Some("bounded") => Some(Classification::Bounded),
        Some("growing") => Some(Classification::Growing),
        Some("aborted") => Some(Classification::Aborted),
        _ => None,
    }
}

impl SweepRow {
    pub fn class(&self) -> Option<Classification> {
        classification_from_name(self.classification)
    }
}

fn sweep_cell(spec: &SweepSpec, index: usize, (mu, chi, k): (f64, f64, f64), cell_dir: Option<&Path>) -> Result<SweepRow> {
    let params = Params { mu, chi, k, ..spec.base.params.clone() }.validated()?;
    let setup = RunSetup { params, ..spec.base.clone() };
    let mut csv = match cell_dir {
        Some(dir) => Some(CsvSink::create(dir.join(format!("cell_{index:04}.csv")))?),
        None => None,
    };
    let sim = {
        let mut extra: Vec<&mut dyn DiagSink> = Vec::new();
        if let Some(c) = csv.as_mut() {
            extra.push(c);
        }
        simulate(&setup, &mut extra)
    };
    if let Some(c) = csv {
        c.finish()?;
    }
    let row = |classification, status: String, records: &[DiagRecord], abort_time, steps| SweepRow {
        index,
        mu,
        chi,
        k,
        classification,
        status,
        sup_linf_u: records.iter().map(|r| r.linf_u).fold(f64::NAN, f64::max),
        sup_h_pq: records.iter().map(|r| r.h_pq).fold(f64::NAN, f64::max),
        abort_time,
        steps,
    };
    Ok(match sim {
        Ok(sim) => {
            let class = classify_boundedness(&sim.records, sim.status, spec.window_fraction, spec.growth_tol)
                .ok()
                .map(Classification::name);
            row(class, sim.status.to_string(), &sim.records, sim.abort_time, sim.steps)
        }
        // Solver breakdown and similar numerical faults count as aborted runs.
        Err(e @ (Error::SolverDiverged { .. } | Error::NonFinite(_) | Error::Validation(_))) => {
            row(Some("aborted"), format!("error: {e}"), &[], None, 0)
        }
        Err(e) => return Err(e),
    })
}

/// Runs every cell of the sweep in parallel; rows come back in cell order.
///
/// With `cell_dir`, each cell also streams its diagnostics to
/// `cell_NNNN.csv` in that directory.
pub fn run_sweep(spec: &SweepSpec, cell_dir: Option<&Path>) -> Result<SweepResult> {
    let spec = spec.clone().validated()?;
    let rows = spec
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, cell)| sweep_cell(&spec, i, cell, cell_dir))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ThresholdOutcome {
    /// Largest non-bounded and smallest bounded μ found.
    Interval { low: f64, high: f64 },
    /// Every μ in the sweep was bounded.
    NoLowerBracket,
    /// No μ in the sweep was bounded.
    NoUpperBracket,
    /// A bounded μ lies below a non-bounded one.
    NonMonotone,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub mu: f64,
    pub classification: Option<&'static str>,
    /// `true` for bisection midpoints, `false` for the initial sweep.
    pub bisection: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub outcome: ThresholdOutcome,
    pub iterations: usize,
    pub transcript: Vec<TranscriptEntry>,
}

impl ThresholdReport {
    pub fn width(&self) -> Option<f64> {
        match self.outcome {
            ThresholdOutcome::Interval { low, high } => Some(high - low),
            _ => None,
        }
    }
}

/// Bisection on the boundedness classification along μ.
///
/// The initial sweep over `spec.mu` must show non-bounded runs below bounded
/// ones; the resulting interval depends on horizon and mesh.
pub fn bisect_threshold(spec: &SweepSpec, max_iters: usize) -> Result<ThresholdReport> {
    if spec.chi.len() != 1 || spec.k.len() != 1 {
        return Err(Error::validation("threshold bisection varies mu only; give one chi and one k"));
    }
    let sweep = run_sweep(spec, None)?;
    let mut rows: Vec<&SweepRow> = sweep.rows.iter().collect();
    rows.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    let mut transcript: Vec<TranscriptEntry> = rows
        .iter()
        .map(|r| TranscriptEntry { mu: r.mu, classification: r.classification, bisection: false })
        .collect();
    let bounded = |c: Option<&'static str>| c == Some("bounded");

    let first_bounded = rows.iter().position(|r| bounded(r.classification));
    let report = |outcome, iterations, transcript| ThresholdReport { outcome, iterations, transcript };
    let Some(first_bounded) = first_bounded else {
        return Ok(report(ThresholdOutcome::NoUpperBracket, 0, transcript));
    };
    if rows[first_bounded..].iter().any(|r| !bounded(r.classification)) {
        return Ok(report(ThresholdOutcome::NonMonotone, 0, transcript));
    }
    if first_bounded == 0 {
        return Ok(report(ThresholdOutcome::NoLowerBracket, 0, transcript));
    }
    let (mut low, mut high) = (rows[first_bounded - 1].mu, rows[first_bounded].mu);
    let mut iterations = 0;
    while iterations < max_iters {
        let mid = 0.5 * (low + high);
        let one = SweepSpec { mu: vec![mid], ..spec.clone() };
        let row = &run_sweep(&one, None)?.rows[0];
        transcript.push(TranscriptEntry { mu: mid, classification: row.classification, bisection: true });
        if bounded(row.classification) {
            high = mid;
        } else {
            low = mid;
        }
        iterations += 1;
    }
    Ok(report(ThresholdOutcome::Interval { low, high }, iterations, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_params;
    use crate::model::{steady_state, validate_functional_spec};

    fn mms_params(chi: f64) -> Params {
        Params {
            chi,
            lengths: vec![1.0],
            cells: vec![8],
            ..test_params(1.0, 1.0, 2.0, 0.5, 1.0, 0.5, 1)
        }
    }

    fn spec(au: f64, av: f64) -> MmsSpec {
        MmsSpec { amplitude_u: au, amplitude_v: av, omega: 2.0, levels: vec![16, 32, 64] }
    }

    #[test]
    fn constant_exact_solution_forcing() {
        let p = Params { r: 1.3, mu: 0.7, alpha: 0.4, beta: 2.5, ..mms_params(1.0) };
        let (fu, fv) = mms_forcing(&spec(0.0, 0.0), &p, 0.3, 1.1);
        assert!((fu - (-2.0 * 1.3 + 4.0 * 0.7)).abs() < 1e-14);
        assert!((fv - (2.0 * 0.4 - 2.0 * 2.5)).abs() < 1e-14);
    }

    #[test]
    fn forcing_matches_computer_algebra() {
        // L = 1, ω = 2, a_u = 0.5, a_v = 0.3, χ = 1, k = 0.5, r = 1, μ = 2, α = 0.5, β = 1
        let s = MmsSpec { amplitude_u: 0.5, amplitude_v: 0.3, ..spec(0.0, 0.0) };
        let p = mms_params(1.0);
        let expected = [
            (0.1, 0.0, 9.926068193174297, 1.4830956929701045),
            (0.37, 0.25, 7.720264619722249, -0.20427107294860083),
            (0.9, 1.3, 9.865742103718539, 1.421899336142892),
        ];
        for (x, t, fu, fv) in expected {
            let (a, b) = mms_forcing(&s, &p, x, t);
            assert!((a - fu).abs() < 1e-12, "{a} vs {fu}");
            assert!((b - fv).abs() < 1e-12, "{b} vs {fv}");
        }
    }

    /// Residual of the PDE at the exact pair by central finite differences.
    fn fd_residual(s: &MmsSpec, p: &Params, x: f64, t: f64) -> (f64, f64) {
        let l = p.lengths[0];
        let e = |x: f64, t: f64| s.exact(l, x, t);
        let (hx, ht) = (1e-4, 1e-5);
        let (u, v) = e(x, t);
        let u_t = (e(x, t + ht).0 - e(x, t - ht).0) / (2.0 * ht);
        let v_t = (e(x, t + ht).1 - e(x, t - ht).1) / (2.0 * ht);
        let u_xx = (e(x + hx, t).0 - 2.0 * u + e(x - hx, t).0) / (hx * hx);
        let v_xx = (e(x + hx, t).1 - 2.0 * v + e(x - hx, t).1) / (hx * hx);
        let flux = |x: f64| {
            let (u, v) = e(x, t);
            let v_x = (e(x + hx, t).1 - e(x - hx, t).1) / (2.0 * hx);
            u * v.powf(-p.k) * v_x
        };
        let div = (flux(x + hx) - flux(x - hx)) / (2.0 * hx);
        (
            u_t - u_xx + p.chi * div - p.r * u + p.mu * u * u,
            v_t - v_xx + p.alpha * v - p.beta * u,
        )
    }

    #[test]
    fn forcing_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for (chi, av) in [(0.0, 0.0), (1.0, 0.4), (2.5, 0.8)] {
            let s = MmsSpec { amplitude_u: 0.6, amplitude_v: av, omega: 3.0, levels: vec![8, 16, 32] };
            let p = Params { lengths: vec![1.7], ..mms_params(chi) };
            for _ in 0..10 {
                let x = rng.gen_range(0.0..1.7);
                let t = rng.gen_range(0.0..2.0);
                let (fu, fv) = mms_forcing(&s, &p, x, t);
                let (ru, rv) = fd_residual(&s, &p, x, t);
                assert!((fu - ru).abs() < 1e-6 * (1.0 + fu.abs()), "chi {chi}: {fu} vs {ru}");
                assert!((fv - rv).abs() < 1e-6 * (1.0 + fv.abs()), "{fv} vs {rv}");
            }
        }
    }

    #[test]
    fn error_scales_with_amplitude() {
        // a_v = 0 keeps v ≡ 2, so the u error is driven by a_u alone.
        let p = mms_params(1e-12);
        let cfg = MmsRunConfig { scheme: Scheme::ExplicitEuler, t_end: 0.2, dt_factor: 0.0 };
        let full = run_convergence(&MmsSpec { amplitude_u: 0.4, ..spec(0.0, 0.0) }, &p, &cfg).unwrap();
        let half = run_convergence(&MmsSpec { amplitude_u: 0.2, ..spec(0.0, 0.0) }, &p, &cfg).unwrap();
        let ratio = full[2].error_u / half[2].error_u;
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn convergence_needs_three_levels() {
        let s = MmsSpec { levels: vec![8, 16], ..spec(0.5, 0.5) };
        let cfg = MmsRunConfig { scheme: Scheme::ExplicitEuler, t_end: 0.1, dt_factor: 0.0 };
        assert!(run_convergence(&s, &mms_params(1.0), &cfg).is_err());
    }

    fn steady_setup() -> RunSetup {
        let params = Params {
            lengths: vec![4.0, 4.0],
            cells: vec![8, 8],
            ..test_params(1.0, 1.0, 2.0, 0.5, 1.0, 0.5, 2)
        };
        let (u0, v0) = steady_state(&params);
        RunSetup {
            diag: DiagSpec {
                functional: validate_functional_spec(4.0, 2.0, &params).unwrap(),
                cadence: Cadence::EverySteps(1),
            },
            scheme: SchemeConfig::new(Scheme::ImexDiffusion, 1.0, 0.05),
            floor: VFloorPolicy::default(),
            ic: InitialCondition::Constant { u0, v0 },
            seed: 0,
            params,
        }
    }

    #[test]
    fn single_cell_steady_sweep_is_bounded() {
        let base = steady_setup();
        let spec = SweepSpec::new(base, vec![2.0], vec![1.0], vec![0.5]);
        let res = run_sweep(&spec, None).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.rows[0].class(), Some(Classification::Bounded));
    }

    #[test]
    fn sweep_row_count_and_order() {
        let base = steady_setup();
        let spec = SweepSpec::new(base, vec![1.0, 2.0], vec![0.5, 1.0, 2.0], vec![0.3, 0.6]);
        let res = run_sweep(&spec, None).unwrap();
        assert_eq!(res.rows.len(), 12);
        for (i, r) in res.rows.iter().enumerate() {
            assert_eq!(r.index, i);
        }
        assert_eq!((res.rows[7].mu, res.rows[7].chi, res.rows[7].k), (2.0, 0.5, 0.6));
        assert_eq!(res.to_csv().lines().count(), 13);
        let again = run_sweep(&spec, None).unwrap();
        assert_eq!(res, again);
        let json: serde_json::Value = serde_json::from_str(&res.to_json()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 12);
    }

    #[test]
    fn sweep_rejects_invalid_values() {
        let spec = SweepSpec::new(steady_setup(), vec![1.0, -1.0], vec![1.0], vec![0.5]);
        assert!(run_sweep(&spec, None).is_err());
    }

    #[test]
    fn all_bounded_has_no_lower_bracket() {
        let spec = SweepSpec::new(steady_setup(), vec![2.0, 4.0], vec![1.0], vec![0.5]);
        let rep = bisect_threshold(&spec, 4).unwrap();
        assert_eq!(rep.outcome, ThresholdOutcome::NoLowerBracket);
        assert_eq!(rep.transcript.len(), 2);
        assert_eq!(rep.iterations, 0);
    }

    /// With `r = α = β = 1` both fields relax to `1/μ`, so a blow-up cutoff
    /// of 0.4 aborts every μ < 2.5 and a signal floor aborts large μ.
    fn synthetic_base(hard_floor: f64) -> RunSetup {
        let mut base = steady_setup();
        base.params.alpha = 1.0;
        base.params.beta = 1.0;
        base.ic = InitialCondition::Constant { u0: 0.2, v0: 0.2 };
        base.scheme = SchemeConfig { blowup_threshold: 0.4, t_end: 20.0, dt_max: 0.2, ..base.scheme };
        base.floor = VFloorPolicy::new(hard_floor, hard_floor).unwrap();
        base
    }

    #[test]
    fn bisection_arithmetic_on_synthetic_threshold() {
        let spec = SweepSpec::new(synthetic_base(1e-12), vec![0.01, 10.0], vec![1.0], vec![0.5]);
        let rep = bisect_threshold(&spec, 6).unwrap();
        let ThresholdOutcome::Interval { low, high } = rep.outcome else {
            panic!("{:?}", rep.outcome)
        };
        assert!((high - low - (10.0 - 0.01) / 64.0).abs() < 1e-12);
        assert!(low <= 2.5 && 2.5 <= high, "[{low}, {high}]");
        assert_eq!(rep.iterations, 6);
        assert_eq!(rep.transcript.iter().filter(|e| e.bisection).count(), 6);
        let last_bounded = rep
            .transcript
            .iter()
            .filter(|e| e.classification == Some("bounded"))
            .map(|e| e.mu)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(last_bounded, high);
    }

    #[test]
    fn non_monotone_is_inconclusive() {
        let spec = SweepSpec::new(synthetic_base(0.05), vec![100.0, 1.0, 5.0], vec![1.0], vec![0.5]);
        let rep = bisect_threshold(&spec, 6).unwrap();
        assert_eq!(rep.outcome, ThresholdOutcome::NonMonotone);
        let classes: Vec<_> = rep.transcript.iter().map(|e| (e.mu, e.classification)).collect();
        assert_eq!(
            classes,
            vec![(1.0, Some("aborted")), (5.0, Some("bounded")), (100.0, Some("aborted"))]
        );
    }

    #[test]
    fn nothing_bounded_has_no_upper_bracket() {
        let spec = SweepSpec::new(synthetic_base(1e-12), vec![0.5, 1.0], vec![1.0], vec![0.5]);
        let rep = bisect_threshold(&spec, 6).unwrap();
        assert_eq!(rep.outcome, ThresholdOutcome::NoUpperBracket);
    }
}
