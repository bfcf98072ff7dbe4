//! Per-step monitored quantities and offline checks on record streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrator::RunStatus;
use crate::model::{smooth_noise, FunctionalSpec, Grid, Params, State};
use crate::operators::{cell_gradient_norm, laplacian_neumann, max_face_gradient};

/// One time-stamped row of monitored quantities.
///
/// Field order is the CSV column order, see [`DiagRecord::FIELD_NAMES`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub linf_u: f64,
    pub linf_v: f64,
    pub min_v: f64,
    pub linf_grad_v: f64,
    /// `∫u^p + ∫u^p v^{-q}`
    pub y_pq: f64,
    /// `y_pq + ∫v^{p+1}`
    pub h_pq: f64,
    /// `∫u^p |∇v|^p v^{-kp}`, only when the exponent is large enough.
    pub sing_p: Option<f64>,
    /// Step size that produced this state (0 for the initial state).
    pub dt: f64,
    pub step: usize,
}

impl DiagRecord {
    pub const FIELD_NAMES: [&'static str; 12] = [
        "t",
        "mass_u",
        "mass_v",
        "linf_u",
        "linf_v",
        "min_v",
        "linf_grad_v",
        "y_pq",
        "h_pq",
        "sing_p",
        "dt",
        "step",
    ];
}

fn finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::DiagnosticOverflow(name))
    }
}

/// Evaluates all monitored quantities for `state` with midpoint quadrature.
///
/// `dt` and `step` are left at zero for the caller to fill in.
pub fn eval_record(
    state: &State,
    grid: &Grid,
    spec: &FunctionalSpec,
    params: &Params,
) -> Result<DiagRecord> {
    let (u, v) = (&state.u, &state.v);
    let min_v = v.min();
    if !(min_v > 0.0) {
        return Err(Error::validation(format!(
            "diagnostics need v > 0 (min {min_v:e})"
        )));
    }
    let (p, q) = (spec.p, spec.q);
    let mut up_sum = 0.0;
    let mut upvq_sum = 0.0;
    let mut vp1_sum = 0.0;
    for (&ui, &vi) in u.iter().zip(v.iter()) {
        let up = ui.powf(p);
        up_sum += up;
        upvq_sum += up * vi.powf(-q);
        vp1_sum += vi.powf(p + 1.0);
    }
    let vol = grid.cell_volume();
    let y_pq = finite("y_pq", (up_sum + upvq_sum) * vol)?;
    let h_pq = finite("h_pq", y_pq + vp1_sum * vol)?;

    let sing_p = if spec.gradient_eligible {
        let grad = cell_gradient_norm(v, grid);
        let kp = params.k * p;
        let s: f64 = u
            .iter()
            .zip(v.iter())
            .zip(&grad)
            .map(|((&ui, &vi), &g)| ui.powf(p) * g.powf(p) * vi.powf(-kp))
            .sum();
        Some(finite("sing_p", s * vol)?)
    } else {
        None
    };

    Ok(DiagRecord {
        t: state.t,
        mass_u: finite("mass_u", grid.integrate(u))?,
        mass_v: finite("mass_v", grid.integrate(v))?,
        linf_u: finite("linf_u", u.max_abs())?,
        linf_v: finite("linf_v", v.max_abs())?,
        min_v,
        linf_grad_v: finite("linf_grad_v", max_face_gradient(v, grid))?,
        y_pq,
        h_pq,
        sing_p,
        dt: 0.0,
        step: 0,
    })
}

/// Outcome of a one-sided bound check over a record stream.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub passed: bool,
    /// Smallest `allowed − observed` over all records (negative on failure).
    pub worst_margin: f64,
    /// Time of the first violating record.
    pub first_violation: Option<f64>,
}

fn bound_check<'a>(
    records: impl IntoIterator<Item = &'a DiagRecord>,
    mut margin: impl FnMut(&DiagRecord) -> f64,
) -> BoundCheck {
    let mut worst = f64::INFINITY;
    let mut first = None;
    for r in records {
        let m = margin(r);
        if m < worst {
            worst = m;
        }
        if !(m >= 0.0) && first.is_none() {
            first = Some(r.t);
        }
    }
    BoundCheck {
        passed: first.is_none(),
        worst_margin: worst,
        first_violation: first,
    }
}

/// `max{ r|Ω|/μ, ∫u₀ }`, the a-priori bound on `∫u`.
pub fn mass_bound(params: &Params, volume: f64, u0_mass: f64) -> f64 {
    (params.r * volume / params.mu).max(u0_mass)
}

/// Checks `∫u(t) ≤ c₁(1 + 1e-6 + 2·dt·r)` on every record, `dt` being the
/// record's step size.
pub fn check_mass_bound(
    records: &[DiagRecord],
    params: &Params,
    grid: &Grid,
    u0_mass: f64,
) -> BoundCheck {
    let c1 = mass_bound(params, grid.volume(), u0_mass);
    bound_check(records, |r| {
        let tol = 1e-6 + 2.0 * r.dt * params.r;
        c1 * (1.0 + tol) - r.mass_u
    })
}

/// Checks `min v(t) ≥ e^{−αt} · v0_min · (1 − tol)`.
pub fn check_v_floor(records: &[DiagRecord], params: &Params, v0_min: f64, tol: f64) -> BoundCheck {
    bound_check(records, |r| r.min_v - v_floor(params.alpha, r.t, v0_min) * (1.0 - tol))
}

/// Comparison-principle floor `e^{−αt} · v0_min`.
pub fn v_floor(alpha: f64, t: f64, v0_min: f64) -> f64 {
    (-alpha * t).exp() * v0_min
}

/// Checks the mass growth rate between consecutive records against the
/// logistic upper bound `d/dt ∫u ≤ r ∫u`, allowing the `O(Δt)` slack of a
/// first-order step: `(m₁ − m₀)/Δt ≤ r·m₀·(1 + rΔt)`.
pub fn check_mass_growth(records: &[DiagRecord], r: f64) -> BoundCheck {
    let pairs: Vec<(f64, f64, f64)> = records
        .windows(2)
        .filter(|w| w[1].t > w[0].t)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            let rate = (w[1].mass_u - w[0].mass_u) / dt;
            let allowed = r * w[0].mass_u * (1.0 + r * dt) + 1e-12;
            (w[1].t, rate, allowed)
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut first = None;
    for (t, rate, allowed) in pairs {
        let m = allowed - rate;
        worst = worst.min(m);
        if m < 0.0 && first.is_none() {
            first = Some(t);
        }
    }
    BoundCheck {
        passed: first.is_none(),
        worst_margin: worst,
        first_violation: first,
    }
}

/// Time of the record where `key` is largest (first one on ties).
pub fn argmax_time(records: &[DiagRecord], key: impl Fn(&DiagRecord) -> f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for r in records {
        let k = key(r);
        if best.map_or(true, |(b, _)| k > b) {
            best = Some((k, r.t));
        }
    }
    best.map(|(_, t)| t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Bounded,
    Growing,
    Aborted,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Bounded => "bounded",
            Classification::Growing => "growing",
            Classification::Aborted => "aborted",
        }
    }
}

/// Minimum number of records [`classify_boundedness`] accepts.
pub const MIN_CLASSIFY_RECORDS: usize = 10;

/// Compares `max linf_u` over the last `window_fraction` of the records
/// with the preceding window of equal length.
pub fn classify_boundedness(
    records: &[DiagRecord],
    status: RunStatus,
    window_fraction: f64,
    growth_tol: f64,
) -> Result<Classification> {
    if status != RunStatus::Completed {
        return Ok(Classification::Aborted);
    }
    let n = records.len();
    if n < MIN_CLASSIFY_RECORDS {
        return Err(Error::Inconclusive(format!(
            "{n} records, need at least {MIN_CLASSIFY_RECORDS}"
        )));
    }
    let w = ((window_fraction * n as f64).round() as usize).clamp(1, n / 2);
    let peak = |rs: &[DiagRecord]| rs.iter().map(|r| r.linf_u).fold(f64::NEG_INFINITY, f64::max);
    let last = peak(&records[n - w..]);
    let prev = peak(&records[n - 2 * w..n - w]);
    Ok(if last > growth_tol * prev {
        Classification::Growing
    } else {
        Classification::Bounded
    })
}

/// One evaluation of `∫|∇w|^{2p}/w^p` against `∫|Δw|^p` and `∫w^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityEntry {
    pub p: f64,
    pub lhs: f64,
    pub laplacian_p: f64,
    pub w_p: f64,
    /// `lhs / (laplacian_p + w_p)`
    pub ratio: f64,
}

pub fn lemma24_ratio(w: &[f64], p: f64, grid: &Grid) -> Result<InequalityEntry> {
    let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
    if !(wmin > 0.0) {
        return Err(Error::validation(format!(
            "inequality test needs w > 0 (min {wmin:e})"
        )));
    }
    let grad = cell_gradient_norm(w, grid);
    let lap = laplacian_neumann(w, grid);
    let (mut lhs, mut lp, mut wp) = (0.0, 0.0, 0.0);
    for i in 0..w.len() {
        lhs += grad[i].powf(2.0 * p) / w[i].powf(p);
        lp += lap[i].abs().powf(p);
        wp += w[i].powf(p);
    }
    let vol = grid.cell_volume();
    let (lhs, lp, wp) = (lhs * vol, lp * vol, wp * vol);
    Ok(InequalityEntry {
        p,
        lhs,
        laplacian_p: lp,
        w_p: wp,
        ratio: lhs / (lp + wp),
    })
}

/// Corpus statistics for one (dimension, resolution, exponent) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub dim: usize,
    pub cells: usize,
    pub p: f64,
    pub samples: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub entries: Vec<InequalityEntry>,
}

/// Positive random-smooth fields for the inequality corpus: smoothed noise
/// scaled to `[floor, floor + amplitude]` on the unit box.
pub fn lemma24_corpus_field(dim: usize, cells: usize, seed: u64, floor: f64, amplitude: f64) -> (Grid, Vec<f64>) {
    let grid = Grid::new(&vec![cells; dim], &vec![1.0; dim]).expect("corpus grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = smooth_noise(&grid, &mut rng)
        .into_iter()
        .map(|x| floor + amplitude * x)
        .collect();
    (grid, w)
}

/// Corpus floor and amplitude.
pub const CORPUS_FLOOR: f64 = 0.5;
pub const CORPUS_AMPLITUDE: f64 = 1.0;

/// Evaluates the ratio over `samples` corpus fields seeded `0..samples`.
pub fn lemma24_study(dim: usize, cells: usize, p: f64, samples: usize) -> Result<InequalityReport> {
    let entries = (0..samples as u64)
        .map(|seed| {
            let (grid, w) = lemma24_corpus_field(dim, cells, seed, CORPUS_FLOOR, CORPUS_AMPLITUDE);
            lemma24_ratio(&w, p, &grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = entries.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    let mean_ratio = entries.iter().map(|e| e.ratio).sum::<f64>() / entries.len().max(1) as f64;
    Ok(InequalityReport {
        dim,
        cells,
        p,
        samples,
        max_ratio,
        mean_ratio,
        entries,
    })
}
