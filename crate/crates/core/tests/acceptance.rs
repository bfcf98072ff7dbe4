//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any fails.
//!
//! `cargo test -p chemotaxis --test acceptance`; extra arguments select
//! criteria by number, e.g. `-- 6 7`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use chemotaxis::diagnostics::{
    argmax_time, check_mass_bound, check_v_floor, classify_boundedness, lemma24_corpus_field,
    lemma24_ratio, lemma24_study, Classification, DiagRecord, CORPUS_AMPLITUDE, CORPUS_FLOOR,
};
use chemotaxis::experiments::{
    bisect_threshold, run_convergence, simulate, steady_deviation, RunSetup, SweepSpec,
    ThresholdOutcome,
};
use chemotaxis::fixtures;
use chemotaxis::integrator::{Cadence, DiagSink, DiagSpec, RunStatus, Scheme, SchemeConfig};
use chemotaxis::io::csv::CsvSink;
use chemotaxis::operators::VFloorPolicy;
use chemotaxis::{validate_functional_spec, InitialCondition, Params, Result, State};

const WINDOW: f64 = 0.2;
const GROWTH_TOL: f64 = 1.05;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn report(id: u32, name: &'static str, pass: bool, detail: String, started: Instant) -> Verdict {
    Verdict { id, name, pass, detail, seconds: started.elapsed().as_secs_f64() }
}

fn c1_steady_state_preservation() -> Vec<Verdict> {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut ok = true;
    for scheme in [Scheme::ExplicitEuler, Scheme::ImexDiffusion] {
        let (status, dev) = steady_deviation(&fixtures::steady_setup(scheme)).unwrap();
        ok &= status == RunStatus::Completed && dev <= 1e-8;
        worst = worst.max(dev);
    }
    vec![report(1, "steady state", ok, format!("max deviation {worst:.3e} (tol 1e-8)"), t0)]
}

fn c2_logistic_oracle() -> Vec<Verdict> {
    let t0 = Instant::now();
    let (r, mu, u0, t_end) = (1.0, 1.0, 0.5, 5.0);
    let params = Params {
        chi: 1.0,
        r,
        mu,
        alpha: 1.0,
        beta: 1.0,
        k: 0.5,
        lengths: vec![1.0],
        cells: vec![4],
    };
    let setup = RunSetup {
        diag: DiagSpec {
            functional: validate_functional_spec(4.0, 2.0, &params).unwrap(),
            cadence: Cadence::EverySteps(1000),
        },
        params,
        scheme: SchemeConfig::new(Scheme::ExplicitEuler, t_end, 1e-4),
        floor: VFloorPolicy::default(),
        ic: InitialCondition::Constant { u0, v0: u0 },
        seed: 0,
    };
    let sim = simulate(&setup, &mut []).unwrap();
    let capacity = r / mu;
    let exact = capacity / (1.0 + (capacity / u0 - 1.0) * (-r * t_end).exp());
    let err = sim.final_state.u.iter().map(|u| (u - exact).abs() / exact).fold(0.0, f64::max);
    let ok = sim.status == RunStatus::Completed && (sim.final_state.t - t_end).abs() < 1e-12 && err <= 1e-3;
    vec![report(2, "logistic oracle", ok, format!("relative error {err:.3e} (tol 1e-3)"), t0)]
}

/// Tracks `min u` over every recorded state.
struct MinU(f64);

impl DiagSink for MinU {
    fn accept(&mut self, _r: &DiagRecord, s: &State) -> Result<()> {
        self.0 = self.0.min(s.u.min());
        Ok(())
    }
}

/// Seeded random parameters and random-smooth data on a 2-D 64² box.
fn random_setup(seed: u64) -> RunSetup {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let params = Params {
        chi: rng.gen_range(0.5..2.0),
        r: rng.gen_range(0.5..2.0),
        mu: rng.gen_range(0.5..4.0),
        alpha: rng.gen_range(0.5..2.0),
        beta: rng.gen_range(0.5..2.0),
        k: rng.gen_range(0.2..0.8),
        lengths: vec![fixtures::BOX_LENGTH; 2],
        cells: vec![64, 64],
    };
    RunSetup {
        diag: DiagSpec {
            functional: validate_functional_spec(4.0, 2.0, &params).unwrap(),
            cadence: Cadence::EveryTime(0.1),
        },
        params,
        scheme: SchemeConfig::new(Scheme::ImexDiffusion, 20.0, 0.05),
        floor: VFloorPolicy::default(),
        ic: InitialCondition::RandomSmooth {
            amplitude_u: rng.gen_range(0.5..3.0),
            amplitude_v: rng.gen_range(0.5..2.0),
            floor_u: 0.05,
            floor_v: 0.05,
        },
        seed,
    }
}

fn c3_c4_mass_bound_and_positivity() -> Vec<Verdict> {
    let t0 = Instant::now();
    let results: Vec<_> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let setup = random_setup(seed);
            let mut min_u = MinU(f64::INFINITY);
            let sim = simulate(&setup, &mut [&mut min_u]).unwrap();
            let grid = setup.params.grid();
            let u0_mass = grid.integrate(&sim.initial.u);
            let mass = check_mass_bound(&sim.records, &setup.params, &grid, u0_mass);
            let floor = check_v_floor(&sim.records, &setup.params, sim.initial.v.min(), 1e-8);
            (seed, sim.status, mass, floor, min_u.0)
        })
        .collect();
    let mut mass_ok = true;
    let mut pos_ok = true;
    let (mut mass_margin, mut floor_margin, mut min_u) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for (seed, status, mass, floor, mu) in &results {
        if *status != RunStatus::Completed {
            println!("  seed {seed}: run ended with {status}");
        }
        mass_ok &= *status == RunStatus::Completed && mass.passed;
        pos_ok &= *status == RunStatus::Completed && floor.passed && *mu >= 0.0;
        mass_margin = mass_margin.min(mass.worst_margin);
        floor_margin = floor_margin.min(floor.worst_margin);
        min_u = min_u.min(*mu);
    }
    vec![
        report(3, "mass bound", mass_ok, format!("10 runs, worst margin {mass_margin:.3e}"), t0),
        report(
            4,
            "positivity",
            pos_ok,
            format!("min u {min_u:.3e}, worst signal-floor margin {floor_margin:.3e}"),
            t0,
        ),
    ]
}

fn c5_interpolation_inequality_corpus() -> Vec<Verdict> {
    let t0 = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    let mut worst_scale = 0.0f64;
    for dim in [1usize, 2] {
        for p in [2.0, 3.0, 4.0] {
            let coarse = lemma24_study(dim, 64, p, 100).unwrap();
            let fine = lemma24_study(dim, 128, p, 100).unwrap();
            for rep in [&coarse, &fine] {
                ok &= rep.entries.len() == 100 && rep.entries.iter().all(|e| e.ratio.is_finite() && e.ratio > 0.0);
                for seed in 0..100u64 {
                    let (grid, w) = lemma24_corpus_field(dim, rep.cells, seed, CORPUS_FLOOR, CORPUS_AMPLITUDE);
                    let w3: Vec<f64> = w.iter().map(|x| 3.0 * x).collect();
                    let a = lemma24_ratio(&w, p, &grid).unwrap().ratio;
                    let b = lemma24_ratio(&w3, p, &grid).unwrap().ratio;
                    worst_scale = worst_scale.max(((a - b) / a).abs());
                }
            }
            let growth = fine.max_ratio / coarse.max_ratio;
            ok &= growth <= 2.0;
            notes.push(format!("d{dim} p{p}: {growth:.3}"));
        }
    }
    ok &= worst_scale <= 1e-12;
    vec![report(
        5,
        "inequality corpus",
        ok,
        format!("refinement growth [{}], scale drift {worst_scale:.1e}", notes.join(", ")),
        t0,
    )]
}

fn c6_manufactured_convergence() -> Vec<Verdict> {
    let t0 = Instant::now();
    let spec = fixtures::mms_spec();
    let cfg = fixtures::mms_run_config();
    let min_order = |rows: &[chemotaxis::experiments::ConvergenceRow], f: fn(&chemotaxis::experiments::ConvergenceRow) -> Option<f64>| {
        rows.iter().filter_map(f).fold(f64::INFINITY, f64::min)
    };
    let diff = run_convergence(&spec, &fixtures::mms_diffusion_params(), &cfg).unwrap();
    let chemo = run_convergence(&spec, &fixtures::mms_chemotaxis_params(), &cfg).unwrap();
    let (du, dv) = (min_order(&diff, |r| r.order_u), min_order(&diff, |r| r.order_v));
    let (cu, cv) = (min_order(&chemo, |r| r.order_u), min_order(&chemo, |r| r.order_v));
    let ok = du >= 1.9 && dv >= 1.9 && cu >= 0.9 && cv >= 1.9;
    vec![report(
        6,
        "manufactured convergence",
        ok,
        format!("chi=0 orders u {du:.3} v {dv:.3}; chi=1 orders u {cu:.3} v {cv:.3}"),
        t0,
    )]
}

fn bump_run(setup: &RunSetup, csv: &std::path::Path) -> (chemotaxis::experiments::Simulation, Classification) {
    let mut sink = CsvSink::create(csv).unwrap();
    let sim = simulate(setup, &mut [&mut sink]).unwrap();
    sink.finish().unwrap();
    let class = classify_boundedness(&sim.records, sim.status, WINDOW, GROWTH_TOL).unwrap();
    (sim, class)
}

fn c7_c8_boundedness_and_determinism() -> Vec<Verdict> {
    let dir = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let setup = fixtures::bump_setup(10.0, &[128, 128], 50.0);
    let (sim, class) = bump_run(&setup, &dir.path().join("a.csv"));
    let t_h = argmax_time(&sim.records, |r| r.h_pq).unwrap();
    let t_s = argmax_time(&sim.records, |r| r.sing_p.unwrap_or(f64::NAN)).unwrap_or(f64::NAN);
    let ok2 = class == Classification::Bounded && t_h < 40.0 && t_s < 40.0;
    let detail2 = format!("2-D {}, sup h at t={t_h}, sup weighted-gradient at t={t_s}", class.name());
    let elapsed2 = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let setup3 = fixtures::bump_setup(10.0, &[32, 32, 32], 20.0);
    let (_, class3) = bump_run(&setup3, &dir.path().join("c.csv"));
    let ok = ok2 && class3 == Classification::Bounded;
    let v7 = report(
        7,
        "boundedness",
        ok,
        format!("{detail2} ({elapsed2:.1} s); 3-D {} ({:.1} s)", class3.name(), t1.elapsed().as_secs_f64()),
        t0,
    );

    let t2 = Instant::now();
    bump_run(&setup, &dir.path().join("b.csv"));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    vec![v7, report(8, "determinism", a == b, format!("{} bytes compared", a.len()), t2)]
}

fn c9_threshold_bisection() -> Vec<Verdict> {
    let t0 = Instant::now();
    let base = fixtures::bump_setup(10.0, &[128, 128], 50.0);
    let spec = SweepSpec::new(base, vec![0.01, 10.0], vec![1.0], vec![0.5]);
    let rep = bisect_threshold(&spec, 6).unwrap();
    let ok = match &rep.outcome {
        ThresholdOutcome::Interval { low, high } => {
            high - low <= 0.16
                && rep.transcript.iter().any(|e| e.mu == *high && e.classification == Some("bounded"))
        }
        ThresholdOutcome::NoLowerBracket => rep.transcript.iter().all(|e| e.classification == Some("bounded")),
        _ => false,
    };
    let runs: Vec<String> = rep
        .transcript
        .iter()
        .map(|e| format!("mu={} {}", e.mu, e.classification.unwrap_or("inconclusive")))
        .collect();
    let detail = format!("{:?} after {} iterations; runs: {}", rep.outcome, rep.iterations, runs.join(", "));
    vec![report(9, "threshold bisection", ok, detail, t0)]
}

type Criterion = fn() -> Vec<Verdict>;

const CRITERIA: [(&[u32], Criterion); 7] = [
    (&[1], c1_steady_state_preservation),
    (&[2], c2_logistic_oracle),
    (&[3, 4], c3_c4_mass_bound_and_positivity),
    (&[5], c5_interpolation_inequality_corpus),
    (&[6], c6_manufactured_convergence),
    (&[7, 8], c7_c8_boundedness_and_determinism),
    (&[9], c9_threshold_bisection),
];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut passed, mut failed) = (0, 0);
    for (ids, criterion) in CRITERIA {
        if !wanted.is_empty() && !ids.iter().any(|i| wanted.contains(i)) {
            continue;
        }
        let verdicts = std::panic::catch_unwind(criterion).unwrap_or_else(|_| {
            ids.iter()
                .map(|&id| Verdict {
                    id,
                    name: "panicked",
                    pass: false,
                    detail: "see panic message above".into(),
                    seconds: 0.0,
                })
                .collect()
        });
        for v in verdicts {
            println!(
                "{} criterion {} ({}): {} [{:.1} s]",
                if v.pass { "PASS" } else { "FAIL" },
                v.id,
                v.name,
                v.detail,
                v.seconds
            );
            if v.pass {
                passed += 1;
            } else {
                failed += 1;
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
