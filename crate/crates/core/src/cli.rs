//! Command-line entry points.
//!
//! Exit status: 0 success, 1 validation error, 2 aborted physics (blow-up,
//! floor breach, failed verification), 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::lemma24_study;
use crate::error::{Error, Result};
use crate::experiments::{
    bisect_threshold, convergence_table, run_convergence, run_sweep, simulate, steady_deviation, MmsSpec,
    RunSetup, SweepSpec,
};
use crate::integrator::{Cadence, DiagSpec, RunStatus, Scheme, SchemeConfig};
use crate::fixtures;
use crate::io::config::{parse_config, RunConfig};
use crate::io::csv::CsvSink;
use crate::io::snapshot::write_snapshot;
use crate::model::{steady_state, InitialCondition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PHYSICS: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chemotaxis", version, about = "Singular-sensitivity chemotaxis simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Directory for all output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single simulation: diagnostics CSV and optional final snapshot.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Parameter sweep over the mu/chi/k lists of the config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Empirical damping threshold by bisection along mu.
    Bisect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_iters: usize,
    },
    /// Manufactured-solution convergence table.
    Mms {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Inequality corpus study.
    VerifyLemma24 {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Checks that the homogeneous equilibrium is preserved by both schemes.
    SteadyCheck {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Inconclusive(_) => EXIT_VALIDATION,
        Error::VFloorBreached { .. }
        | Error::SolverDiverged { .. }
        | Error::NonFinite(_)
        | Error::DiagnosticOverflow(_)
        | Error::DtUnderflow { .. } => EXIT_PHYSICS,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    fs::create_dir_all(&g.out_dir).map_err(|e| Error::io(&g.out_dir, e))?;
    match &cli.command {
        Command::Run { config } => cmd_run(config, g),
        Command::Sweep { config } => cmd_sweep(config, g),
        Command::Bisect { config, max_iters } => cmd_bisect(config, *max_iters, g),
        Command::Mms { config } => cmd_mms(config.as_deref(), g),
        Command::VerifyLemma24 { samples } => cmd_lemma24(*samples, g),
        Command::SteadyCheck { config } => cmd_steady(config.as_deref(), g),
    }
}

fn load(config: &Path, g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = parse_config(config)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn setup_of(cfg: &RunConfig) -> RunSetup {
    RunSetup {
        params: cfg.params.clone(),
        scheme: cfg.scheme,
        floor: cfg.floor,
        ic: cfg.ic.clone(),
        seed: cfg.seed,
        diag: DiagSpec {
            functional: cfg.functional,
            cadence: Cadence::EverySteps(cfg.diag_every_steps),
        },
    }
}

fn resolve(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_run(config: &Path, g: &GlobalOpts) -> Result<i32> {
    let cfg = load(config, g)?;
    if cfg.is_sweep() {
        return Err(Error::validation("`run` takes single values for mu, chi and k; use `sweep`"));
    }
    let echo = cfg.to_config_string();
    write_file(&g.out_dir.join("config_echo.cfg"), &echo)?;
    if !g.quiet {
        print!("# resolved configuration\n{echo}");
    }
    let csv_path = resolve(&g.out_dir, &cfg.out_csv);
    let mut csv = CsvSink::create(&csv_path)?;
    let sim = simulate(&setup_of(&cfg), &mut [&mut csv])?;
    csv.finish()?;
    if let Some(snap) = &cfg.out_snapshot {
        write_snapshot(&sim.final_state, &cfg.params.grid(), resolve(&g.out_dir, snap))?;
    }
    if !g.quiet {
        println!(
            "status = {}\nsteps = {}\nt = {}\nrecords = {} -> {}",
            sim.status,
            sim.steps,
            sim.final_state.t,
            sim.records.len(),
            csv_path.display()
        );
    }
    Ok(if sim.status == RunStatus::Completed { EXIT_OK } else { EXIT_PHYSICS })
}

fn sweep_spec(cfg: &RunConfig) -> SweepSpec {
    SweepSpec::new(
        setup_of(cfg),
        cfg.mu_values.clone(),
        cfg.chi_values.clone(),
        cfg.k_values.clone(),
    )
}

fn cmd_sweep(config: &Path, g: &GlobalOpts) -> Result<i32> {
    let cfg = load(config, g)?;
    let cell_dir = g.out_dir.join("cells");
    fs::create_dir_all(&cell_dir).map_err(|e| Error::io(&cell_dir, e))?;
    let res = run_sweep(&sweep_spec(&cfg), Some(&cell_dir))?;
    let csv = res.to_csv();
    write_file(&g.out_dir.join("sweep.csv"), &csv)?;
    write_file(&g.out_dir.join("sweep_summary.json"), &res.to_json())?;
    if !g.quiet {
        print!("{csv}");
    }
    Ok(EXIT_OK)
}

fn cmd_bisect(config: &Path, max_iters: usize, g: &GlobalOpts) -> Result<i32> {
    let cfg = load(config, g)?;
    let rep = bisect_threshold(&sweep_spec(&cfg), max_iters)?;
    let json = serde_json::to_string_pretty(&rep).expect("report serializes");
    write_file(&g.out_dir.join("threshold.json"), &json)?;
    if !g.quiet {
        println!("{json}");
    }
    Ok(EXIT_OK)
}

fn cmd_mms(config: Option<&Path>, g: &GlobalOpts) -> Result<i32> {
    let studies = match config {
        Some(path) => {
            let cfg = load(path, g)?;
            let n = cfg.params.cells[0];
            let spec = MmsSpec { levels: vec![n, 2 * n, 4 * n], ..fixtures::mms_spec() };
            vec![("config".to_string(), spec, cfg.params.clone(), fixtures::mms_run_config())]
        }
        None => vec![
            ("diffusion".to_string(), fixtures::mms_spec(), fixtures::mms_diffusion_params(), fixtures::mms_run_config()),
            ("chemotaxis".to_string(), fixtures::mms_spec(), fixtures::mms_chemotaxis_params(), fixtures::mms_run_config()),
        ],
    };
    let mut all = String::from("study,");
    all.push_str(&convergence_table(&[]));
    for (name, spec, params, run_cfg) in studies {
        let rows = run_convergence(&spec, &params, &run_cfg)?;
        let table = convergence_table(&rows);
        if !g.quiet {
            println!("# {name} (chi = {}, k = {})\n{table}", params.chi, params.k);
        }
        for line in table.lines().skip(1) {
            all.push_str(&format!("{name},{line}\n"));
        }
    }
    write_file(&g.out_dir.join("mms.csv"), &all)?;
    Ok(EXIT_OK)
}

fn cmd_lemma24(samples: usize, g: &GlobalOpts) -> Result<i32> {
    let mut detail = String::from("dim,cells,p,sample,lhs,laplacian_p,w_p,ratio\n");
    let mut summary = String::from("dim,cells,p,samples,max_ratio,mean_ratio\n");
    let mut ok = true;
    for dim in [1usize, 2] {
        for p in [2.0, 3.0, 4.0] {
            let coarse = lemma24_study(dim, 64, p, samples)?;
            let fine = lemma24_study(dim, 128, p, samples)?;
            for rep in [&coarse, &fine] {
                summary.push_str(&format!(
                    "{},{},{},{},{:.16e},{:.16e}\n",
                    rep.dim, rep.cells, rep.p, rep.samples, rep.max_ratio, rep.mean_ratio
                ));
                for (i, e) in rep.entries.iter().enumerate() {
                    ok &= e.ratio.is_finite();
                    detail.push_str(&format!(
                        "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        rep.dim, rep.cells, rep.p, i, e.lhs, e.laplacian_p, e.w_p, e.ratio
                    ));
                }
            }
            ok &= fine.max_ratio <= 2.0 * coarse.max_ratio;
        }
    }
    write_file(&g.out_dir.join("lemma24.csv"), &detail)?;
    write_file(&g.out_dir.join("lemma24_summary.csv"), &summary)?;
    if !g.quiet {
        print!("{summary}");
        println!("verdict = {}", if ok { "pass" } else { "fail" });
    }
    Ok(if ok { EXIT_OK } else { EXIT_PHYSICS })
}

fn cmd_steady(config: Option<&Path>, g: &GlobalOpts) -> Result<i32> {
    let base = match config {
        Some(path) => {
            let cfg = load(path, g)?;
            let mut s = setup_of(&cfg);
            let (u0, v0) = steady_state(&s.params);
            s.ic = InitialCondition::Constant { u0, v0 };
            s
        }
        None => fixtures::steady_setup(Scheme::ExplicitEuler),
    };
    let mut ok = true;
    for scheme in [Scheme::ExplicitEuler, Scheme::ImexDiffusion] {
        let setup = RunSetup {
            scheme: SchemeConfig { scheme, ..base.scheme },
            ..base.clone()
        };
        let (status, dev) = steady_deviation(&setup)?;
        let pass = status == RunStatus::Completed && dev <= fixtures::STEADY_TOLERANCE;
        ok &= pass;
        if !g.quiet {
            println!("{}: status = {status}, max deviation = {dev:e}, {}", scheme.name(), if pass { "pass" } else { "fail" });
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_PHYSICS })
}
