//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment. `mu`, `chi` and `k` accept a
//! comma-separated list for sweeps; every other key takes a single value.
//! Unknown keys, duplicates and keys that do not apply (e.g. `cells_y` with
//! `dim = 1`) are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::{Scheme, SchemeConfig};
use crate::model::{validate_functional_spec, FunctionalSpec, InitialCondition, Params};
use crate::operators::{HelmholtzOptions, VFloorPolicy};

const AXES: [&str; 3] = ["x", "y", "z"];

const KNOWN_KEYS: &[&str] = &[
    "dim",
    "cells_x",
    "cells_y",
    "cells_z",
    "length_x",
    "length_y",
    "length_z",
    "chi",
    "r",
    "mu",
    "alpha",
    "beta",
    "k",
    "scheme",
    "t_end",
    "dt_max",
    "dt_min",
    "cfl_diffusion",
    "cfl_advection",
    "blowup_threshold",
    "ic_kind",
    "ic_u0",
    "ic_v0",
    "ic_center_x",
    "ic_center_y",
    "ic_center_z",
    "ic_width",
    "ic_amp_u",
    "ic_amp_v",
    "ic_floor_u",
    "ic_floor_v",
    "ic_path",
    "seed",
    "p",
    "q",
    "diag_every_steps",
    "out_csv",
    "out_snapshot",
    "eps_v",
    "hard_floor",
];

pub const DEFAULT_LENGTH: f64 = 1.0;
pub const DEFAULT_DT_MAX: f64 = 0.1;
pub const DEFAULT_P: f64 = 4.0;
pub const DEFAULT_Q: f64 = 2.0;
pub const DEFAULT_DIAG_EVERY: usize = 10;
pub const DEFAULT_OUT_CSV: &str = "diagnostics.csv";

/// Fully resolved and validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Parameters for the first entry of each list.
    pub params: Params,
    pub mu_values: Vec<f64>,
    pub chi_values: Vec<f64>,
    pub k_values: Vec<f64>,
    pub scheme: SchemeConfig,
    pub floor: VFloorPolicy,
    pub ic: InitialCondition,
    pub seed: u64,
    pub functional: FunctionalSpec,
    pub diag_every_steps: usize,
    pub out_csv: PathBuf,
    pub out_snapshot: Option<PathBuf>,
}

impl RunConfig {
    pub fn is_sweep(&self) -> bool {
        self.mu_values.len() > 1 || self.chi_values.len() > 1 || self.k_values.len() > 1
    }

    /// Config text with every resolved value; parsing it reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let list = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "dim = {}", p.dim());
        for a in 0..p.dim() {
            let _ = writeln!(s, "cells_{} = {}", AXES[a], p.cells[a]);
        }
        for a in 0..p.dim() {
            let _ = writeln!(s, "length_{} = {}", AXES[a], p.lengths[a]);
        }
        let _ = writeln!(s, "chi = {}", list(&self.chi_values));
        let _ = writeln!(s, "r = {}", p.r);
        let _ = writeln!(s, "mu = {}", list(&self.mu_values));
        let _ = writeln!(s, "alpha = {}", p.alpha);
        let _ = writeln!(s, "beta = {}", p.beta);
        let _ = writeln!(s, "k = {}", list(&self.k_values));
        let sc = &self.scheme;
        let _ = writeln!(s, "scheme = {}", sc.scheme.name());
        let _ = writeln!(s, "t_end = {}", sc.t_end);
        let _ = writeln!(s, "dt_max = {}", sc.dt_max);
        let _ = writeln!(s, "dt_min = {}", sc.dt_min);
        let _ = writeln!(s, "cfl_diffusion = {}", sc.cfl_diffusion);
        let _ = writeln!(s, "cfl_advection = {}", sc.cfl_advection);
        let _ = writeln!(s, "blowup_threshold = {}", sc.blowup_threshold);
        let _ = writeln!(s, "ic_kind = {}", self.ic.kind());
        match &self.ic {
            InitialCondition::Constant { u0, v0 } => {
                let _ = writeln!(s, "ic_u0 = {u0}");
                let _ = writeln!(s, "ic_v0 = {v0}");
            }
            InitialCondition::GaussianBump {
                center,
                width,
                amplitude_u,
                amplitude_v,
                floor_u,
                floor_v,
            } => {
                for (a, c) in center.iter().enumerate() {
                    let _ = writeln!(s, "ic_center_{} = {c}", AXES[a]);
                }
                let _ = writeln!(s, "ic_width = {width}");
                let _ = writeln!(s, "ic_amp_u = {amplitude_u}");
                let _ = writeln!(s, "ic_amp_v = {amplitude_v}");
                let _ = writeln!(s, "ic_floor_u = {floor_u}");
                let _ = writeln!(s, "ic_floor_v = {floor_v}");
            }
            InitialCondition::RandomSmooth {
                amplitude_u,
                amplitude_v,
                floor_u,
                floor_v,
            } => {
                let _ = writeln!(s, "ic_amp_u = {amplitude_u}");
                let _ = writeln!(s, "ic_amp_v = {amplitude_v}");
                let _ = writeln!(s, "ic_floor_u = {floor_u}");
                let _ = writeln!(s, "ic_floor_v = {floor_v}");
            }
            InitialCondition::FromSnapshot(path) => {
                let _ = writeln!(s, "ic_path = {}", path.display());
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "p = {}", self.functional.p);
        let _ = writeln!(s, "q = {}", self.functional.q);
        let _ = writeln!(s, "diag_every_steps = {}", self.diag_every_steps);
        let _ = writeln!(s, "out_csv = {}", self.out_csv.display());
        if let Some(snap) = &self.out_snapshot {
            let _ = writeln!(s, "out_snapshot = {}", snap.display());
        }
        let _ = writeln!(s, "eps_v = {}", self.floor.eps_v);
        let _ = writeln!(s, "hard_floor = {}", self.floor.hard_floor);
        s
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    used: Vec<String>,
}

impl Entries {
    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        let v = self.map.get(key).cloned();
        if v.is_some() {
            self.used.push(key.to_string());
        }
        v
    }

    fn required_raw(&mut self, key: &str) -> Result<(usize, String)> {
        self.raw(key)
            .ok_or_else(|| Error::validation(format!("missing required key `{key}`")))
    }

    fn parse<T: std::str::FromStr>(line: usize, key: &str, text: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        text.parse::<T>().map_err(|e| {
            Error::validation(format!("line {line}: invalid value `{text}` for `{key}`: {e}"))
        })
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some((line, text)) => Ok(Some(Self::parse(line, key, &text)?)),
            None => Ok(None),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, text) = self.required_raw(key)?;
        Self::parse(line, key, &text)
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>> {
        let (line, text) = self.required_raw(key)?;
        let out = text
            .split(',')
            .map(|t| Self::parse::<f64>(line, key, t.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(out)
    }
}

/// Splits config text into `key -> (line, value)`.
fn tokenize(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::validation(format!("line {line_no}: expected `key = value`, got `{line}`"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::validation(format!(
                "line {line_no}: expected `key = value`, got `{line}`"
            )));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::validation(format!("line {line_no}: unknown key `{key}`")));
        }
        if let Some((first, _)) = map.get(key) {
            return Err(Error::validation(format!(
                "duplicate key `{key}` on lines {first} and {line_no}"
            )));
        }
        map.insert(key.to_string(), (line_no, value.to_string()));
    }
    Ok(map)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut e = Entries {
        map: tokenize(text)?,
        used: Vec::new(),
    };

    let dim: usize = e.required("dim")?;
    if !(1..=3).contains(&dim) {
        return Err(Error::validation(format!("dim must be 1, 2 or 3 (got {dim})")));
    }
    let mut cells = Vec::with_capacity(dim);
    let mut lengths = Vec::with_capacity(dim);
    for axis in &AXES[..dim] {
        cells.push(e.required::<usize>(&format!("cells_{axis}"))?);
        lengths.push(e.get::<f64>(&format!("length_{axis}"))?.unwrap_or(DEFAULT_LENGTH));
    }

    let chi_values = e.list("chi")?;
    let mu_values = e.list("mu")?;
    let k_values = e.list("k")?;
    let base = Params {
        chi: chi_values[0],
        r: e.required("r")?,
        mu: mu_values[0],
        alpha: e.required("alpha")?,
        beta: e.required("beta")?,
        k: k_values[0],
        lengths,
        cells,
    };
    // Every list entry must produce valid parameters on its own.
    for &mu in &mu_values {
        for &chi in &chi_values {
            for &k in &k_values {
                Params { mu, chi, k, ..base.clone() }.validated()?;
            }
        }
    }
    let params = base.validated()?;

    let scheme_name: Option<String> = e.get("scheme")?;
    let scheme = match scheme_name.as_deref() {
        None => Scheme::ImexDiffusion,
        Some(s) => Scheme::parse(s).ok_or_else(|| {
            Error::validation(format!(
                "scheme must be `explicit-euler` or `imex-diffusion` (got `{s}`)"
            ))
        })?,
    };
    let defaults = SchemeConfig::new(scheme, 1.0, DEFAULT_DT_MAX);
    let scheme = SchemeConfig {
        scheme,
        t_end: e.required("t_end")?,
        dt_max: e.get("dt_max")?.unwrap_or(defaults.dt_max),
        dt_min: e.get("dt_min")?.unwrap_or(defaults.dt_min),
        cfl_diffusion: e.get("cfl_diffusion")?.unwrap_or(defaults.cfl_diffusion),
        cfl_advection: e.get("cfl_advection")?.unwrap_or(defaults.cfl_advection),
        blowup_threshold: e.get("blowup_threshold")?.unwrap_or(defaults.blowup_threshold),
        helmholtz: HelmholtzOptions::default(),
    }
    .validated()?;

    let fd = VFloorPolicy::default();
    let floor = VFloorPolicy::new(
        e.get("eps_v")?.unwrap_or(fd.eps_v),
        e.get("hard_floor")?.unwrap_or(fd.hard_floor),
    )?;

    let kind: String = e.required("ic_kind")?;
    let ic = match kind.as_str() {
        "constant" => InitialCondition::Constant {
            u0: e.required("ic_u0")?,
            v0: e.required("ic_v0")?,
        },
        "gaussian-bump" => {
            let mut center = Vec::with_capacity(dim);
            for (a, axis) in AXES[..dim].iter().enumerate() {
                center.push(
                    e.get(&format!("ic_center_{axis}"))?
                        .unwrap_or(0.5 * params.lengths[a]),
                );
            }
            InitialCondition::GaussianBump {
                center,
                width: e.required("ic_width")?,
                amplitude_u: e.required("ic_amp_u")?,
                amplitude_v: e.required("ic_amp_v")?,
                floor_u: e.get("ic_floor_u")?.unwrap_or(0.0),
                floor_v: e.required("ic_floor_v")?,
            }
        }
        "random-smooth" => InitialCondition::RandomSmooth {
            amplitude_u: e.required("ic_amp_u")?,
            amplitude_v: e.required("ic_amp_v")?,
            floor_u: e.get("ic_floor_u")?.unwrap_or(0.0),
            floor_v: e.required("ic_floor_v")?,
        },
        "from-snapshot" => InitialCondition::FromSnapshot(PathBuf::from(e.required::<String>("ic_path")?)),
        other => {
            return Err(Error::validation(format!(
                "ic_kind must be constant, gaussian-bump, random-smooth or from-snapshot (got `{other}`)"
            )))
        }
    };

    let seed = e.get("seed")?.unwrap_or(0);
    let functional = validate_functional_spec(
        e.get("p")?.unwrap_or(DEFAULT_P),
        e.get("q")?.unwrap_or(DEFAULT_Q),
        &params,
    )?;
    let diag_every_steps = e.get("diag_every_steps")?.unwrap_or(DEFAULT_DIAG_EVERY);
    if diag_every_steps == 0 {
        return Err(Error::validation("diag_every_steps must be at least 1"));
    }
    let out_csv = PathBuf::from(e.get::<String>("out_csv")?.unwrap_or_else(|| DEFAULT_OUT_CSV.into()));
    let out_snapshot = e.get::<String>("out_snapshot")?.map(PathBuf::from);

    for (key, (line, _)) in &e.map {
        if !e.used.contains(key) {
            return Err(Error::validation(format!(
                "line {line}: key `{key}` does not apply to this configuration (dim = {dim}, ic_kind = {kind})"
            )));
        }
    }

    Ok(RunConfig {
        params,
        mu_values,
        chi_values,
        k_values,
        scheme,
        floor,
        ic,
        seed,
        functional,
        diag_every_steps,
        out_csv,
        out_snapshot,
    })
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}
