//! Run configuration in a flat `key = value` text format.
//!
//! Lines starting with `#` and blank lines are ignored; a `#` after a value
//! starts a trailing comment. List-valued keys (`beta`, `k`, `seed`,
//! `levels`) take comma separated values, and `levels` also accepts an
//! inclusive range `a..b`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fractional::ModelParams;
use crate::mesh::MAX_LEVEL;
use crate::noise::NoiseMode;
use crate::sparse::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sample,
    Convergence,
    QuadratureStudy,
    NoiseStudy,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Convergence => "convergence",
            Command::QuadratureStudy => "quadrature-study",
            Command::NoiseStudy => "noise-study",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Command::Sample),
            "convergence" => Ok(Command::Convergence),
            "quadrature-study" => Ok(Command::QuadratureStudy),
            "noise-study" => Ok(Command::NoiseStudy),
            other => Err(Error::Config(format!("unknown command `{other}`"))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModeKind {
    Interpolate,
    Project,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub beta: Vec<f64>,
    pub kappa: f64,
    /// Noise truncation degree.
    pub degree: usize,
    pub k: Vec<f64>,
    pub levels: Vec<u32>,
    pub samples: usize,
    pub seed: Vec<u64>,
    pub noise_mode: NoiseModeKind,
    pub cg_tol: f64,
    pub cg_max_iter: Option<usize>,
    /// Lifted quadrature order for noise projection and error integration.
    pub quad_order: u32,
    pub output: PathBuf,
}

const KEYS: [&str; 13] = [
    "command",
    "beta",
    "kappa",
    "L",
    "k",
    "levels",
    "samples",
    "seed",
    "noise_mode",
    "cg_tol",
    "cg_max_iter",
    "quad_order",
    "output",
];

fn parse_scalar<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("cannot parse value `{raw}` of key `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| parse_scalar(key, s.trim()))
        .collect()
}

fn parse_levels(raw: &str) -> Result<Vec<u32>> {
    if let Some((a, b)) = raw.split_once("..") {
        let a: u32 = parse_scalar("levels", a.trim())?;
        let b: u32 = parse_scalar("levels", b.trim())?;
        return Ok((a..=b).collect());
    }
    parse_list("levels", raw)
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{key}`",
                    n + 1
                )));
            }
            if map.insert(key, value).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    n + 1
                )));
            }
        }
        let required = |key: &str| -> Result<&str> {
            map.get(key)
                .copied()
                .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
        };
        let noise_mode = match map.get("noise_mode").copied().unwrap_or("project") {
            "project" => NoiseModeKind::Project,
            "interpolate" => NoiseModeKind::Interpolate,
            other => {
                return Err(Error::Config(format!(
                    "noise_mode must be `project` or `interpolate` (got `{other}`)"
                )))
            }
        };
        let cfg = RunConfig {
            command: required("command")?.parse()?,
            beta: parse_list("beta", required("beta")?)?,
            kappa: parse_scalar("kappa", required("kappa")?)?,
            degree: parse_scalar("L", required("L")?)?,
            k: parse_list("k", required("k")?)?,
            levels: parse_levels(required("levels")?)?,
            samples: parse_scalar("samples", required("samples")?)?,
            seed: parse_list("seed", required("seed")?)?,
            noise_mode,
            cg_tol: map
                .get("cg_tol")
                .map_or(Ok(1e-10), |v| parse_scalar("cg_tol", v))?,
            cg_max_iter: map
                .get("cg_max_iter")
                .map(|v| parse_scalar("cg_max_iter", v))
                .transpose()?,
            quad_order: map
                .get("quad_order")
                .map_or(Ok(5), |v| parse_scalar("quad_order", v))?,
            output: map
                .get("output")
                .map_or_else(|| PathBuf::from("."), PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.beta.is_empty() || self.beta.iter().any(|b| !(*b > 0.5) || !b.is_finite()) {
            return bad(format!(
                "every beta must be finite and exceed 1/2 (got {})",
                join(&self.beta)
            ));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return bad(format!("kappa must be positive (got {})", self.kappa));
        }
        if self.k.is_empty() || self.k.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return bad(format!(
                "k must be a nonempty list of positive steps (got {})",
                join(&self.k)
            ));
        }
        if self.levels.is_empty() || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "levels must be nonempty and strictly ascending (got {})",
                join(&self.levels)
            ));
        }
        if let Some(&l) = self.levels.iter().find(|&&l| l > MAX_LEVEL) {
            return bad(format!("level {l} exceeds the limit of {MAX_LEVEL}"));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.seed.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.cg_tol > 0.0) || !self.cg_tol.is_finite() {
            return bad(format!("cg_tol must be positive (got {})", self.cg_tol));
        }
        if self.cg_max_iter == Some(0) {
            return bad("cg_max_iter must be positive".into());
        }
        if ![1, 2, 5].contains(&self.quad_order) {
            return bad(format!(
                "quad_order must be 1, 2 or 5 (got {})",
                self.quad_order
            ));
        }
        if self.noise_mode == NoiseModeKind::Project && self.quad_order == 1 {
            return bad("noise projection needs quad_order 2 or 5".into());
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseMode {
        match self.noise_mode {
            NoiseModeKind::Interpolate => NoiseMode::Interpolate,
            NoiseModeKind::Project => NoiseMode::Project(self.quad_order),
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.cg_tol,
            max_iterations: self.cg_max_iter,
            ..SolverConfig::default()
        }
    }

    /// Model parameters for one `(beta, k)` pair of the lists.
    pub fn params(&self, beta: f64, k: f64) -> Result<ModelParams> {
        let mut p = ModelParams::new(beta, self.kappa, self.degree, k)?;
        p.noise = self.noise();
        p.solver = self.solver();
        p.validate()?;
        Ok(p)
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("command", self.command.to_string());
        put("beta", join(&self.beta));
        put("kappa", self.kappa.to_string());
        put("L", self.degree.to_string());
        put("k", join(&self.k));
        put("levels", join(&self.levels));
        put("samples", self.samples.to_string());
        put("seed", join(&self.seed));
        put(
            "noise_mode",
            match self.noise_mode {
                NoiseModeKind::Interpolate => "interpolate",
                NoiseModeKind::Project => "project",
            }
            .into(),
        );
        put("cg_tol", self.cg_tol.to_string());
        if let Some(n) = self.cg_max_iter {
            put("cg_max_iter", n.to_string());
        }
        put("quad_order", self.quad_order.to_string());
        put("output", self.output.display().to_string());
        s
    }
}
