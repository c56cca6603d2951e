//! Run configuration: `key = value` lines grouped in `[section]`s.
//!
//! Keys before the first section header belong to `[run]`. `#` and `;` start comments.
//! Unknown sections and keys are rejected. Defaults:
//!
//! ```text
//! [run]        algebra = O, mode = exact (float for field commands), seed = 1, tol = unset
//! [verify]     samples = 1000, tangent_samples = 20, phi_points = 50, field_points = 5,
//!              fields = true, fixture = none | corrupted-table
//! [torsion]    dim = 3, points = 5, start = random | constant, connection = random | zero
//! [flow]       dim = 2, grid = 32, start = random | constant, metric = euclidean | killing,
//!              max_iterations = 5000, tol = 1e-4, initial_step = 1e-2, max_step = 10,
//!              min_step = 1e-14, armijo = 1e-4, spectral_step = true, growth = 1.5, history = <path>
//! [cs]         grid = 12
//! [companions] map = identity | adq | group
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraTag;
use crate::suites::{CompanionMap, Mode};
use crate::variational::{EnergyMetric, FlowConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Random,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySection {
    pub samples: usize,
    pub tangent_samples: usize,
    pub phi_points: usize,
    pub field_points: usize,
    pub fields: bool,
    pub corrupted_table: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionSection {
    pub dim: usize,
    pub points: usize,
    pub start: Start,
    pub zero_connection: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSection {
    pub dim: usize,
    pub grid: usize,
    pub start: Start,
    pub metric: EnergyMetric,
    pub settings: FlowConfig,
    pub history: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algebra: AlgebraTag,
    /// `None` picks the command's default.
    pub mode: Option<Mode>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub verify: VerifySection,
    pub torsion: TorsionSection,
    pub flow: FlowSection,
    pub cs_grid: usize,
    pub companion_map: CompanionMap,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algebra: AlgebraTag::O,
            mode: None,
            seed: 1,
            tol: None,
            verify: VerifySection { samples: 1000, tangent_samples: 20, phi_points: 50, field_points: 5, fields: true, corrupted_table: false },
            torsion: TorsionSection { dim: 3, points: 5, start: Start::Random, zero_connection: false },
            flow: FlowSection {
                dim: 2,
                grid: 32,
                start: Start::Random,
                metric: EnergyMetric::Euclidean,
                settings: FlowConfig::default(),
                history: None,
            },
            cs_grid: 12,
            companion_map: CompanionMap::Identity,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean '{v}' for {key}"))),
    }
}

fn start(key: &str, v: &str) -> Result<Start> {
    match v {
        "random" => Ok(Start::Random),
        "constant" => Ok(Start::Constant),
        _ => Err(Error::Config(format!("bad value '{v}' for {key} (expected random or constant)"))),
    }
}

pub fn parse_algebra(v: &str) -> Result<AlgebraTag> {
    match AlgebraTag::parse(v)? {
        AlgebraTag::R => Err(Error::Config("algebra must be one of C, H, O".into())),
        t => Ok(t),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section = "run".to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: malformed section header", lineno + 1)))?
                    .trim();
                if !["run", "verify", "torsion", "flow", "cs", "companions"].contains(&name) {
                    return Err(Error::Config(format!("line {}: unknown section [{name}]", lineno + 1)));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(&section, k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip(e))))?;
        }
        Ok(cfg)
    }

    /// Sets `section.key`; unknown keys are errors.
    pub fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let full = format!("{section}.{key}");
        let k = full.as_str();
        let f = &mut self.flow.settings;
        match (section, key) {
            ("run", "algebra") => self.algebra = parse_algebra(v)?,
            ("run", "mode") => self.mode = Some(Mode::parse(v)?),
            ("run", "seed") => self.seed = num(k, v)?,
            ("run", "tol") => self.tol = Some(num(k, v)?),
            ("verify", "samples") => self.verify.samples = num(k, v)?,
            ("verify", "tangent_samples") => self.verify.tangent_samples = num(k, v)?,
            ("verify", "phi_points") => self.verify.phi_points = num(k, v)?,
            ("verify", "field_points") => self.verify.field_points = num(k, v)?,
            ("verify", "fields") => self.verify.fields = flag(k, v)?,
            ("verify", "fixture") => {
                self.verify.corrupted_table = match v {
                    "none" => false,
                    "corrupted-table" => true,
                    _ => return Err(Error::Config(format!("unknown fixture '{v}'"))),
                }
            }
            ("torsion", "dim") => self.torsion.dim = num(k, v)?,
            ("torsion", "points") => self.torsion.points = num(k, v)?,
            ("torsion", "start") => self.torsion.start = start(k, v)?,
            ("torsion", "connection") => {
                self.torsion.zero_connection = match v {
                    "random" => false,
                    "zero" => true,
                    _ => return Err(Error::Config(format!("bad value '{v}' for {k} (expected random or zero)"))),
                }
            }
            ("flow", "dim") => self.flow.dim = num(k, v)?,
            ("flow", "grid") => self.flow.grid = num(k, v)?,
            ("flow", "start") => self.flow.start = start(k, v)?,
            ("flow", "metric") => {
                self.flow.metric = match v {
                    "euclidean" => EnergyMetric::Euclidean,
                    "killing" => EnergyMetric::Killing,
                    _ => return Err(Error::Config(format!("bad value '{v}' for {k} (expected euclidean or killing)"))),
                }
            }
            ("flow", "max_iterations") => f.max_iterations = num(k, v)?,
            ("flow", "tol") => f.tol = num(k, v)?,
            ("flow", "initial_step") => f.initial_step = num(k, v)?,
            ("flow", "max_step") => f.max_step = num(k, v)?,
            ("flow", "min_step") => f.min_step = num(k, v)?,
            ("flow", "armijo") => f.armijo = num(k, v)?,
            ("flow", "spectral_step") => f.spectral_step = flag(k, v)?,
            ("flow", "growth") => f.growth = num(k, v)?,
            ("flow", "history") => self.flow.history = Some(PathBuf::from(v)),
            ("cs", "grid") => self.cs_grid = num(k, v)?,
            ("companions", "map") => self.companion_map = CompanionMap::parse(v)?,
            _ => return Err(Error::Config(format!("unknown key '{full}'"))),
        }
        Ok(())
    }

    pub fn mode_or(&self, default: Mode) -> Mode {
        self.mode.unwrap_or(default)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_unknown() {
        let c = RunConfig::parse("seed = 7\n# comment\n[run]\nalgebra = H\n[flow]\ngrid = 16 ; inline\nspectral_step = false\n").unwrap();
        assert_eq!((c.seed, c.algebra, c.flow.grid, c.flow.settings.spectral_step), (7, AlgebraTag::H, 16, false));
        assert!(matches!(RunConfig::parse("[flow]\ngird = 3"), Err(Error::Config(m)) if m.contains("flow.gird")));
        assert!(RunConfig::parse("[nope]").is_err());
        assert!(RunConfig::parse("algebra = R").is_err());
        assert!(RunConfig::parse("seed = -1").is_err());
        assert!(RunConfig::parse("just words").is_err());
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }
}
