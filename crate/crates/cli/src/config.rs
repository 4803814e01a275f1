//! Run configuration: TOML file, flag overrides and the resolved result.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use horseshoe::maps::MapKind;
use horseshoe::schedule::{Constants, ToySchedule};
use horseshoe::Map;
use serde::{Deserialize, Serialize};

use crate::{Failure, GlobalArgs};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "HORSESHOE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exploration,
    Strict,
}

impl Mode {
    pub fn stamp(self) -> &'static str {
        match self {
            Mode::Exploration => "EXPLORATION",
            Mode::Strict => "STRICT",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConstants {
    pub theta0: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "Cprime")]
    pub c_prime: Option<f64>,
    #[serde(rename = "C0")]
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileGrid {
    pub samples: Option<usize>,
    pub cells: Option<usize>,
    pub seeds_per_level: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOutput {
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

/// Contents of a `--config` file. Dotted keys such as `constants.theta0`
/// and `[constants]` tables are equivalent.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub map: Option<String>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub constants: FileConstants,
    #[serde(default)]
    pub grid: FileGrid,
    #[serde(default)]
    pub output: FileOutput,
    pub toy: Option<ToySchedule>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::config(format!("parsing {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsBlock {
    pub theta0: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Cprime")]
    pub c_prime: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
}

impl ConstantsBlock {
    pub fn schedule(&self) -> Constants {
        Constants { theta0: self.theta0, c: self.c, c_prime: self.c_prime, c0: self.c0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSizes {
    /// Monte Carlo samples for covers.
    pub samples: usize,
    /// Mask resolution of the decomposition.
    pub cells: usize,
    pub seeds_per_level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

/// Fully resolved configuration, embedded in every report. The worker count
/// is left out since it never changes the output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub map: String,
    pub mode: Mode,
    pub seed: u64,
    pub constants: ConstantsBlock,
    pub grid: GridSizes,
    pub output: Outputs,
    pub toy: Option<ToySchedule>,
}

impl RunConfig {
    /// Flags first, then the file, then defaults.
    pub fn resolve(g: &GlobalArgs, file: FileConfig) -> Result<Self, Failure> {
        let defaults = Constants::default();
        let fc = &file.constants;
        let constants = ConstantsBlock {
            theta0: g.theta0.or(fc.theta0).unwrap_or(defaults.theta0),
            c: g.c.or(fc.c).unwrap_or(defaults.c),
            c_prime: g.c_prime.or(fc.c_prime).unwrap_or(defaults.c_prime),
            c0: g.c0.or(fc.c0).unwrap_or(defaults.c0),
            c1: g.c1.or(fc.c1).unwrap_or(100.0),
            c2: g.c2.or(fc.c2).unwrap_or(1.0),
        };
        if !(constants.theta0 > 0.0 && constants.theta0 < 1.0) {
            return Err(Failure::config(format!("theta0 must lie in (0, 1), got {}", constants.theta0)));
        }
        for (name, v) in [("C", constants.c), ("Cprime", constants.c_prime), ("C0", constants.c0), ("c1", constants.c1), ("C2", constants.c2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::config(format!("constant {name} must be positive, got {v}")));
            }
        }
        let grid = GridSizes {
            samples: g.samples.or(file.grid.samples).unwrap_or(20_000),
            cells: g.grid.or(file.grid.cells).unwrap_or(64),
            seeds_per_level: g.seeds_per_level.or(file.grid.seeds_per_level).unwrap_or(16),
        };
        if grid.samples == 0 || grid.cells == 0 {
            return Err(Failure::config("samples and grid cells must be positive"));
        }
        let mode = g.mode.or(file.mode).unwrap_or_default();
        let toy = merge_toy(g, file.toy)?;
        if mode == Mode::Strict && toy.is_some() {
            return Err(Failure::config("strict mode forbids toy-schedule overrides"));
        }
        let map = g.map.clone().or(file.map).unwrap_or_else(|| "cat".into());
        parse_map(&map)?;
        Ok(Self {
            map,
            mode,
            seed: g.seed.or(file.seed).unwrap_or(42),
            constants,
            grid,
            output: Outputs { report: g.out.clone().or(file.output.report), table: g.table.clone().or(file.output.table) },
            toy,
        })
    }

    pub fn surface_map(&self) -> Map {
        parse_map(&self.map).expect("validated in resolve")
    }
}

fn merge_toy(g: &GlobalArgs, file: Option<ToySchedule>) -> Result<Option<ToySchedule>, Failure> {
    let any_flag = g.toy_q.is_some()
        || g.toy_l.is_some()
        || g.toy_eta.is_some()
        || g.toy_xi.is_some()
        || g.toy_lambda.is_some()
        || g.toy_required.is_some();
    let toy = match (file, any_flag) {
        (None, false) => return Ok(None),
        (Some(t), _) => t,
        (None, true) => {
            let (Some(_), Some(_), Some(_)) = (&g.toy_q, &g.toy_l, g.toy_eta) else {
                return Err(Failure::config("a toy schedule needs --toy-q, --toy-l and --toy-eta"));
            };
            ToySchedule { q: vec![], l: vec![], eta: 0.0, xi: None, lambda: None, required: None }
        }
    };
    let toy = ToySchedule {
        q: g.toy_q.clone().unwrap_or(toy.q),
        l: g.toy_l.clone().unwrap_or(toy.l),
        eta: g.toy_eta.unwrap_or(toy.eta),
        xi: g.toy_xi.clone().or(toy.xi),
        lambda: g.toy_lambda.clone().or(toy.lambda),
        required: g.toy_required.or(toy.required),
    };
    toy.validate().map_err(|e| Failure::config(e.to_string()))?;
    Ok(Some(toy))
}

/// Worker count: flag, then file, then the environment, then all cores (0).
pub fn workers(flag: Option<usize>, file: Option<usize>) -> Result<usize, Failure> {
    if let Some(w) = flag.or(file) {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::config(format!("{WORKERS_ENV} must be a count, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

/// Map descriptors: `cat`, `standard:K`, `translation:a,b`, and
/// `+`-joined composites applied left to right.
pub fn parse_map(s: &str) -> Result<Map, Failure> {
    let s = s.trim();
    if s.contains('+') {
        let parts = s.split('+').map(parse_map).collect::<Result<Vec<_>, _>>()?;
        return Ok(Map::composite(parts));
    }
    let bad = || Failure::config(format!("unrecognized map descriptor {s:?}"));
    let num = |v: &str| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    match (name.trim(), arg) {
        ("cat", "") => Ok(Map::cat()),
        ("standard", a) => Ok(Map::new(MapKind::Standard { k: num(a)? })),
        ("translation", a) => {
            let (x, y) = a.split_once(',').ok_or_else(bad)?;
            Ok(Map::translation(num(x)?, num(y)?))
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_descriptors_round_trip() {
        assert_eq!(parse_map("cat").unwrap(), Map::cat());
        assert_eq!(parse_map("standard:6").unwrap(), Map::standard(6.0));
        assert_eq!(parse_map("translation:0.1, 0.2").unwrap(), Map::translation(0.1, 0.2));
        assert_eq!(parse_map("cat+standard:1").unwrap(), Map::composite(vec![Map::cat(), Map::standard(1.0)]));
        for bad in ["", "cat:1", "standard", "standard:x", "translation:1", "henon:1"] {
            assert!(parse_map(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn file_config_accepts_dotted_keys() {
        let f: FileConfig = toml::from_str("map = \"standard:6\"\nconstants.theta0 = 0.9\ngrid.cells = 32\n").unwrap();
        assert_eq!(f.constants.theta0, Some(0.9));
        assert_eq!(f.grid.cells, Some(32));
        assert!(toml::from_str::<FileConfig>("bogus = 1\n").is_err());
    }
}
