//! Run configuration: presets, a key-value config file and flag overrides.
//!
//! Precedence is flags, then config file, then preset defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use permpois_core::harness::{self, GridSegment, Method, MethodSet, ALPHA};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bias,
    Scenario1,
    Scenario2,
    NullCheck,
    Test,
    Plot,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bias => "bias",
            Command::Scenario1 => "scenario1",
            Command::Scenario2 => "scenario2",
            Command::NullCheck => "null-check",
            Command::Test => "test",
            Command::Plot => "plot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// K = 1000, 1000 permutations, full grids.
    Paper,
    /// K = 200, 200 permutations, n <= 10^4.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::usage(format!("unknown preset {other:?} (expected paper or desk)"))),
        }
    }
}

/// Optional settings from flags or a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub k: Option<u32>,
    pub n_perm: Option<u32>,
    pub grid: Option<String>,
    pub alpha: Option<f64>,
    pub beta0: Option<f64>,
    pub beta2: Option<f64>,
    pub lambda: Option<f64>,
    pub threshold: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub methods: Option<String>,
    pub input: Option<PathBuf>,
    pub add_one: Option<bool>,
}

impl Overrides {
    /// Fill every unset field from `other`.
    pub fn or(self, other: Overrides) -> Overrides {
        Overrides {
            preset: self.preset.or(other.preset),
            seed: self.seed.or(other.seed),
            k: self.k.or(other.k),
            n_perm: self.n_perm.or(other.n_perm),
            grid: self.grid.or(other.grid),
            alpha: self.alpha.or(other.alpha),
            beta0: self.beta0.or(other.beta0),
            beta2: self.beta2.or(other.beta2),
            lambda: self.lambda.or(other.lambda),
            threshold: self.threshold.or(other.threshold),
            out: self.out.or(other.out),
            threads: self.threads.or(other.threads),
            methods: self.methods.or(other.methods),
            input: self.input.or(other.input),
            add_one: self.add_one.or(other.add_one),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::usage(format!("invalid value {value:?} for `{key}`")))
}

/// Parse `key = value` lines (`key value` also accepted). Keys mirror the
/// long flags without dashes; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => line
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::usage(format!("config line {}: expected `key = value`", i + 1)))?,
        };
        let key = key.trim_start_matches("--").replace('_', "-");
        match key.as_str() {
            "preset" => o.preset = Some(value.parse()?),
            "seed" => o.seed = Some(parse_value(&key, value)?),
            "k" => o.k = Some(parse_value(&key, value)?),
            "n-perm" => o.n_perm = Some(parse_value(&key, value)?),
            "grid" => o.grid = Some(value.to_string()),
            "alpha" => o.alpha = Some(parse_value(&key, value)?),
            "beta0" => o.beta0 = Some(parse_value(&key, value)?),
            "beta2" => o.beta2 = Some(parse_value(&key, value)?),
            "lambda" => o.lambda = Some(parse_value(&key, value)?),
            "threshold" => o.threshold = Some(parse_value(&key, value)?),
            "out" => o.out = Some(PathBuf::from(value)),
            "threads" => o.threads = Some(parse_value(&key, value)?),
            "methods" => o.methods = Some(value.to_string()),
            "input" => o.input = Some(PathBuf::from(value)),
            "add-one" => o.add_one = Some(parse_value(&key, value)?),
            other => return Err(Error::usage(format!("config line {}: unknown key `{other}`", i + 1))),
        }
    }
    Ok(o)
}

pub fn load_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_file(&text)
}

/// `lo:hi:points[,lo:hi:points...]` in log10 units.
pub fn parse_grid(spec: &str) -> Result<Vec<GridSegment>> {
    let segments = spec
        .split(',')
        .map(|seg| {
            let parts: Vec<&str> = seg.trim().split(':').collect();
            let [lo, hi, points] = parts[..] else {
                return Err(Error::usage(format!("grid segment {seg:?} must be lo:hi:points")));
            };
            Ok(GridSegment::new(
                parse_value("grid", lo)?,
                parse_value("grid", hi)?,
                parse_value("grid", points)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    harness::make_grid(&segments)?;
    Ok(segments)
}

pub fn parse_methods(spec: &str) -> Result<MethodSet> {
    let mut set = MethodSet { wald: false, permutation: false };
    for m in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match Method::parse(m) {
            Some(Method::Wald) => set.wald = true,
            Some(Method::Permutation) => set.permutation = true,
            None => return Err(Error::usage(format!("unknown method {m:?} (expected wald or permutation)"))),
        }
    }
    if !(set.wald || set.permutation) {
        return Err(Error::usage("at least one method is required"));
    }
    Ok(set)
}

fn default_grid(command: Command, preset: Preset) -> &'static str {
    match (command, preset) {
        (Command::Bias, Preset::Paper) => "1:6:10",
        (Command::Bias, Preset::Desk) => "1:4:7",
        (_, Preset::Paper) => "1:2:30,2:5:30",
        (_, Preset::Desk) => "1:4:8",
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Preset,
    pub master_seed: u64,
    /// Replicates per size (bias: estimates per size).
    pub k: u32,
    pub n_perm: u32,
    pub grid_spec: String,
    #[serde(skip)]
    pub grid: Vec<GridSegment>,
    pub alpha: f64,
    pub beta0: Vec<f64>,
    pub beta2: Vec<f64>,
    pub lambda: f64,
    pub threshold: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub methods: Vec<String>,
    #[serde(skip)]
    pub method_set: MethodSet,
    pub input: Option<PathBuf>,
    pub add_one: bool,
}

impl RunConfig {
    pub fn resolve(command: Command, o: Overrides) -> Result<Self> {
        let preset = o.preset.unwrap_or(Preset::Paper);
        let (k, n_perm) = match preset {
            Preset::Paper => (1000, 1000),
            Preset::Desk => (200, 200),
        };
        let k = o.k.unwrap_or(k);
        let n_perm = o.n_perm.unwrap_or(n_perm);
        if k == 0 {
            return Err(Error::usage("--k must be at least 1"));
        }
        if n_perm == 0 {
            return Err(Error::usage("--n-perm must be at least 1"));
        }
        let alpha = o.alpha.unwrap_or(ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::usage(format!("--alpha must lie in (0, 1), got {alpha}")));
        }
        let grid_spec = o.grid.unwrap_or_else(|| default_grid(command, preset).to_string());
        let grid = parse_grid(&grid_spec)?;
        let (beta0, beta2) = match command {
            Command::Scenario2 => (
                o.beta0.map_or_else(|| vec![0.3, 0.5], |b| vec![b]),
                o.beta2.map_or_else(|| vec![0.7, 0.8], |b| vec![b]),
            ),
            Command::NullCheck => (vec![o.beta0.unwrap_or(0.3)], vec![]),
            _ => (vec![], vec![]),
        };
        if beta0.iter().chain(&beta2).any(|b| !b.is_finite()) {
            return Err(Error::usage("beta values must be finite"));
        }
        let lambda = o.lambda.unwrap_or(5.0);
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::usage(format!("--lambda must be positive, got {lambda}")));
        }
        let default_methods = match command {
            Command::NullCheck => "wald",
            _ => "wald,permutation",
        };
        let methods_spec = o.methods.unwrap_or_else(|| default_methods.to_string());
        let method_set = parse_methods(&methods_spec)?;
        let out = o.out.unwrap_or_else(|| match command {
            Command::Plot => PathBuf::from("plot.svg"),
            Command::Test => PathBuf::new(),
            c => PathBuf::from("out").join(c.name()),
        });
        if matches!(command, Command::Test | Command::Plot) && o.input.is_none() {
            return Err(Error::usage(format!("`{}` needs an input CSV", command.name())));
        }
        if o.threads == Some(0) {
            return Err(Error::usage("--threads must be at least 1"));
        }
        Ok(RunConfig {
            command,
            preset,
            master_seed: o.seed.unwrap_or(42),
            k,
            n_perm,
            grid_spec,
            grid,
            alpha,
            beta0,
            beta2,
            lambda,
            threshold: o.threshold.unwrap_or(2),
            out,
            threads: o.threads,
            methods: method_set.methods().map(|m| m.name().to_string()).collect(),
            method_set,
            input: o.input,
            add_one: o.add_one.unwrap_or(false),
        })
    }
}
