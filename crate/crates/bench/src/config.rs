//! Experiment manifests: a TOML file with flat dotted keys, overridable
//! from the command line, validated into a typed configuration.
//!
//! Recognized keys:
//!
//! | key                  | meaning                                   | default    |
//! |----------------------|-------------------------------------------|------------|
//! | `model.n`            | fine-node count `N`                       | required   |
//! | `model.k_communities`| community count `K`                       | required   |
//! | `model.alpha`        | intra-rate factor (`p = alpha * rho`)     | required   |
//! | `model.beta`         | inter-rate factor (`q = beta * rho`)      | required   |
//! | `model.rho`          | density scale                             | `0.001`    |
//! | `coarse.l`           | coarse-node count, or sweep `"a:b:step"`  | required   |
//! | `coarse.coverage`    | coverage `k`, or sweep `"a:b:step"`       | required   |
//! | `coarse.nu`          | overlap depth `nu`                        | required   |
//! | `coarse.tau`         | binarization threshold parameter          | `0.25`     |
//! | `prior.kind`         | `"uniform"` or `"custom"`                 | `uniform`  |
//! | `prior.weights`      | probability vector (custom prior only)    | —          |
//! | `mc.trials`          | Monte Carlo trials per sweep value        | `100`      |
//! | `mc.seed`            | master seed                               | `0`        |
//! | `caps.exact_dp`      | largest pair count solved exactly         | `4096`     |
//! | `output.dir`         | directory for emitted files               | `"out"`    |
//!
//! At most one of `coarse.l` / `coarse.coverage` may be a sweep.

use std::path::{Path, PathBuf};

use coarse_sbm::extended::PriorSpec;
use coarse_sbm::{Error, Result};

/// One integer-valued parameter that is either fixed or swept over an
/// inclusive range with a positive step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepSpec {
    Single(u64),
    Range { start: u64, end: u64, step: u64 },
}

impl SweepSpec {
    pub fn values(&self) -> Vec<u64> {
        match *self {
            SweepSpec::Single(v) => vec![v],
            SweepSpec::Range { start, end, step } => {
                (start..=end).step_by(step as usize).collect()
            }
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, SweepSpec::Range { .. })
    }
}

/// A validated experiment manifest.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k_communities: u32,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub l: SweepSpec,
    pub coverage: SweepSpec,
    pub nu: u32,
    pub tau: f64,
    pub prior: PriorSpec,
    pub trials: u64,
    pub seed: u64,
    pub exact_cap: usize,
    pub out_dir: PathBuf,
}

/// Which parameter a config sweeps, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    None,
    L,
    Coverage,
}

impl ExperimentConfig {
    pub fn p(&self) -> f64 {
        self.alpha * self.rho
    }

    pub fn q(&self) -> f64 {
        self.beta * self.rho
    }

    pub fn swept(&self) -> SweptParam {
        if self.l.is_sweep() {
            SweptParam::L
        } else if self.coverage.is_sweep() {
            SweptParam::Coverage
        } else {
            SweptParam::None
        }
    }

    /// The sweep as (l, coverage) pairs, a single pair when nothing sweeps.
    pub fn sweep_points(&self) -> Vec<(u64, u32)> {
        let ls = self.l.values();
        let ks = self.coverage.values();
        match self.swept() {
            SweptParam::L => ls.iter().map(|&l| (l, ks[0] as u32)).collect(),
            _ => ks.iter().map(|&k| (ls[0], k as u32)).collect(),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "model.n",
    "model.k_communities",
    "model.alpha",
    "model.beta",
    "model.rho",
    "coarse.l",
    "coarse.coverage",
    "coarse.nu",
    "coarse.tau",
    "prior.kind",
    "prior.weights",
    "mc.trials",
    "mc.seed",
    "caps.exact_dp",
    "output.dir",
];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Flattens a parsed TOML document into dotted keys.
fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match value {
        toml::Value::Table(table) => {
            for (k, v) in table {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

/// Parses one `key=value` command-line override. The value is parsed with
/// TOML syntax; bare words fall back to strings.
fn parse_override(spec: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{spec}' is not of the form key=value")))?;
    let wrapped = format!("v = {raw}");
    let value = match wrapped.parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.trim().to_string(), value))
}

struct KeyBag {
    entries: Vec<(String, toml::Value)>,
}

impl KeyBag {
    fn get(&self, key: &str) -> Option<&toml::Value> {
        // Later entries (overrides) win.
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }

    fn require(&self, key: &str) -> Result<&toml::Value> {
        self.get(key)
            .ok_or_else(|| config_err(format!("missing required config key '{key}'")))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_u64(key, v),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_f64(key, v),
        }
    }
}

fn as_u64(key: &str, value: &toml::Value) -> Result<u64> {
    match value {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        other => Err(config_err(format!(
            "key '{key}' must be a nonnegative integer, got {other}"
        ))),
    }
}

fn as_f64(key: &str, value: &toml::Value) -> Result<f64> {
    match value {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(config_err(format!(
            "key '{key}' must be a number, got {other}"
        ))),
    }
}

fn as_sweep(key: &str, value: &toml::Value) -> Result<SweepSpec> {
    match value {
        toml::Value::Integer(i) if *i > 0 => Ok(SweepSpec::Single(*i as u64)),
        toml::Value::String(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(config_err(format!(
                    "key '{key}': sweep syntax is \"start:end:step\", got \"{s}\""
                )));
            }
            let nums: Vec<u64> = parts
                .iter()
                .map(|p| {
                    p.trim().parse::<u64>().map_err(|_| {
                        config_err(format!("key '{key}': '{p}' is not a positive integer"))
                    })
                })
                .collect::<Result<_>>()?;
            let (start, end, step) = (nums[0], nums[1], nums[2]);
            if step == 0 || start == 0 || end < start {
                return Err(config_err(format!(
                    "key '{key}': sweep \"{s}\" needs 0 < start <= end and step >= 1"
                )));
            }
            Ok(SweepSpec::Range { start, end, step })
        }
        other => Err(config_err(format!(
            "key '{key}' must be a positive integer or a \"start:end:step\" string, got {other}"
        ))),
    }
}

/// Loads and validates a manifest from a TOML file plus `key=value`
/// overrides (overrides win).
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config '{}': {e}", path.display())))?;
    let document: toml::Table = text
        .parse()
        .map_err(|e| config_err(format!("config '{}' is not valid TOML: {e}", path.display())))?;

    let mut entries = Vec::new();
    flatten("", &toml::Value::Table(document), &mut entries);
    for spec in overrides {
        entries.push(parse_override(spec)?);
    }
    for (key, _) in &entries {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(config_err(format!(
                "unknown config key '{key}' (known keys: {})",
                KNOWN_KEYS.join(", ")
            )));
        }
    }
    let bag = KeyBag { entries };

    let n = as_u64("model.n", bag.require("model.n")?)? as usize;
    let k_communities = as_u64("model.k_communities", bag.require("model.k_communities")?)? as u32;
    let alpha = as_f64("model.alpha", bag.require("model.alpha")?)?;
    let beta = as_f64("model.beta", bag.require("model.beta")?)?;
    let rho = bag.f64_or("model.rho", 0.001)?;
    let l = as_sweep("coarse.l", bag.require("coarse.l")?)?;
    let coverage = as_sweep("coarse.coverage", bag.require("coarse.coverage")?)?;
    let nu = as_u64("coarse.nu", bag.require("coarse.nu")?)? as u32;
    let tau = bag.f64_or("coarse.tau", 0.25)?;
    let trials = bag.u64_or("mc.trials", 100)?;
    let seed = bag.u64_or("mc.seed", 0)?;
    let exact_cap = bag.u64_or("caps.exact_dp", 4096)? as usize;
    let out_dir = PathBuf::from(match bag.get("output.dir") {
        None => "out".to_string(),
        Some(toml::Value::String(s)) => s.clone(),
        Some(other) => {
            return Err(config_err(format!(
                "key 'output.dir' must be a string, got {other}"
            )))
        }
    });

    let prior = match bag.get("prior.kind") {
        None => PriorSpec::Uniform,
        Some(toml::Value::String(kind)) => match kind.as_str() {
            "uniform" => PriorSpec::Uniform,
            "custom" => {
                let weights = match bag.require("prior.weights")? {
                    toml::Value::Array(items) => items
                        .iter()
                        .map(|v| as_f64("prior.weights", v))
                        .collect::<Result<Vec<f64>>>()?,
                    other => {
                        return Err(config_err(format!(
                            "key 'prior.weights' must be an array of numbers, got {other}"
                        )))
                    }
                };
                PriorSpec::Custom(weights)
            }
            other => {
                return Err(config_err(format!(
                    "key 'prior.kind' must be \"uniform\" or \"custom\", got \"{other}\""
                )))
            }
        },
        Some(other) => {
            return Err(config_err(format!(
                "key 'prior.kind' must be a string, got {other}"
            )))
        }
    };

    if l.is_sweep() && coverage.is_sweep() {
        return Err(config_err(
            "at most one of coarse.l and coarse.coverage may be swept",
        ));
    }
    for (name, value) in [
        ("model.alpha", alpha),
        ("model.beta", beta),
        ("model.rho", rho),
        ("coarse.tau", tau),
    ] {
        if !value.is_finite() || value < 0.0 {
            return Err(config_err(format!(
                "key '{name}' must be finite and nonnegative, got {value}"
            )));
        }
    }
    if n == 0 || k_communities == 0 || nu == 0 {
        return Err(config_err(
            "model.n, model.k_communities, and coarse.nu must be positive",
        ));
    }
    if nu > k_communities {
        return Err(config_err(format!(
            "coarse.nu = {nu} exceeds model.k_communities = {k_communities}"
        )));
    }
    let p = alpha * rho;
    let q = beta * rho;
    for (name, value) in [("p = alpha*rho", p), ("q = beta*rho", q)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(config_err(format!(
                "{name} = {value} must lie in [0, 1]; adjust model.alpha/model.beta/model.rho"
            )));
        }
    }

    Ok(ExperimentConfig {
        n,
        k_communities,
        alpha,
        beta,
        rho,
        l,
        coverage,
        nu,
        tau,
        prior,
        trials,
        seed,
        exact_cap,
        out_dir,
    })
}
