//! Job description: a TOML file with `[operator]`, `[tolerances]` and
//! `[tasks]` sections, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use krein_core::odeint::Tolerances;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Declaration order is execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Validate,
    Spectrum,
    Krein,
    Friedrichs,
    ClosedForm,
    VerifyAll,
}

/// A coefficient: one expression (times the identity) or a row-major grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Text(String),
    Grid(Vec<Vec<String>>),
}

impl Coefficient {
    pub fn text(s: &str) -> Self {
        Coefficient::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Number(f64),
    Text(String),
}

impl Endpoint {
    pub fn as_text(&self) -> String {
        match self {
            Endpoint::Number(v) => format!("{v:?}"),
            Endpoint::Text(t) => t.trim().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum IntervalSpec {
    Pair([Endpoint; 2]),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOperator {
    preset: Option<String>,
    order: Option<usize>,
    block_size: Option<usize>,
    interval: Option<IntervalSpec>,
    #[serde(default)]
    params: BTreeMap<String, Coefficient>,
    #[serde(rename = "W")]
    w: Option<Coefficient>,
    #[serde(rename = "Z", default)]
    z: BTreeMap<String, BTreeMap<String, Coefficient>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTolerances {
    rel: Option<f64>,
    abs: Option<f64>,
    lambda_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTasks {
    #[serde(default)]
    run: Vec<Task>,
    output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    operator: FileOperator,
    #[serde(default)]
    tolerances: FileTolerances,
    #[serde(default)]
    tasks: FileTasks,
}

/// Values given on the command line; `None` defers to the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub preset: Option<String>,
    pub order: Option<usize>,
    pub block_size: Option<usize>,
    pub interval: Option<String>,
    pub params: Vec<(String, String)>,
    pub tasks: Vec<Task>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub lambda_max: Option<f64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum OperatorSpec {
    Preset {
        name: String,
        order: Option<usize>,
        block_size: Option<usize>,
        interval: Option<(String, String)>,
        params: BTreeMap<String, Coefficient>,
    },
    Explicit {
        block_size: usize,
        order: usize,
        interval: (String, String),
        w: Coefficient,
        /// One-based `(j, k)`; missing blocks are zero.
        z: BTreeMap<(usize, usize), Coefficient>,
    },
}

#[derive(Debug, Clone)]
pub struct JobConfig {
    pub operator: OperatorSpec,
    /// Sorted and deduplicated.
    pub tasks: Vec<Task>,
    pub tolerances: Tolerances,
    pub lambda_max: f64,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

pub const DEFAULT_LAMBDA_MAX: f64 = 1000.0;

pub fn split_interval(text: &str) -> Result<(String, String), ConfigError> {
    match text.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() && !b.contains(',') => {
            Ok((a.trim().to_string(), b.trim().to_string()))
        }
        _ => err(format!("interval must be two comma-separated endpoints, got {text:?}")),
    }
}

pub fn parse_param(text: &str) -> Result<(String, String), String> {
    match text.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected NAME=EXPR, got {text:?}")),
    }
}

fn parse_index(s: &str, order: usize) -> Result<usize, ConfigError> {
    match s.parse::<usize>() {
        Ok(v) if (1..=order).contains(&v) => Ok(v),
        _ => err(format!("Z index {s:?} is outside 1..={order}")),
    }
}

impl JobConfig {
    pub fn load(path: Option<&Path>, flags: Overrides, default_tasks: &[Task]) -> Result<Self, ConfigError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text, flags, default_tasks).map_err(|e| ConfigError(format!("{}: {e}", p.display())))
            }
            None => Self::merge(FileConfig::default(), flags, default_tasks),
        }
    }

    pub fn from_toml(text: &str, flags: Overrides, default_tasks: &[Task]) -> Result<Self, ConfigError> {
        let file = toml::from_str::<FileConfig>(text).map_err(|e| ConfigError(e.to_string()))?;
        Self::merge(file, flags, default_tasks)
    }

    fn merge(file: FileConfig, flags: Overrides, default_tasks: &[Task]) -> Result<Self, ConfigError> {
        let op = file.operator;
        let interval = match flags.interval {
            Some(t) => Some(split_interval(&t)?),
            None => match op.interval {
                Some(IntervalSpec::Pair([a, b])) => Some((a.as_text(), b.as_text())),
                Some(IntervalSpec::Text(t)) => Some(split_interval(&t)?),
                None => None,
            },
        };
        let order = flags.order.or(op.order);
        let block_size = flags.block_size.or(op.block_size);
        let preset = flags.preset.or(op.preset);
        let mut params = op.params;
        for (k, v) in flags.params {
            params.insert(k, Coefficient::Text(v));
        }

        let explicit = op.w.is_some() || !op.z.is_empty();
        let operator = match (preset, explicit) {
            (Some(_), true) => return err("give either a preset or explicit W and Z entries, not both"),
            (None, false) => return err("no operator: give --preset or W and Z entries in [operator]"),
            (Some(name), false) => OperatorSpec::Preset {
                name,
                order,
                block_size,
                interval,
                params,
            },
            (None, true) => {
                if !params.is_empty() {
                    return err("params apply to presets only");
                }
                let order = order.ok_or_else(|| ConfigError("explicit operator needs order".into()))?;
                if order == 0 || order % 2 != 0 {
                    return err(format!("order must be a positive even number, got {order}"));
                }
                let interval = interval.ok_or_else(|| ConfigError("explicit operator needs interval".into()))?;
                let w = op.w.ok_or_else(|| ConfigError("explicit operator needs W".into()))?;
                let mut z = BTreeMap::new();
                for (j, row) in op.z {
                    let j = parse_index(&j, order)?;
                    for (k, c) in row {
                        z.insert((j, parse_index(&k, order)?), c);
                    }
                }
                OperatorSpec::Explicit {
                    block_size: block_size.unwrap_or(1),
                    order,
                    interval,
                    w,
                    z,
                }
            }
        };

        let mut tasks = if !flags.tasks.is_empty() {
            flags.tasks
        } else if !file.tasks.run.is_empty() {
            file.tasks.run
        } else {
            default_tasks.to_vec()
        };
        tasks.sort();
        tasks.dedup();

        let mut tolerances = Tolerances::default();
        if let Some(r) = flags.rel_tol.or(file.tolerances.rel) {
            tolerances.rel = r;
        }
        if let Some(a) = flags.abs_tol.or(file.tolerances.abs) {
            tolerances.abs = a;
        }
        for (name, v) in [("rel", tolerances.rel), ("abs", tolerances.abs)] {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} tolerance must be positive, got {v}"));
            }
        }
        let lambda_max = flags.lambda_max.or(file.tolerances.lambda_max).unwrap_or(DEFAULT_LAMBDA_MAX);
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return err(format!("lambda_max must be positive, got {lambda_max}"));
        }
        if flags.threads == Some(0) {
            return err("thread count must be at least 1");
        }
        Ok(JobConfig {
            operator,
            tasks,
            tolerances,
            lambda_max,
            threads: flags.threads,
            output: flags.output.or(file.tasks.output),
        })
    }
}
