//! Configuration file schema, `--set` overrides and key checking.
//!
//! The file is TOML with one table per module. Every key has a default, so
//! an empty file is valid. Overrides are `section.key=value`; a bare `key`
//! is resolved to the first section, in `Mode::sections` order, that the
//! current mode reads and that has the key.

use std::path::Path;

use petc_core::PlatoonConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    /// `linear` or `platoon`.
    pub kind: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// Young weight on the cross term `2 x^T P B K e`.
    pub theta: f64,
    /// Decoupled copies of the linear plant, one per agent.
    pub agents: usize,
    /// `path` or `complete`, for distributed policies.
    pub topology: String,
    pub x0: Vec<f64>,
    /// Platoon initial-condition index (uses `platoon.seed`).
    pub trial: usize,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            kind: "linear".into(),
            a: vec![vec![1.0]],
            b: vec![vec![1.0]],
            k: vec![vec![-2.0]],
            q: vec![vec![1.0]],
            theta: 2.0,
            agents: 1,
            topology: "path".into(),
            x0: vec![1.0],
            trial: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    /// `derivative`, `function`, `barrier`, `dynamic`, `distributed`,
    /// `naive` or `time-regularized`.
    pub kind: String,
    pub sigma: f64,
    pub c_beta: f64,
    pub rho_a: f64,
    pub rho_z: f64,
    /// `average` or `local`.
    pub init: String,
    pub tau_d: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            kind: "barrier".into(),
            sigma: 0.25,
            c_beta: 1.0,
            rho_a: 10.0,
            rho_z: 20.0,
            init: "average".into(),
            tau_d: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecSection {
    /// `exponential` or `online`.
    pub kind: String,
    pub r: f64,
    pub theta: f64,
    pub c_iota: f64,
}

impl Default for SpecSection {
    fn default() -> Self {
        Self { kind: "exponential".into(), r: 0.25, theta: 1.0, c_iota: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    pub step_h: f64,
    pub event_tol: f64,
    pub sample_stride: usize,
    pub max_events: usize,
    pub divergence_bound: f64,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            step_h: 1e-3,
            event_tol: 1e-9,
            sample_stride: 1,
            max_events: 1_000_000,
            divergence_bound: 1e12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusSection {
    /// Edge-list file (`i j` per line, 1-indexed); empty uses `topology`.
    pub edges: String,
    pub topology: String,
    pub n_agents: usize,
    /// `W(t) = w0 exp(-rate t)`.
    pub w0: Vec<f64>,
    pub rate: f64,
    pub rho: f64,
    /// Initial estimates; empty starts at the average of `w0`.
    pub y0: Vec<f64>,
    pub horizon: f64,
    pub h: f64,
    pub stride: usize,
}

impl Default for ConsensusSection {
    fn default() -> Self {
        Self {
            edges: String::new(),
            topology: "path".into(),
            n_agents: 2,
            w0: vec![1.0, 0.0],
            rate: 1.0,
            rho: 1.0,
            y0: Vec::new(),
            horizon: 10.0,
            h: 1e-3,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub policy: PolicySection,
    pub spec: SpecSection,
    pub sim: SimSection,
    pub platoon: PlatoonConfig,
    pub consensus: ConsensusSection,
}

/// Sections each mode reads, in bare-key resolution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Miet,
    Benchmark,
    ConsensusCheck,
}

impl Mode {
    fn sections(self) -> &'static [&'static str] {
        match self {
            Mode::Simulate => &["system", "policy", "spec", "sim", "platoon"],
            Mode::Miet => &["system", "policy", "spec"],
            Mode::Benchmark => &["platoon"],
            Mode::ConsensusCheck => &["consensus"],
        }
    }
}

/// Defaults as a table; also the schema for key and type checks.
fn schema() -> Table {
    Table::try_from(RunConfig::default()).expect("defaults serialize")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Array(items) => match items.first() {
            Some(Value::Array(_)) => "array of float arrays".into(),
            Some(_) => "array of floats".into(),
            None => "array".into(),
        },
        other => type_name(other).into(),
    }
}

fn nearest<'a>(key: &str, candidates: impl Iterator<Item = &'a String>) -> Option<&'a String> {
    candidates
        .map(|c| (strsim::jaro_winkler(key, c), c))
        .filter(|(s, _)| *s > 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

fn unknown(path: &str, key: &str, known: &Table) -> CliError {
    let hint = nearest(key, known.keys()).map_or(String::new(), |k| format!("; did you mean `{}`?", join(path, k)));
    CliError::Config(format!("unknown key `{}`{hint}", join(path, key)))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Checks `value` against the default `proto`, widening integers to floats
/// where a float is expected.
fn coerce(path: &str, proto: &Value, value: &mut Value) -> Result<(), CliError> {
    let mismatch = |v: &Value| {
        CliError::Config(format!("`{path}`: expected {}, got {} `{v}`", describe(proto), type_name(v)))
    };
    match (proto, &mut *value) {
        (Value::Float(_), Value::Integer(i)) => *value = Value::Float(*i as f64),
        (Value::Float(_), Value::Float(_)) | (Value::String(_), Value::String(_)) => {}
        (Value::Integer(_), Value::Integer(i)) if *i >= 0 => {}
        (Value::Integer(_), Value::Integer(_)) => {
            return Err(CliError::Config(format!("`{path}`: expected a nonnegative integer, got `{value}`")));
        }
        (Value::Array(p), Value::Array(items)) => {
            // Elements follow the first default element; empty defaults are float vectors.
            let elem = p.first().cloned().unwrap_or(Value::Float(0.0));
            let elem = match elem {
                Value::Array(inner) if inner.is_empty() => Value::Array(vec![Value::Float(0.0)]),
                e => e,
            };
            for (i, item) in items.iter_mut().enumerate() {
                coerce(&format!("{path}[{i}]"), &elem, item)?;
            }
        }
        (Value::Table(p), Value::Table(t)) => check_table(path, p, t)?,
        (_, v) => return Err(mismatch(v)),
    }
    Ok(())
}

fn check_table(path: &str, proto: &Table, t: &mut Table) -> Result<(), CliError> {
    for (k, v) in t.iter_mut() {
        let p = proto.get(k).ok_or_else(|| unknown(path, k, proto))?;
        coerce(&join(path, k), p, v)?;
    }
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Resolves `key` to `(section, field)`.
fn resolve(key: &str, mode: Mode, schema: &Table) -> Result<(String, String), CliError> {
    if let Some((section, field)) = key.split_once('.') {
        let sec = match schema.get(section) {
            Some(Value::Table(s)) => s,
            _ => return Err(unknown("", section, schema)),
        };
        if !sec.contains_key(field) {
            return Err(unknown(section, field, sec));
        }
        return Ok((section.into(), field.into()));
    }
    let hits: Vec<&str> = mode
        .sections()
        .iter()
        .copied()
        .filter(|s| matches!(schema.get(*s), Some(Value::Table(t)) if t.contains_key(key)))
        .collect();
    match hits.first() {
        Some(s) => Ok((s.to_string(), key.into())),
        None => {
            let all: Vec<String> = mode
                .sections()
                .iter()
                .filter_map(|s| match schema.get(*s) {
                    Some(Value::Table(t)) => Some(t.keys().map(move |k| format!("{s}.{k}"))),
                    _ => None,
                })
                .flatten()
                .collect();
            let hint = nearest(key, all.iter()).map_or(String::new(), |k| format!("; did you mean `{k}`?"));
            Err(CliError::Config(format!("unknown key `{key}`{hint}")))
        }
    }
}

/// Reads the file (if any), applies `overrides` and `seed`, and checks every
/// key and type against the schema.
pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>, mode: Mode) -> Result<RunConfig, CliError> {
    let schema = schema();
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<Table>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    check_table("", &schema, &mut table)?;
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{o}` must have the form key=value")))?;
        let (section, field) = resolve(key.trim(), mode, &schema)?;
        let mut value = parse_value(raw.trim());
        let proto = &schema[section.as_str()][field.as_str()];
        coerce(&format!("{section}.{field}"), proto, &mut value)?;
        let sec = table.entry(section).or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(t) = sec {
            t.insert(field, value);
        }
    }
    let mut cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    if let Some(s) = seed {
        cfg.sim.seed = s;
        cfg.platoon.seed = s;
    }
    Ok(cfg)
}

impl RunConfig {
    /// The effective configuration, as echoed next to the artifacts.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
