//! Run configuration: a JSON tree with the top-level keys `domain`,
//! `certificate`, `sim`, `command` and `output`, plus `--a.b.c value`
//! overrides.

use bcp_core::domain::{Beta, DomainSpec};
use bcp_core::mc::SimConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub certificate: CertificateOverrides,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub command: CommandConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Certificate parameters that replace the estimated ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateOverrides {
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub beta: Option<Beta>,
    pub gamma: Option<f64>,
    pub v0: Option<f64>,
}

/// Settings of the individual subcommands. Time grids and `eps` refer to
/// the domain normalised to `T = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommandConfig {
    pub eps: Vec<f64>,
    pub bins: usize,
    /// Initial grid size for the Lipschitz estimate.
    pub k_grid_points: usize,
    pub gamma_t_grid: Option<Vec<f64>>,
    pub gamma_v_grid: Option<Vec<f64>>,
    pub gamma_samples: u64,
    /// Seed of the γ estimate; `sim.seed` when absent.
    pub gamma_seed: Option<u64>,
}

impl Default for CommandConfig {
    fn default() -> Self {
        CommandConfig {
            eps: vec![0.005, 0.01, 0.02],
            bins: 50,
            k_grid_points: bcp_core::domain::DEFAULT_K_GRID,
            gamma_t_grid: None,
            gamma_v_grid: None,
            gamma_samples: 100_000,
            gamma_seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving `<command>.json` and, for tables,
    /// `<command>.csv`. Reports always go to stdout as well.
    pub dir: Option<String>,
}

/// Parses a config text and applies overrides given as `(key.path, value)`.
/// Values are read as JSON when they parse as such and as strings
/// otherwise.
pub fn parse_config(text: &str, source: &str, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
    if overrides.is_empty() {
        let mut de = serde_json::Deserializer::from_str(text);
        return serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let inner = e.inner();
            CliError::Input(format!(
                "{source}:{}:{}: at `{}`: {}",
                inner.line(),
                inner.column(),
                e.path(),
                strip_position(&inner.to_string())
            ))
        });
    }
    let mut tree: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("{source}:{}:{}: {}", e.line(), e.column(), strip_position(&e.to_string()))))?;
    for (key, raw) in overrides {
        set_path(&mut tree, key, parse_value(raw))?;
    }
    serde_path_to_error::deserialize(tree)
        .map_err(|e| CliError::Input(format!("{source} (with overrides): at `{}`: {}", e.path(), e.inner())))
}

fn strip_position(msg: &str) -> &str {
    msg.find(" at line ").map_or(msg, |i| &msg[..i])
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(tree: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Input(format!("malformed override key `{key}`")));
    }
    let mut node = tree;
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            let prefix = parts[..i].join(".");
            return Err(CliError::Input(format!("override `{key}`: `{prefix}` is not an object")));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override keys have at least one part")
}

/// Splits `--a.b value` and `--a.b=value` arguments into pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(CliError::Input(format!("unexpected argument `{arg}`; overrides look like --sim.seed 7")));
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Input(format!("override `--{key}` needs a value")))?;
                out.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}
