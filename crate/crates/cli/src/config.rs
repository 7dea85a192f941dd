//! Layered run configuration: defaults, config file, environment, flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use datasetlens_core::RunConfig;
use serde_json::{Map, Value};

pub const ENV_PREFIX: &str = "DATASETLENS_";

/// Input paths that resolve against the config file's directory.
const PATH_KEYS: [&str; 6] = ["dataset", "captions", "country_table", "vocabulary", "synonyms", "features"];

/// Parses a TOML or JSON config file into a JSON value.
pub fn read_config_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        _ => {
            let t: toml::Value = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            serde_json::to_value(t)?
        }
    };
    if !value.is_object() {
        bail!("{}: config must be a table", path.display());
    }
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(resolve_paths(value, base))
}

fn resolve_paths(mut value: Value, base: &Path) -> Value {
    let join = |v: &mut Value| {
        if let Value::String(s) = v {
            let p = PathBuf::from(&*s);
            if p.is_relative() {
                *s = base.join(p).to_string_lossy().into_owned();
            }
        }
    };
    if let Value::Object(map) = &mut value {
        for key in PATH_KEYS {
            match map.get_mut(key) {
                Some(Value::Array(items)) => items.iter_mut().for_each(join),
                Some(v) => join(v),
                None => {}
            }
        }
    }
    value
}

/// Recursively overlays `top` onto `base`; tables merge, everything else replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Scalar text as JSON when it parses, else as a string.
fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `a.b.c` to `raw`. The path must exist in `defaults` so typos fail loudly.
pub fn set_path(target: &mut Value, defaults: &Value, path: &str, raw: &str) -> Result<()> {
    let keys: Vec<&str> = path.split('.').filter(|k| !k.is_empty()).collect();
    if keys.is_empty() {
        bail!("empty override key");
    }
    let mut probe = defaults;
    for k in &keys {
        probe = match probe.get(*k) {
            Some(v) => v,
            None if probe.is_object() && probe.as_object().is_some_and(Map::is_empty) => break,
            None => bail!("unknown config key {path:?}"),
        };
    }
    let mut slot = target;
    for k in &keys[..keys.len() - 1] {
        if !slot.get(*k).is_some_and(Value::is_object) {
            slot[*k] = Value::Object(Map::new());
        }
        slot = &mut slot[*k];
    }
    slot[keys[keys.len() - 1]] = parse_scalar(raw);
    Ok(())
}

/// `DATASETLENS_PARAMS__OBJECT__DUPLICATE_IOU=0.9` style overrides. Plain
/// top-level variables are handled by the flag parser.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            rest.contains("__").then(|| (rest.to_lowercase().replace("__", "."), v))
        })
        .collect();
    out.sort();
    out
}

/// Top-level settings given on the command line.
#[derive(Clone, Debug, Default)]
pub struct FlagOverrides {
    pub dataset: Option<PathBuf>,
    pub format: Option<String>,
    pub captions: Option<PathBuf>,
    pub features: Vec<PathBuf>,
    pub country_table: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub sets: Vec<String>,
}

fn path_value(p: &Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

/// Builds the effective configuration.
pub fn build(
    config_file: Option<&Path>,
    flags: &FlagOverrides,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<RunConfig> {
    let defaults = serde_json::to_value(RunConfig::default())?;
    let mut value = defaults.clone();
    if let Some(path) = config_file {
        merge(&mut value, read_config_file(path)?);
    }
    for (k, v) in env_overrides(env) {
        set_path(&mut value, &defaults, &k, &v).with_context(|| format!("environment override {ENV_PREFIX}{}", k.to_uppercase().replace('.', "__")))?;
    }
    for s in &flags.sets {
        let (k, v) = s.split_once('=').with_context(|| format!("--set expects key=value, got {s:?}"))?;
        set_path(&mut value, &defaults, k.trim(), v.trim())?;
    }
    let top = [
        ("dataset", flags.dataset.as_deref().map(path_value)),
        ("format", flags.format.clone().map(Value::String)),
        ("captions", flags.captions.as_deref().map(path_value)),
        ("country_table", flags.country_table.as_deref().map(path_value)),
        ("vocabulary", flags.vocabulary.as_deref().map(path_value)),
        ("synonyms", flags.synonyms.as_deref().map(path_value)),
        ("out_dir", flags.out_dir.as_deref().map(path_value)),
    ];
    for (k, v) in top {
        if let Some(v) = v {
            value[k] = v;
        }
    }
    if !flags.features.is_empty() {
        value["features"] = Value::Array(flags.features.iter().map(|p| path_value(p)).collect());
    }
    if let Some(seed) = flags.seed {
        value["params"]["seed"] = Value::from(seed);
    }
    serde_json::from_value(value).context("invalid configuration")
}
