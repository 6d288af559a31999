//! Layered configuration: built-in defaults, then the `--config` file, then
//! command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Parsed `--config` file. Top-level keys: `seed`, `mode`, `qa`,
/// `classifier`, `grid`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    root: Map<String, Value>,
}

const TOP_LEVEL: [&str; 5] = ["seed", "mode", "qa", "classifier", "grid"];

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))?;
        let Value::Object(root) = value else {
            bail!("config file {} must hold a JSON object", path.display());
        };
        if let Some(k) = root.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            bail!("unknown key {k:?} in {}; expected one of {TOP_LEVEL:?}", path.display());
        }
        Ok(ConfigFile { root })
    }

    pub fn seed(&self) -> Result<Option<u64>> {
        self.root
            .get("seed")
            .map(|v| v.as_u64().context("config seed must be a non-negative integer"))
            .transpose()
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        self.root
            .get(key)
            .map(|v| v.as_str().map(str::to_string).with_context(|| format!("config {key} must be a string")))
            .transpose()
    }

    pub fn section(&self, key: &str) -> Option<&Value> {
        self.root.get(key)
    }
}

/// `default`, overlaid with the file section, overlaid with the flags.
/// Keys absent from the defaults are rejected.
pub fn layered<T: Serialize + DeserializeOwned>(
    default: &T,
    section: Option<&Value>,
    flags: Map<String, Value>,
    what: &str,
) -> Result<T> {
    let mut value = serde_json::to_value(default)?;
    let target = value.as_object_mut().expect("config types serialize to objects");
    if let Some(section) = section {
        let Value::Object(fields) = section else {
            bail!("config section {what:?} must be an object");
        };
        overlay(target, fields, what)?;
    }
    overlay(target, &flags, what)?;
    serde_json::from_value(value).with_context(|| format!("invalid {what} configuration"))
}

fn overlay(target: &mut Map<String, Value>, fields: &Map<String, Value>, what: &str) -> Result<()> {
    for (k, v) in fields {
        match target.get_mut(k) {
            Some(slot) => *slot = v.clone(),
            None => bail!("unknown {what} setting {k:?}"),
        }
    }
    Ok(())
}

/// Collects the flags that were actually given.
#[derive(Default)]
pub struct Flags(Map<String, Value>);

impl Flags {
    pub fn set<V: Serialize>(mut self, key: &str, value: Option<V>) -> Self {
        if let Some(v) = value {
            self.0.insert(key.into(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }

    pub fn into_map(self) -> Map<String, Value> {
        self.0
    }
}
