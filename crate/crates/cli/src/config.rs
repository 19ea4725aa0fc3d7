//! Resolution of command parameters: defaults, then the config file
//! section named after the subcommand, then flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Reads `[section]` of a TOML file as JSON. A missing section is empty.
pub fn file_section(path: &Path, section: &str) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let table: toml::Table = toml::from_str(&text)
        .with_context(|| format!("malformed config file {}", path.display()))?;
    for key in table.keys() {
        if !is_section(key) {
            bail!("unknown section [{key}] in {}", path.display());
        }
    }
    match table.get(section) {
        None => Ok(Map::new()),
        Some(toml::Value::Table(t)) => match serde_json::to_value(t)? {
            Value::Object(m) => Ok(m),
            _ => unreachable!("a TOML table converts to a JSON object"),
        },
        Some(_) => bail!("[{section}] in {} must be a table", path.display()),
    }
}

fn is_section(key: &str) -> bool {
    crate::COMMANDS.contains(&key)
}

/// Overlays the flags that were given onto the file values and fills the
/// rest with defaults. Keys are the snake_case field names; a flag left
/// out serializes as `null`.
pub fn resolve<P, F>(file: Map<String, Value>, flags: &F) -> Result<P>
where
    P: Serialize + DeserializeOwned + Default,
    F: Serialize,
{
    let mut merged = match serde_json::to_value(P::default())? {
        Value::Object(m) => m,
        _ => bail!("parameters must serialize as an object"),
    };
    for (k, v) in file {
        if !merged.contains_key(&k) {
            bail!("unknown config key `{k}`");
        }
        merged.insert(k, v);
    }
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).context("invalid parameter value")
}
