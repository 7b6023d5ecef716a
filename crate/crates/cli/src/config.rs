//! Flat `key=value` config files for `simulate`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const SIMULATE_KEYS: &[&str] = &[
    "d",
    "gamma",
    "pair",
    "twopair",
    "ratio",
    "e-ghz",
    "setting",
    "trials",
    "seed",
    "chunk-size",
    "workers",
    "arrival-weights",
];

pub fn parse(text: &str, allowed: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", lineno + 1);
        };
        let key = key.trim().replace('_', "-");
        if !allowed.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", lineno + 1);
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: &Path, allowed: &[&str]) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse(&text, allowed)
}

/// Looks up `key` and parses it.
pub fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| anyhow::anyhow!("config key {key}: {e}"))
        })
        .transpose()
}
