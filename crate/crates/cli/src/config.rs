//! Flat `key=value` run configuration.
//!
//! Resolution order, later wins: command defaults, config file,
//! `GEOLAB_THREADS`, command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Keys accepted by every command.
pub const COMMON_KEYS: &[&str] = &["group", "seed", "threads", "output_dir", "budget"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parse a config file. Blank lines and lines starting with `#` are skipped;
/// keys outside `allowed` and repeated keys are errors.
pub fn parse_file(text: &str, allowed: &[&str]) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !allowed.contains(&k) {
            return Err(ConfigError(format!("line {}: unknown key {k:?}", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key {k:?}", i + 1)));
        }
    }
    Ok(out)
}

/// The resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Resolved {
    pub map: BTreeMap<String, String>,
}

impl Resolved {
    pub fn layer(&mut self, entries: impl IntoIterator<Item = (String, String)>) {
        self.map.extend(entries);
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.map.insert(key.to_string(), value.into());
    }

    pub fn str(&self, key: &str) -> Result<&str, ConfigError> {
        self.map.get(key).map(String::as_str).ok_or_else(|| ConfigError(format!("missing key {key:?}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let s = self.str(key)?;
        s.parse().map_err(|_| ConfigError(format!("bad value for {key}: {s:?}")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let s = self.str(key)?;
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| ConfigError(format!("bad value in {key}: {t:?}"))))
            .collect()
    }

    pub fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        match self.str(key)? {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            s => Err(ConfigError(format!("bad value for {key}: {s:?}"))),
        }
    }
}
