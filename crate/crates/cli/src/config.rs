//! Flat `key = value` configuration files. Command-line flags override file
//! values, which override built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(CliError::validation(format!(
                        "config line {} is not `key = value`: {raw:?}",
                        lineno + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig { map })
    }

    /// Resolve one setting: CLI flag, then file entry, then default.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.map.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|e| {
                CliError::validation(format!("config key `{key}` = {raw:?}: {e}"))
            }),
            None => Ok(default),
        }
    }

    /// Like [`Self::resolve`] but without a default.
    pub fn resolve_opt<T: FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.map.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::validation(format!("config key `{key}` = {raw:?}: {e}"))),
            None => Ok(None),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.map
    }
}

/// Comma-separated list arguments (`0.3,0.5,0.7`).
#[derive(Debug, Clone)]
pub struct NumList(pub Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let vals = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.is_empty() {
            return Err("empty list".into());
        }
        Ok(NumList(vals))
    }
}

/// Comma-separated integer lists (`50,200,800`).
#[derive(Debug, Clone)]
pub struct IntList(pub Vec<usize>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let vals = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.is_empty() {
            return Err("empty list".into());
        }
        Ok(IntList(vals))
    }
}
