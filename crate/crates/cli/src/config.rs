//! Flat `key = value` files. `#` starts a comment; repeated keys
//! accumulate.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct KeyValues {
    values: BTreeMap<String, Vec<String>>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path, allowed: &[&str]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| CliError::Parse {
                path: path.into(),
                reason: format!("line {}: {reason}", i + 1),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let key = key.trim().replace('-', "_");
            if !allowed.contains(&key.as_str()) {
                return Err(bad(format!("unknown key {key:?}")));
            }
            values.entry(key).or_default().push(value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text, path, allowed)
    }

    /// Last occurrence wins.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    /// Every occurrence, with comma-separated lists split.
    pub fn all(&self, key: &str) -> Vec<String> {
        self.values
            .get(key)
            .into_iter()
            .flatten()
            .flat_map(|v| v.split(','))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))
            })
            .transpose()
    }
}
