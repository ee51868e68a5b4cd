use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use super::{CliError, EXIT_IO};

/// Settings resolved from flags over a `key = value` file over defaults.
pub(super) struct Settings {
    file: BTreeMap<String, String>,
    allowed: BTreeSet<&'static str>,
    resolved: BTreeMap<String, String>,
}

fn value_to_string(key: &str, v: &toml::Value) -> Result<String, CliError> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::usage(format!("config key `{key}` must be a scalar"))),
    }
}

impl Settings {
    pub(super) fn load(path: Option<&Path>, allowed: &[&'static str]) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError {
                code: EXIT_IO,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            for (k, v) in &table {
                file.insert(k.clone(), value_to_string(k, v)?);
            }
        }
        let settings = Self {
            file,
            allowed: allowed.iter().copied().collect(),
            resolved: BTreeMap::new(),
        };
        if let Some(k) = settings.file.keys().find(|k| !settings.allowed.contains(k.as_str())) {
            return Err(CliError::usage(format!("unknown config key `{k}`")));
        }
        Ok(settings)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("config key `{key}` has invalid value `{raw}`"))),
        }
    }

    pub(super) fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self.parse(key)?.unwrap_or(default),
        };
        self.resolved.insert(key.to_owned(), v.to_string());
        Ok(v)
    }

    pub(super) fn get_opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.parse(key)?,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_owned(), v.to_string());
        }
        Ok(v)
    }

    /// A boolean switch: present on the command line, or `true` in the file.
    pub(super) fn get_flag(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let v = flag || self.parse::<bool>(key)?.unwrap_or(false);
        self.resolved.insert(key.to_owned(), v.to_string());
        Ok(v)
    }

    pub(super) fn set(&mut self, key: &str, value: String) {
        self.resolved.insert(key.to_owned(), value);
    }

    pub(super) fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        Ok(self.resolved)
    }
}
