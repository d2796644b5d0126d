//! Optional `key = value` configuration file. Flags given on the command
//! line override entries here.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, allowed)
    }

    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", i + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key '{key}'",
                    i + 1
                )));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Flag value if given, else the config entry, else `None`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config: invalid value '{v}' for {key}"))),
        }
    }

    pub fn resolve_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.resolve(flag, key)?.unwrap_or(default))
    }

    pub fn flag_set(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.resolve::<bool>(None, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let cfg = ConfigFile::parse("beta = 18\n# comment\nn_max=50 # trailing\n", &["beta", "n-max"]).unwrap();
        assert_eq!(cfg.resolve_or(None, "beta", 1.0).unwrap(), 18.0);
        assert_eq!(cfg.resolve_or(Some(20.0), "beta", 1.0).unwrap(), 20.0);
        assert_eq!(cfg.resolve_or::<usize>(None, "n-max", 1).unwrap(), 50);
        assert_eq!(cfg.resolve_or::<usize>(None, "dim", 7).unwrap(), 7);
    }

    #[test]
    fn rejects_unknown_keys_and_garbage() {
        assert!(ConfigFile::parse("colour = red", &["beta"]).is_err());
        assert!(ConfigFile::parse("beta", &["beta"]).is_err());
        let cfg = ConfigFile::parse("beta = twenty", &["beta"]).unwrap();
        assert!(cfg.resolve::<f64>(None, "beta").is_err());
    }
}
