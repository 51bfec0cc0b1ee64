//! `key = value` configuration files. Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Keys accepted in a configuration file.
pub const KEYS: &[&str] = &[
    "seed",
    "signal",
    "out",
    "family",
    "mode",
    "cv",
    "budget",
    "repeats",
    "l2",
    "trees",
    "depth",
    "min_leaf",
    "max_features",
    "class_weight",
    "prominence_frac",
    "min_separation_s",
    "patients",
    "videos",
    "format",
    "view",
    "components",
    "counts",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Parses one `key = value` pair per line. Blank lines and lines starting with
    /// `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "config line {}: expected `key = value`",
                    n + 1
                )));
            };
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(CliError::Config(format!("config line {}: unknown key `{k}`", n + 1)));
            }
            if values.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("config line {}: duplicate key `{k}`", n + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag value if given, else the file value, parsed as `V`.
    pub fn resolve<V>(&self, key: &str, flag: Option<&str>) -> Result<Option<V>, CliError>
    where
        V: FromStr,
        V::Err: std::fmt::Display,
    {
        debug_assert!(KEYS.contains(&key), "undocumented key {key}");
        match flag.or(self.values.get(key).map(String::as_str)) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("invalid value `{raw}` for {key}: {e}"))),
        }
    }

    pub fn resolve_or<V>(&self, key: &str, flag: Option<&str>, default: V) -> Result<V, CliError>
    where
        V: FromStr,
        V::Err: std::fmt::Display,
    {
        Ok(self.resolve(key, flag)?.unwrap_or(default))
    }
}

/// `on`/`off` switch used for toggles such as class weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Switch(pub bool);

impl FromStr for Switch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "on" | "true" | "yes" | "1" => Ok(Switch(true)),
            "off" | "false" | "no" | "0" => Ok(Switch(false)),
            _ => Err("expected on or off".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let c = Config::parse("# run settings\nseed = 7\nsignal=angle\n").unwrap();
        assert_eq!(c.resolve_or::<u64>("seed", None, 0).unwrap(), 7);
        assert_eq!(c.resolve_or::<u64>("seed", Some("3"), 0).unwrap(), 3);
        assert_eq!(c.resolve_or::<u64>("budget", None, 50).unwrap(), 50);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Config::parse("colour = red").is_err());
        assert!(Config::parse("seed 4").is_err());
        assert!(Config::parse("seed = 1\nseed = 2").is_err());
        let c = Config::parse("seed = many").unwrap();
        assert!(matches!(c.resolve::<u64>("seed", None), Err(CliError::Config(_))));
    }
}
