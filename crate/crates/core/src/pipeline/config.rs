//! Flat `key = value` configuration with typed accessors.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Keys understood by the pipeline. Anything else is rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "epsilon",
    "delta",
    "holders",
    "seed",
    "test_fraction",
    "detpr_k",
    "noise_bin_means",
    "synthetic_rows",
    "classes",
    "log1p",
    "timeout_secs",
    "party1",
    "party2",
    "party3",
];

/// Parsed configuration. Later assignments override earlier ones, so CLI
/// flags are applied with [`Config::set`] after loading the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Parses `key = value` lines. Blank lines and lines starting with `#`
    /// are ignored; a key may appear at most once per file.
    pub fn parse(text: &str, source: &str) -> Result<Config> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = || format!("{source} line {}", i + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::ingest(loc(), "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(Error::ingest(loc(), format!("unknown key `{k}`")));
            }
            if cfg.values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::ingest(loc(), format!("duplicate key `{k}`")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ingest(path.display().to_string(), e.to_string()))?;
        Config::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Param(format!("unknown configuration key `{key}`")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Typed lookup; a present but unparsable value is a parameter error.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Param(format!("`{key}` = {v:?}: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = Config::parse("# demo\nepsilon = 4\n\nseed=7\n", "t").unwrap();
        assert_eq!(c.get::<f64>("epsilon").unwrap(), Some(4.0));
        c.set("epsilon", "inf").unwrap();
        assert_eq!(c.get::<f64>("epsilon").unwrap(), Some(f64::INFINITY));
        assert_eq!(c.get_or::<u64>("seed", 0).unwrap(), 7);
        assert_eq!(c.get_or::<usize>("holders", 3).unwrap(), 3);
    }

    #[test]
    fn errors_carry_exit_codes() {
        let e = Config::parse("bogus = 1", "cfg").unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("cfg line 1"), "{e}");
        assert_eq!(Config::parse("seed = 1\nseed = 2", "c").unwrap_err().exit_code(), 3);
        let c = Config::parse("holders = two", "c").unwrap();
        assert_eq!(c.get::<usize>("holders").unwrap_err().exit_code(), 2);
        assert_eq!(Config::default().set("nope", "1").unwrap_err().exit_code(), 2);
    }
}
