//! Flat `section.key = value` configuration text.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments
//! replace earlier ones, so command-line overrides are applied with
//! [`Config::set`] after loading the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{config, GazeError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GazeError::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.insert(k, v).map_err(|e| GazeError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GazeError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let valid = !key.is_empty()
            && key.split('.').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            });
        if !valid {
            return config(format!("malformed key '{key}'"));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| GazeError::Config(format!("override '{assignment}' is not key=value")))?;
        self.insert(k, v)
    }

    pub fn set_value(&mut self, key: &str, value: impl ToString) -> Result<()> {
        self.insert(key, &value.to_string())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    fn get_parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| GazeError::Config(format!("{key}: expected {what}, got '{v}'"))),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.get_parsed(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => config(format!("{key}: value must be finite")),
            other => Ok(other),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get_parsed(key, "a nonnegative integer")
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get_parsed(key, "a nonnegative integer")
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get_str(key) {
            None => Ok(None),
            Some("true" | "yes" | "1" | "on") => Ok(Some(true)),
            Some("false" | "no" | "0" | "off") => Ok(Some(false)),
            Some(v) => config(format!("{key}: expected a boolean, got '{v}'")),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.get_u64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.get_usize(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.get_bool(key)?.unwrap_or(default))
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| GazeError::Config(format!("{key}: bad number '{}'", s.trim())))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    /// Fails on any key outside `known`. A trailing `*` in a known entry
    /// matches any suffix.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        for k in self.keys() {
            let ok = known.iter().any(|pat| match pat.strip_suffix('*') {
                Some(prefix) => k.starts_with(prefix),
                None => k == *pat,
            });
            if !ok {
                return config(format!("unknown configuration key '{k}'"));
            }
        }
        Ok(())
    }

    /// Canonical text: sorted keys, one `key = value` per line.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut cfg = Config::parse("# comment\nhough.m = 4\n\n run.seed=7 \n").unwrap();
        assert_eq!(cfg.get_usize("hough.m").unwrap(), Some(4));
        assert_eq!(cfg.get_u64("run.seed").unwrap(), Some(7));
        cfg.set("hough.m=6").unwrap();
        assert_eq!(cfg.get_usize("hough.m").unwrap(), Some(6));
        assert_eq!(cfg.get_f64("missing").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("novalue\n").is_err());
        assert!(Config::parse("bad key = 1\n").is_err());
        assert!(Config::parse("a..b = 1\n").is_err());
        let cfg = Config::parse("x.y = abc\n").unwrap();
        assert!(cfg.get_f64("x.y").is_err());
        assert!(cfg.get_bool("x.y").is_err());
    }

    #[test]
    fn unknown_keys() {
        let cfg = Config::parse("hough.m = 4\npf.sigma_phi = 3\n").unwrap();
        assert!(cfg.check_known(&["hough.m", "pf.*"]).is_ok());
        assert!(cfg.check_known(&["hough.m"]).is_err());
    }

    #[test]
    fn canonical_is_order_independent() {
        let a = Config::parse("b.x = 1\na.y = 2\n").unwrap();
        let b = Config::parse("a.y = 2\nb.x = 1\n").unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn lists() {
        let cfg = Config::parse("s.values = 0, 0.5 ,1\n").unwrap();
        assert_eq!(cfg.get_f64_list("s.values").unwrap(), Some(vec![0.0, 0.5, 1.0]));
    }
}
