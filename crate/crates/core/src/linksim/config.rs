//! Flat `key = value` configuration text.
//!
//! ```text
//! # comment
//! [sim]
//! scenarios = pdsch, prach
//! snr_db = -2, 0, 2
//! trials = 200
//!
//! carrier.num_rb = 52        # dotted keys work outside sections too
//! ```
//!
//! Keys inside a `[section]` are prefixed with `section.`. Every key must be
//! consumed by the reader; leftovers are reported as unknown.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{config_err, Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| config_err!("line {}: unterminated section header", n + 1))?
                    .trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(config_err!("line {}: bad section name `{name}`", n + 1));
                }
                section = format!("{name}.");
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err!("line {}: expected `key = value`", n + 1))?;
            let key = format!("{section}{}", k.trim());
            if k.trim().is_empty() {
                return Err(config_err!("line {}: empty key", n + 1));
            }
            if entries.insert(key.clone(), v.trim().to_owned()).is_some() {
                return Err(config_err!("line {}: duplicate key `{key}`", n + 1));
            }
        }
        Ok(Self {
            entries,
            used: RefCell::default(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.trim().to_owned(), value.trim().to_owned());
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_err!("override `{kv}` is not `key=value`"))?;
        if k.trim().is_empty() {
            return Err(config_err!("override `{kv}` has an empty key"));
        }
        self.set(k, v);
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_owned());
        Some(v)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| config_err!("`{key}`: cannot parse `{v}`")))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(config_err!("`{key}`: expected a boolean, got `{v}`")),
            },
        }
    }

    /// Comma-separated list; empty items are rejected.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse()
                    .map_err(|_| config_err!("`{key}`: cannot parse list item `{item}`"))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Keys never read since parsing.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }

    pub fn reject_unused(&self) -> Result<()> {
        match self.unused().as_slice() {
            [] => Ok(()),
            keys => Err(config_err!("unknown key(s): {}", keys.join(", "))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_dotted_keys() {
        let c = RawConfig::parse("a = 1\n[sim]\ntrials = 20 # x\n\n[ptrs]\nenabled = yes\nsim.seed=3").unwrap();
        assert_eq!(c.get::<u32>("a").unwrap(), Some(1));
        assert_eq!(c.get::<u32>("sim.trials").unwrap(), Some(20));
        assert!(c.get_bool("ptrs.enabled", false).unwrap());
        assert_eq!(c.unused(), vec!["ptrs.sim.seed".to_owned()]);
        assert!(c.reject_unused().is_err());
    }

    #[test]
    fn malformed_input() {
        for bad in ["[sim", "novalue", "a = 1\na = 2", "= 3"] {
            assert!(matches!(RawConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
        let c = RawConfig::parse("x = abc\ny = 1, 2, q").unwrap();
        assert!(c.get::<f64>("x").is_err());
        assert!(c.get_list::<f64>("y").is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut c = RawConfig::parse("[sim]\ntrials = 20").unwrap();
        c.apply_override("sim.trials=5").unwrap();
        assert_eq!(c.get::<usize>("sim.trials").unwrap(), Some(5));
        assert!(c.apply_override("oops").is_err());
    }
}
