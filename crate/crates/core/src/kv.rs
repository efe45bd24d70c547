// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` text format shared by experiment configs, ensemble
//! manifests and saved-filter headers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ordered key/value map with the line each key came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped; a repeated key is an error.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = KvMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if map.entries.contains_key(&key) {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
            map.entries.insert(key, (v.trim().to_string(), i + 1));
        }
        Ok(map)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), (value.to_string(), 0));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses the value for `key`, if present.
    pub fn parse_opt<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| {
                Error::validation(format!("bad value `{v}` for `{key}` (line {line}): {e}"))
            }),
        }
    }

    pub fn require<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.parse_opt(key)?
            .ok_or_else(|| Error::validation(format!("missing key `{key}`")))
    }

    /// Copies every entry of `other` over `self`.
    pub fn overlay(&mut self, other: &KvMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    /// Canonical text form, sorted by key.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, (v, _)) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T>(value: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| Error::validation(format!("bad list item `{s}`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let text = "# comment\nb.x = 2\n\na.y = hello world \n";
        let m = KvMap::parse(text, Path::new("t")).unwrap();
        assert_eq!(m.get("a.y"), Some("hello world"));
        assert_eq!(m.require::<i32>("b.x").unwrap(), 2);
        assert_eq!(m.render(), "a.y = hello world\nb.x = 2\n");
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(matches!(
            KvMap::parse("a = 1\na = 2", Path::new("t")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(KvMap::parse("no equals sign", Path::new("t")).is_err());
        assert!(KvMap::parse(" = 3", Path::new("t")).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(
            parse_list::<f64>("0.1, 0.5,1").unwrap(),
            vec![0.1, 0.5, 1.0]
        );
        assert!(parse_list::<f64>("0.1,x").is_err());
    }
}
