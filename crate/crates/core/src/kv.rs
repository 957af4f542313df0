//! Flat `key = value` text files with `#` comments.
//!
//! Keys may be dotted (`mc.outer_paths`). Later duplicates are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                detail: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    detail: "empty key".into(),
                });
            }
            if entries
                .insert(key.to_string(), (line_no, v.trim().to_string()))
                .is_some()
            {
                return Err(Error::Parse {
                    line: line_no,
                    detail: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(KvFile { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Parses `key` if present.
    pub fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<V>().map(Some).map_err(|_| Error::Parse {
                line: *line,
                detail: format!("cannot parse value `{v}` for `{key}`"),
            }),
        }
    }

    pub fn require<V: FromStr>(&self, key: &str) -> Result<V> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (0, value.to_string()));
    }

    /// Renders entries in key order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, (_, v)) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
