//! Flat `key = value` scenario files.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// 0 for entries set programmatically.
    line: usize,
}

/// Parsed scenario file. Keys are dotted, values are raw strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, Entry>,
}

impl FromStr for ConfigMap {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
            {
                return Err(Error::Config {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    message: format!("empty value for `{key}`"),
                });
            }
            let prev = entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
            if let Some(prev) = prev {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
        }
        Ok(Self { entries })
    }
}

impl ConfigMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let line = self.entries.get(key).map_or(0, |e| e.line);
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.into(),
                line,
            },
        );
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Serializes back to file form, keys sorted.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, e)| format!("{k} = {}\n", e.value))
            .collect()
    }
}

/// Typed access that remembers which keys were read, so leftovers can be
/// reported as unknown.
pub(crate) struct Reader<'a> {
    map: &'a ConfigMap,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Reader<'a> {
    pub fn new(map: &'a ConfigMap) -> Self {
        Self {
            map,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn raw(&self, key: &str) -> Option<&'a Entry> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.entries.get(key)
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.entries.contains_key(key)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some(entry) = self.raw(key) else {
            return Ok(None);
        };
        entry
            .value
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::Config {
                line: entry.line,
                message: format!("cannot parse `{}` for `{key}`", entry.value),
            })
    }

    pub fn req<T: FromStr>(&self, key: &str) -> Result<T> {
        self.opt(key)?
            .ok_or_else(|| Error::ConfigKey(format!("missing key `{key}`")))
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        let Some(entry) = self.raw(key) else {
            return Ok(default);
        };
        match entry.value.as_str() {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            other => Err(Error::Config {
                line: entry.line,
                message: format!("expected a boolean for `{key}`, got `{other}`"),
            }),
        }
    }

    /// Raw string with its line for custom parsing.
    pub fn text(&self, key: &str) -> Option<(&'a str, usize)> {
        self.raw(key).map(|e| (e.value.as_str(), e.line))
    }

    pub fn finish(self) -> Result<()> {
        let used = self.used.into_inner();
        for (key, entry) in &self.map.entries {
            if !used.contains(key) {
                return Err(Error::Config {
                    line: entry.line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }
}
