//! Flat `key = value` text with `[section]` headers, used for config files and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Keys are stored as `section.key`; keys before any header live in `run`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValueFile {
    entries: BTreeMap<String, String>,
}

impl KeyValueFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::from("run");
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", n + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            entries.insert(format!("{section}.{key}"), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Renders grouped by section, keys sorted within each section.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for (key, value) in &self.entries {
            let (section, name) = key.split_once('.').unwrap_or(("run", key.as_str()));
            if current != Some(section) {
                if current.is_some() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{section}]");
                current = Some(section);
            }
            let _ = writeln!(out, "{name} = {value}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_defaults() {
        let f = KeyValueFile::parse("problem = scalar-sinL\n# note\n[reference]\ndt = 0.003125 # fine\n").unwrap();
        assert_eq!(f.get("run.problem"), Some("scalar-sinL"));
        assert_eq!(f.get("reference.dt"), Some("0.003125"));
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn render_roundtrip() {
        let mut f = KeyValueFile::default();
        f.insert("run.scheme", "SE22");
        f.insert("viscosity.order", "4");
        f.insert("run.dt", "1,0.5");
        assert_eq!(KeyValueFile::parse(&f.render()).unwrap(), f);
    }

    #[test]
    fn malformed_lines() {
        assert!(KeyValueFile::parse("novalue").is_err());
        assert!(KeyValueFile::parse("[open").is_err());
    }
}
