//! Provenance sidecars written next to every output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Effective flag values, including defaults.
    pub flags: Map<String, Value>,
    pub seeds: Map<String, Value>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            flags: Map::new(),
            seeds: Map::new(),
            outputs: Vec::new(),
        }
    }

    pub fn flag(mut self, name: &str, value: impl Serialize) -> Self {
        self.flags.insert(name.to_string(), serde_json::to_value(value).expect("flag values serialize"));
        self
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_string(), Value::from(value));
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// `<path>.manifest.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar_path(Path::new("out/train.jsonl")), Path::new("out/train.jsonl.manifest.json"));
    }

    #[test]
    fn records_flags_and_seeds() {
        let m = Manifest::new("gen-data").flag("count", 10).seed("seed", 3).output(Path::new("a"));
        let v: Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["flags"]["count"], 10);
        assert_eq!(v["seeds"]["seed"], 3);
        assert_eq!(v["tool"], "vulnfuzz");
    }
}
