use std::collections::BTreeMap;
use std::path::Path;

use itep::io::Csv;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

/// Files of one run, kept in memory and written together at the end along
/// with `manifest.json`.
pub struct Output {
    command: &'static str,
    seed: u64,
    files: BTreeMap<String, String>,
    summary: serde_json::Map<String, serde_json::Value>,
}

impl Output {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self {
            command,
            seed,
            files: BTreeMap::new(),
            summary: serde_json::Map::new(),
        }
    }

    pub fn csv(&mut self, name: &str, table: &Csv) {
        self.files.insert(name.to_string(), table.render());
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
        s.push('\n');
        self.files.insert(name.to_string(), s);
        Ok(())
    }

    /// A key/value echoed in the manifest and printed on stdout.
    pub fn note<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        println!("{key}: {v}");
        self.summary.insert(key.to_string(), v);
    }

    pub fn finish(mut self, dir: &Path, cfg: &RunConfig, passed: bool) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        let manifest = json!({
            "tool": "itep",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "passed": passed,
            "outputs": self.files.keys().collect::<Vec<_>>(),
            "summary": self.summary,
            "config": cfg,
        });
        self.json("manifest.json", &manifest)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        println!("{}: {}", self.command, if passed { "pass" } else { "FAIL" });
        Ok(())
    }
}
