use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ROOT_ENV: &str = "INLS_OUTPUT_ROOT";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub started: String,
    pub finished: String,
    pub elapsed_seconds: f64,
    /// `ok` or `failed`.
    pub status: String,
    pub exit_code: i32,
    pub seed: u64,
    pub threads: usize,
    /// Resolved configuration, relative to the run directory.
    pub config: String,
    pub artifacts: Vec<String>,
    pub summary: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

/// A fresh directory `<root>/<subcommand>-<UTC timestamp>[-k]` that keeps
/// track of the artifacts written into it.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    subcommand: String,
    started: DateTime<Utc>,
    clock: Instant,
    artifacts: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path, subcommand: &str) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        let started = Utc::now();
        let stamp = started.format("%Y%m%dT%H%M%S%.3fZ").to_string();
        let mut k = 0;
        let path = loop {
            let name = if k == 0 {
                format!("{subcommand}-{stamp}")
            } else {
                format!("{subcommand}-{stamp}-{k}")
            };
            let candidate = root.join(name);
            match std::fs::create_dir(&candidate) {
                Ok(()) => break candidate,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => k += 1,
                Err(e) => return Err(e),
            }
        };
        Ok(RunDir {
            path,
            subcommand: subcommand.to_string(),
            started,
            clock: Instant::now(),
            artifacts: Vec::new(),
        })
    }

    /// A run directory at an exact path, used for the rows of a sweep.
    pub fn at(path: PathBuf, subcommand: &str) -> std::io::Result<Self> {
        std::fs::create_dir_all(&path)?;
        Ok(RunDir {
            path,
            subcommand: subcommand.to_string(),
            started: Utc::now(),
            clock: Instant::now(),
            artifacts: Vec::new(),
        })
    }

    pub fn take_artifacts(&mut self) -> Vec<String> {
        std::mem::take(&mut self.artifacts)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn join(&self, rel: &str) -> PathBuf {
        self.path.join(rel)
    }

    /// Records a file written by someone else.
    pub fn record(&mut self, rel: impl Into<String>) {
        self.artifacts.push(rel.into());
    }

    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> std::io::Result<()> {
        let path = self.path.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
        self.record(rel);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        self.write(rel, text + "\n")
    }

    /// Writes `manifest.json` and returns its contents.
    pub fn finish(
        mut self,
        seed: u64,
        threads: usize,
        summary: Value,
        error: Option<Value>,
        exit_code: i32,
    ) -> std::io::Result<Manifest> {
        let manifest = Manifest {
            tool: "inls".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.clone(),
            started: self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
            status: if exit_code == 0 { "ok" } else { "failed" }.into(),
            exit_code,
            seed,
            threads,
            config: CONFIG_FILE.into(),
            artifacts: std::mem::take(&mut self.artifacts),
            summary,
            error,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        std::fs::write(self.path.join(MANIFEST_FILE), text + "\n")?;
        Ok(manifest)
    }
}

/// `INLS_OUTPUT_ROOT` when set and nonempty, otherwise `fallback`.
pub fn output_root(fallback: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}

/// Quotes a CSV cell when it contains a separator, quote or newline.
pub fn csv_cell(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_dirs_are_unique_within_one_instant() {
        let root = tempfile::tempdir().unwrap();
        let a = RunDir::create(root.path(), "evolve").unwrap();
        let b = RunDir::create(root.path(), "evolve").unwrap();
        assert_ne!(a.path(), b.path());
        assert!(a.path().file_name().unwrap().to_str().unwrap().starts_with("evolve-"));
    }

    #[test]
    fn csv_cells_are_quoted_only_when_needed() {
        assert_eq!(csv_cell("plain"), "plain");
        assert_eq!(csv_cell("a,b"), "\"a,b\"");
        assert_eq!(csv_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
