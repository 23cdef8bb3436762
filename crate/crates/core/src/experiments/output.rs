//! Atomic CSV/JSON writes and the per-run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Write through a sibling temp file and rename, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Render rows under `headers` as CSV.
pub fn csv_bytes<R, S>(headers: &[&str], rows: R) -> Result<Vec<u8>>
where
    R: IntoIterator<Item = Vec<S>>,
    S: AsRef<str>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)?;
    for row in rows {
        w.write_record(row.iter().map(|s| s.as_ref()))?;
    }
    Ok(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
}

pub fn write_csv<R, S>(path: &Path, headers: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = Vec<S>>,
    S: AsRef<str>,
{
    atomic_write(path, &csv_bytes(headers, rows)?)
}

/// SHA-256 of the compact JSON rendering.
pub fn config_hash(config: &Value) -> String {
    let text = serde_json::to_string(config).expect("JSON values serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// `SEPMIX_GIT_REV` if set, else `git rev-parse HEAD` in the working directory.
pub fn git_revision() -> Option<String> {
    if let Ok(rev) = std::env::var("SEPMIX_GIT_REV") {
        return Some(rev);
    }
    let out = Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub config_hash: String,
    pub git_revision: Option<String>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

/// Output directory of one run. Files are written atomically as they are
/// produced; the manifest is written last.
#[derive(Debug)]
pub struct RunOutput {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl RunOutput {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, outputs: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn csv<R, S>(&mut self, name: &str, headers: &[&str], rows: R) -> Result<PathBuf>
    where
        R: IntoIterator<Item = Vec<S>>,
        S: AsRef<str>,
    {
        let path = self.dir.join(name);
        write_csv(&path, headers, rows)?;
        self.record(name);
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        atomic_write(&path, &bytes)?;
        self.record(name);
        Ok(path)
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Write `manifest.json` listing every output so far.
    pub fn finish(&self, command: &str, config: &Value, seeds: &[u64]) -> Result<Manifest> {
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            config_hash: config_hash(config),
            git_revision: git_revision(),
            seeds: seeds.to_vec(),
            outputs: self.outputs.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        atomic_write(&self.dir.join("manifest.json"), &bytes)?;
        Ok(manifest)
    }
}

/// Shortest round-trip rendering of a float.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_no_temp_left() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&path, &["x", "y"], vec![vec!["1", "2"], vec!["3", "4"]]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x,y\n1,2\n3,4\n");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn hash_is_stable() {
        let v: Value = serde_json::json!({"a": 1, "b": [1, 2]});
        assert_eq!(config_hash(&v), config_hash(&v.clone()));
        assert_eq!(config_hash(&v).len(), 64);
    }

    #[test]
    fn manifest_lists_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = RunOutput::new(dir.path().join("run")).unwrap();
        out.csv("t.csv", &["a"], vec![vec!["1"]]).unwrap();
        let m = out.finish("test", &serde_json::json!({"seed": 3}), &[3]).unwrap();
        assert_eq!(m.outputs, vec!["t.csv".to_string()]);
        assert!(dir.path().join("run/manifest.json").exists());
    }
}
