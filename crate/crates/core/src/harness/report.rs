//! Report plumbing shared by every experiment: verdicts, config hashes,
//! CSV serialisation and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Result;

/// Hex SHA-256 of the canonical JSON of `config`.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    /// Too little data for the check to mean anything; `passed` is then
    /// trivially true.
    pub insufficient: bool,
    pub detail: String,
}

impl Verdict {
    pub fn pass(detail: impl Into<String>) -> Self {
        Verdict {
            passed: true,
            insufficient: false,
            detail: detail.into(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Verdict {
            passed: false,
            insufficient: false,
            detail: detail.into(),
        }
    }

    pub fn insufficient(detail: impl Into<String>) -> Self {
        Verdict {
            passed: true,
            insufficient: true,
            detail: detail.into(),
        }
    }
}

/// Serialises `rows` as CSV with a header from the field names.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce and audit a run. Contains no clock
/// readings, so a repeated run yields an identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub passed: bool,
    pub outputs: Vec<OutputFile>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// The three artefacts of an experiment before they hit the disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub command: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub csv: String,
    pub report: serde_json::Value,
    pub passed: bool,
    pub notes: Vec<String>,
    /// Further files as `(suffix, contents)`, written to `<stem>.<suffix>`.
    pub attachments: Vec<(String, String)>,
}

impl ExperimentOutput {
    pub fn new<R: Serialize>(
        command: &str,
        config_hash: String,
        seeds: Vec<u64>,
        csv: String,
        report: &R,
        passed: bool,
    ) -> Result<Self> {
        Ok(ExperimentOutput {
            command: command.to_string(),
            config_hash,
            seeds,
            csv,
            report: serde_json::to_value(report)?,
            passed,
            notes: Vec::new(),
            attachments: Vec::new(),
        })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_attachment(mut self, suffix: &str, contents: String) -> Self {
        self.attachments.push((suffix.to_string(), contents));
        self
    }

    pub fn manifest(&self, stem: &str) -> Result<Manifest> {
        let report = serde_json::to_string_pretty(&self.report)?;
        let mut outputs = vec![
            OutputFile {
                path: format!("{stem}.csv"),
                sha256: sha256_hex(self.csv.as_bytes()),
            },
            OutputFile {
                path: format!("{stem}.json"),
                sha256: sha256_hex(report.as_bytes()),
            },
        ];
        outputs.extend(self.attachments.iter().map(|(suffix, body)| OutputFile {
            path: format!("{stem}.{suffix}"),
            sha256: sha256_hex(body.as_bytes()),
        }));
        Ok(Manifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config_hash.clone(),
            seeds: self.seeds.clone(),
            passed: self.passed,
            outputs,
            notes: self.notes.clone(),
        })
    }

    /// Writes `<stem>.csv`, `<stem>.json`, any attachments and
    /// `<stem>.manifest.json` into `dir`; returns the paths written.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = vec![dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json"))];
        std::fs::write(&paths[0], &self.csv)?;
        std::fs::write(&paths[1], serde_json::to_string_pretty(&self.report)?)?;
        for (suffix, body) in &self.attachments {
            let p = dir.join(format!("{stem}.{suffix}"));
            std::fs::write(&p, body)?;
            paths.push(p);
        }
        let m = dir.join(format!("{stem}.manifest.json"));
        std::fs::write(&m, serde_json::to_string_pretty(&self.manifest(stem)?)?)?;
        paths.push(m);
        Ok(paths)
    }
}

/// Reads a JSON config file.
pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        k: u64,
        error: f64,
    }

    #[test]
    fn csv_has_header_and_round_trip_floats() {
        let csv = to_csv(&[Row { k: 10, error: 0.1 }, Row { k: 100, error: 1.0 / 3.0 }]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,error"));
        assert_eq!(lines.next(), Some("10,0.1"));
        let v: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }

    #[test]
    fn hash_depends_on_content_only() {
        let a = config_hash(&serde_json::json!({"a": 1, "b": [1.5]})).unwrap();
        let b = config_hash(&serde_json::json!({"a": 1, "b": [1.5]})).unwrap();
        let c = config_hash(&serde_json::json!({"a": 2, "b": [1.5]})).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
