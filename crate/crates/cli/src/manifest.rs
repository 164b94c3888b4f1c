//! Run manifests and hash-stamped output files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Component, Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hash of command, config, data file and version; stamped into every output.
    pub manifest_hash: String,
    pub command: String,
    pub config_hash: String,
    pub data_hash: String,
    pub version: String,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub seeds: BTreeMap<String, u64>,
    pub files: Vec<String>,
}

impl RunManifest {
    /// The output directory does not enter the config hash.
    pub fn new(command: &str, config: &RunConfig, data: &str) -> Self {
        let hashed = RunConfig {
            output_dir: PathBuf::new(),
            ..config.clone()
        };
        let config_hash = sha256_hex(hashed.to_toml_string().as_bytes());
        let data_hash = sha256_hex(data.as_bytes());
        let version = env!("CARGO_PKG_VERSION").to_string();
        let manifest_hash =
            sha256_hex(format!("{command}\n{config_hash}\n{data_hash}\n{version}").as_bytes());
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            manifest_hash,
            command: command.into(),
            config_hash,
            data_hash,
            version,
            started_unix,
            wall_clock_seconds: 0.0,
            seeds: BTreeMap::new(),
            files: Vec::new(),
        }
    }
}

/// Writer confined to one output directory.
pub struct Output {
    dir: PathBuf,
    manifest: RunManifest,
    start: Instant,
}

impl Output {
    pub fn create(dir: &Path, manifest: RunManifest) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            start: Instant::now(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.manifest.manifest_hash
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn record_seed(&mut self, stage: impl Into<String>, seed: u64) {
        self.manifest.seeds.insert(stage.into(), seed);
    }

    fn open(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let rel = Path::new(name);
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return Err(CliError::Io(format!(
                "refusing to write `{name}` outside the output directory"
            )));
        }
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        let file =
            File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if !self.manifest.files.iter().any(|f| f == name) {
            self.manifest.files.push(name.to_string());
        }
        let mut w = BufWriter::new(file);
        writeln!(w, "# manifest: {}", self.manifest.manifest_hash).map_err(io)?;
        Ok(w)
    }

    /// CSV file with a `# manifest:` comment line before the header.
    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
        I: IntoIterator<Item = R>,
    {
        let w = self.open(name)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header).map_err(io)?;
        for r in rows {
            csv.write_record(r).map_err(io)?;
        }
        csv.flush().map_err(io)
    }

    /// Structured text file with a `# manifest:` comment line.
    pub fn write_toml<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = toml::to_string(value).map_err(|e| CliError::Io(e.to_string()))?;
        let mut w = self.open(name)?;
        w.write_all(text.as_bytes()).map_err(io)?;
        w.flush().map_err(io)
    }

    /// Write the manifest itself and return it.
    pub fn finish(mut self) -> CliResult<RunManifest> {
        self.manifest.wall_clock_seconds = self.start.elapsed().as_secs_f64();
        self.manifest.files.sort();
        let manifest = self.manifest.clone();
        self.write_toml(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Rows of floats as CSV cells.
pub fn float_rows(rows: impl IntoIterator<Item = Vec<f64>>) -> impl Iterator<Item = Vec<String>> {
    rows.into_iter().map(|r| r.into_iter().map(num).collect())
}
