//! On-disk campaign logs: one JSON document per iteration plus a manifest
//! that names them in order. The manifest is always replaced via
//! write-temp-then-rename, so a reader never observes a half-written one.
//! Single writer per directory; readers may run concurrently.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignConfig, IterationRecord};

/// Manifest schema this build writes and the only one it reads.
pub const SCHEMA_VERSION: &str = "1";

const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("log directory {0} already holds a campaign (manifest present)")]
    AlreadyInitialized(PathBuf),
    #[error("log directory {0} is not empty")]
    DirNotEmpty(PathBuf),
    #[error("no campaign manifest in {0}")]
    ManifestNotFound(PathBuf),
    #[error("log schema version {found} is not supported (this build reads {SCHEMA_VERSION})")]
    UnsupportedSchema { found: String },
    /// The state note says what already reached disk when the write failed.
    #[error("persist incomplete ({state}): {source}")]
    Persist {
        state: &'static str,
        #[source]
        source: io::Error,
    },
    #[error("cannot read {file}: {source}")]
    Read {
        file: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed JSON in {file}: {source}")]
    Malformed {
        file: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest references missing record file {0}")]
    MissingRecord(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub iteration: usize,
    /// Record file name, relative to the log directory.
    pub file: String,
    /// Wall-clock duration of the iteration. Lives here, not in the
    /// record, so records stay bit-identical across reruns.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub config: CampaignConfig,
    pub iterations: Vec<ManifestEntry>,
    pub created_unix_seconds: u64,
    /// Master seed, duplicated out of the config for quick inspection.
    pub seed: u64,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> io::Result<()> {
    let bytes = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    write_atomic(&dir.join(MANIFEST_FILE), &bytes)
}

/// Creates the log directory and an empty manifest. Refuses a directory
/// that already contains anything.
pub fn init_log_dir(dir: &Path, config: &CampaignConfig) -> Result<(), StorageError> {
    let state = "nothing written";
    fs::create_dir_all(dir).map_err(|source| StorageError::Persist { state, source })?;
    if dir.join(MANIFEST_FILE).exists() {
        return Err(StorageError::AlreadyInitialized(dir.to_path_buf()));
    }
    let mut entries = fs::read_dir(dir).map_err(|source| StorageError::Persist { state, source })?;
    if entries.next().is_some() {
        return Err(StorageError::DirNotEmpty(dir.to_path_buf()));
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        config: config.clone(),
        iterations: Vec::new(),
        created_unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed: config.seed,
    };
    write_manifest(dir, &manifest).map_err(|source| StorageError::Persist { state, source })
}

/// Writes the record as `iteration_NNNN.json` and appends it to the
/// manifest. Returns the record path.
pub fn persist_iteration(
    dir: &Path,
    record: &IterationRecord,
    seconds: f64,
) -> Result<PathBuf, StorageError> {
    let mut manifest = load_manifest(dir)?;
    let file = format!("iteration_{:04}.json", record.iteration);
    let path = dir.join(&file);
    let bytes = serde_json::to_vec_pretty(record).expect("record serializes");
    write_atomic(&path, &bytes).map_err(|source| StorageError::Persist {
        state: "nothing written",
        source,
    })?;
    manifest.iterations.push(ManifestEntry {
        iteration: record.iteration,
        file,
        seconds,
    });
    write_manifest(dir, &manifest).map_err(|source| StorageError::Persist {
        state: "iteration file written, manifest unchanged",
        source,
    })?;
    Ok(path)
}

/// Reads and version-checks the manifest. The version is probed before
/// the full parse so a future schema fails loudly instead of misreading.
pub fn load_manifest(dir: &Path) -> Result<RunManifest, StorageError> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(StorageError::ManifestNotFound(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&path).map_err(|source| StorageError::Read {
        file: path.clone(),
        source,
    })?;

    #[derive(Deserialize)]
    struct VersionProbe {
        #[serde(default)]
        schema_version: String,
    }
    let probe: VersionProbe =
        serde_json::from_str(&text).map_err(|source| StorageError::Malformed {
            file: path.clone(),
            source,
        })?;
    if probe.schema_version != SCHEMA_VERSION {
        let found = if probe.schema_version.is_empty() {
            "(missing)".to_string()
        } else {
            probe.schema_version
        };
        return Err(StorageError::UnsupportedSchema { found });
    }

    serde_json::from_str(&text).map_err(|source| StorageError::Malformed { file: path, source })
}

/// Loads the manifest and every record it references, in manifest order.
pub fn load_log(dir: &Path) -> Result<(RunManifest, Vec<IterationRecord>), StorageError> {
    let manifest = load_manifest(dir)?;
    let mut records = Vec::with_capacity(manifest.iterations.len());
    for entry in &manifest.iterations {
        let path = dir.join(&entry.file);
        if !path.exists() {
            return Err(StorageError::MissingRecord(path));
        }
        let text = fs::read_to_string(&path).map_err(|source| StorageError::Read {
            file: path.clone(),
            source,
        })?;
        let record: IterationRecord =
            serde_json::from_str(&text).map_err(|source| StorageError::Malformed {
                file: path.clone(),
                source,
            })?;
        if record.iteration != entry.iteration {
            return Err(StorageError::Malformed {
                file: path,
                source: serde::de::Error::custom(format!(
                    "record says iteration {} but manifest says {}",
                    record.iteration, entry.iteration
                )),
            });
        }
        records.push(record);
    }
    Ok((manifest, records))
}
