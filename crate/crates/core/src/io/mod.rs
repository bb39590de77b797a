//! On-disk formats: JSON-lines scenario logs, the binary motion-field
//! container, dataset manifests and scenario config documents.

mod grid;
mod log;
mod manifest;

use std::path::Path;

pub use grid::{decode_field, field_to_bytes, write_field, FIELD_MAGIC, FIELD_VERSION};
pub use log::{log_to_string, parse_log, read_log, write_log, LOG_FORMAT};
pub use manifest::{parse_config, parse_manifest, DatasetManifest, ManifestEntry, MANIFEST_FILE, MANIFEST_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid data: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn load_log(path: &Path) -> Result<crate::sim::ScenarioLog, IoError> {
    let f = std::fs::File::open(path)?;
    read_log(std::io::BufReader::new(f))
}

pub fn save_log(log: &crate::sim::ScenarioLog, path: &Path) -> Result<(), IoError> {
    let f = std::fs::File::create(path)?;
    write_log(log, std::io::BufWriter::new(f))
}

pub fn load_manifest(root: &Path) -> Result<DatasetManifest, IoError> {
    parse_manifest(&std::fs::read_to_string(root.join(MANIFEST_FILE))?)
}

pub fn save_manifest(m: &DatasetManifest, root: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(m)?;
    text.push('\n');
    std::fs::write(root.join(MANIFEST_FILE), text)?;
    Ok(())
}
