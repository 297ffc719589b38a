use std::fs;
use std::path::Path;

use thiserror::Error;

use super::instance::{Instance, InstanceError, InstanceSpec};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(#[from] InstanceError),
}

pub fn instance_from_json(text: &str) -> Result<Instance, IoError> {
    let spec: InstanceSpec = serde_json::from_str(text)?;
    Ok(Instance::new(spec)?)
}

pub fn instance_to_json(spec: &InstanceSpec) -> String {
    serde_json::to_string_pretty(spec).expect("instance data always serializes")
}

pub fn load_instance(path: &Path) -> Result<Instance, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    instance_from_json(&text)
}

pub fn save_instance(spec: &InstanceSpec, path: &Path) -> Result<(), IoError> {
    write_text(path, &instance_to_json(spec))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}
