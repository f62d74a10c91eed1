pub mod cluster;
pub mod curve;
pub mod features;
pub mod simulate;
pub mod theory;

use std::fs;
use std::path::Path;

use avrc_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub(crate) fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

pub(crate) fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Like [`read_config`], but failures count as data errors (for files that
/// belong to a dataset rather than to the run configuration).
pub(crate) fn read_json_data<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("serialization: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}
