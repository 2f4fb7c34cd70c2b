use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
}

/// Image manifest: a `path,label` CSV. Relative paths resolve against the
/// manifest's own directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Sorted distinct labels; a label's position is its class id.
    pub class_names: Vec<String>,
}

impl Manifest {
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|e| e.path.as_os_str().is_empty()) {
            return Err(Error::invalid(format!(
                "manifest entry {i} has an empty path"
            )));
        }
        if let Some(i) = entries.iter().position(|e| e.label.is_empty()) {
            return Err(Error::invalid(format!(
                "manifest entry {i} has an empty label"
            )));
        }
        let class_names: Vec<String> = entries
            .iter()
            .map(|e| e.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Manifest {
            entries,
            class_names,
        })
    }

    pub fn class_id(&self, label: &str) -> Option<usize> {
        self.class_names
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries
            .iter()
            .map(|e| self.class_id(&e.label).expect("label is in class table"))
            .collect()
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "label"] {
        return Err(Error::format(0, "manifest header must be `path,label`"));
    }
    let mut entries = Vec::new();
    for record in reader.deserialize() {
        let mut entry: ManifestEntry = record.map_err(csv_error)?;
        if entry.path.is_relative() && !entry.path.as_os_str().is_empty() {
            entry.path = base.join(&entry.path);
        }
        entries.push(entry);
    }
    Manifest::from_entries(entries)
}

fn csv_error(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::format(offset, format!("manifest: {kind:?}")),
    }
}
