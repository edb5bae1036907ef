//! On-disk clip catalog.
//!
//! Labels come from the immediate subdirectory of the catalog root
//! (`dog_bark/` → "dog bark"). An optional `catalog.jsonl` sidecar in the root
//! maps individual files to labels and wins over the directory name.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use scenedit_core::label::normalize_label;
use scenedit_core::{ClipLibrary, LibraryError, SourceClip};
use serde::Deserialize;
use thiserror::Error;

use crate::wav;

pub const SIDECAR_FILE: &str = "catalog.jsonl";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog root {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("no ingestible WAV files under {0}")]
    EmptyCatalog(PathBuf),
    #[error("{path}:{line}: {message}")]
    Sidecar { path: PathBuf, line: usize, message: String },
    #[error("walking {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Deserialize)]
struct SidecarRow {
    path: PathBuf,
    label: String,
}

/// Directory-name label: underscores and hyphens become spaces.
pub fn label_from_dir(name: &str) -> String {
    normalize_label(&name.replace(['_', '-'], " "))
}

#[derive(Debug)]
pub struct Catalog {
    root: PathBuf,
    entries: BTreeMap<String, Vec<PathBuf>>,
    warnings: Vec<String>,
    cache: Mutex<HashMap<PathBuf, Arc<SourceClip>>>,
}

fn is_wav(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn read_sidecar(root: &Path) -> Result<HashMap<PathBuf, String>, CatalogError> {
    let path = root.join(SIDECAR_FILE);
    let mut map = HashMap::new();
    let Ok(text) = std::fs::read_to_string(&path) else {
        return Ok(map);
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: SidecarRow = serde_json::from_str(line)
            .map_err(|e| CatalogError::Sidecar { path: path.clone(), line: i + 1, message: e.to_string() })?;
        let label = normalize_label(&row.label);
        if label.is_empty() {
            return Err(CatalogError::Sidecar { path: path.clone(), line: i + 1, message: "empty label".into() });
        }
        let file = if row.path.is_absolute() { row.path } else { root.join(row.path) };
        map.insert(file, label);
    }
    Ok(map)
}

pub fn build_catalog(root: &Path) -> Result<Catalog, CatalogError> {
    if !root.is_dir() {
        return Err(CatalogError::MissingRoot(root.into()));
    }
    let mut overrides = read_sidecar(root)?;
    let mut entries: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut warn = |msg: String| {
        log::warn!("{msg}");
        warnings.push(msg);
    };

    for entry in walkdir::WalkDir::new(root).min_depth(1).sort_by_file_name() {
        let entry = entry.map_err(|e| CatalogError::Io { path: root.into(), message: e.to_string() })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        if path == root.join(SIDECAR_FILE) {
            continue;
        }
        if !is_wav(path) {
            warn(format!("skipping non-audio file {}", path.display()));
            continue;
        }
        if let Err(e) = hound::WavReader::open(path) {
            warn(format!("skipping unreadable WAV {}: {e}", path.display()));
            continue;
        }
        let label = match overrides.remove(path) {
            Some(label) => label,
            None => {
                let rel = path.strip_prefix(root).expect("walked under root");
                let mut parts = rel.components();
                match (parts.next(), parts.next()) {
                    (Some(dir), Some(_)) => label_from_dir(&dir.as_os_str().to_string_lossy()),
                    _ => {
                        warn(format!("skipping {}: no label directory or sidecar entry", path.display()));
                        continue;
                    }
                }
            }
        };
        if label.is_empty() {
            warn(format!("skipping {}: empty label", path.display()));
            continue;
        }
        entries.entry(label).or_default().push(path.to_path_buf());
    }
    for missing in overrides.keys() {
        warn(format!("sidecar entry {} not found", missing.display()));
    }
    if entries.is_empty() {
        return Err(CatalogError::EmptyCatalog(root.into()));
    }
    Ok(Catalog { root: root.into(), entries, warnings, cache: Mutex::new(HashMap::new()) })
}

impl Catalog {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn files(&self, label: &str) -> &[PathBuf] {
        self.entries.get(&normalize_label(label)).map_or(&[], Vec::as_slice)
    }

    pub fn clip_total(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Loads (and caches) a clip by file path.
    pub fn load_path(&self, path: &Path, label: &str) -> Result<Arc<SourceClip>, LibraryError> {
        if let Some(clip) = self.cache.lock().expect("cache lock").get(path) {
            return Ok(clip.clone());
        }
        let clip = wav::load_clip(path, label)
            .map_err(|e| LibraryError::Load { path: path.to_string_lossy().into_owned(), message: e.to_string() })?;
        let clip = Arc::new(clip);
        self.cache.lock().expect("cache lock").insert(path.into(), clip.clone());
        Ok(clip)
    }
}

impl ClipLibrary for Catalog {
    fn labels(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    fn clip_count(&self, label: &str) -> usize {
        self.files(label).len()
    }

    fn load(&self, label: &str, index: usize) -> Result<Arc<SourceClip>, LibraryError> {
        let path = self.files(label).get(index).ok_or_else(|| LibraryError::CatalogMiss { label: label.into() })?;
        self.load_path(path, label)
    }
}
