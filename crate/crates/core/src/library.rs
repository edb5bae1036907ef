//! Label-indexed clip libraries and scene sampling.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{fit_duration, normalize_rms, AudioError, SourceClip, CANONICAL_SECONDS, REFERENCE_DBFS};
use crate::label::{best_match, normalize_label};
use crate::scene::Scene;
use crate::spatial::{Direction, GainDb};

/// Minimum token-Jaccard similarity for a fuzzy label match.
pub const FUZZY_MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("catalog has {available} distinct labels, need {needed}")]
    EmptyCatalog { available: usize, needed: usize },
    #[error("no catalog label matches {label:?}")]
    CatalogMiss { label: String },
    #[error("failed to load clip {path}: {message}")]
    Load { path: String, message: String },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Source of mono clips keyed by normalized label.
pub trait ClipLibrary {
    /// Normalized labels in a stable order.
    fn labels(&self) -> Vec<String>;
    fn clip_count(&self, label: &str) -> usize;
    /// Raw (unfitted) clip `index` of `label`.
    fn load(&self, label: &str, index: usize) -> Result<Arc<SourceClip>, LibraryError>;
}

/// Exact normalized match, else the best token-Jaccard match above threshold.
pub fn resolve_label<L: ClipLibrary + ?Sized>(library: &L, label: &str) -> Option<String> {
    let wanted = normalize_label(label);
    let labels = library.labels();
    if labels.iter().any(|l| *l == wanted) {
        return Some(wanted);
    }
    best_match(&wanted, labels.iter().map(String::as_str), FUZZY_MATCH_THRESHOLD).map(ToString::to_string)
}

/// Uniformly random clip among the files of the resolved label.
pub fn retrieve_clip<L: ClipLibrary + ?Sized, R: Rng + ?Sized>(
    library: &L,
    label: &str,
    rng: &mut R,
) -> Result<Arc<SourceClip>, LibraryError> {
    let resolved = resolve_label(library, label).ok_or_else(|| LibraryError::CatalogMiss { label: label.into() })?;
    let count = library.clip_count(&resolved);
    if count == 0 {
        return Err(LibraryError::CatalogMiss { label: label.into() });
    }
    library.load(&resolved, rng.gen_range(0..count))
}

/// Fits to the scene duration and normalizes to the reference level.
pub fn prepare_clip(clip: &SourceClip, duration_seconds: f64) -> Result<SourceClip, AudioError> {
    normalize_rms(&fit_duration(clip, duration_seconds), REFERENCE_DBFS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub k_min: usize,
    pub k_max: usize,
    pub duration_seconds: f64,
    pub gain_min_db: f64,
    pub gain_max_db: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self { k_min: 2, k_max: 5, duration_seconds: CANONICAL_SECONDS, gain_min_db: -6.0, gain_max_db: 0.0 }
    }
}

/// Samples `K ~ U{k_min..k_max}` distinct labels with random clip, direction and gain.
pub fn sample_scene<L: ClipLibrary + ?Sized, R: Rng + ?Sized>(
    library: &L,
    rng: &mut R,
    params: &SceneParams,
) -> Result<Scene, LibraryError> {
    assert!(params.k_min >= 1 && params.k_min <= params.k_max, "invalid event-count range");
    let labels = library.labels();
    if labels.len() < params.k_max {
        return Err(LibraryError::EmptyCatalog { available: labels.len(), needed: params.k_max });
    }
    let k = rng.gen_range(params.k_min..=params.k_max);
    let picked = rand::seq::index::sample(rng, labels.len(), k);
    let mut scene = Scene::new(params.duration_seconds);
    for i in picked.iter() {
        let label = &labels[i];
        let count = library.clip_count(label);
        if count == 0 {
            return Err(LibraryError::CatalogMiss { label: label.clone() });
        }
        let raw = library.load(label, rng.gen_range(0..count))?;
        let direction = *Direction::ALL.choose(rng).expect("non-empty");
        let gain = rng.gen_range(params.gain_min_db..=params.gain_max_db);
        let clip = prepare_clip(&raw, params.duration_seconds)?;
        scene.push(label.clone(), Arc::new(clip), direction, GainDb(gain));
    }
    Ok(scene)
}

/// In-memory library, mostly for tests and embedding.
#[derive(Debug, Clone, Default)]
pub struct MemoryLibrary {
    entries: BTreeMap<String, Vec<Arc<SourceClip>>>,
}

impl MemoryLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, clip: SourceClip) {
        self.entries.entry(normalize_label(&clip.label)).or_default().push(Arc::new(clip));
    }
}

impl ClipLibrary for MemoryLibrary {
    fn labels(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    fn clip_count(&self, label: &str) -> usize {
        self.entries.get(label).map_or(0, Vec::len)
    }

    fn load(&self, label: &str, index: usize) -> Result<Arc<SourceClip>, LibraryError> {
        self.entries
            .get(label)
            .and_then(|clips| clips.get(index))
            .cloned()
            .ok_or_else(|| LibraryError::CatalogMiss { label: label.into() })
    }
}
