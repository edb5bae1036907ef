//! JSON scene descriptions.
//!
//! ```json
//! {
//!   "duration_seconds": 10,
//!   "events": [
//!     {"label": "dog bark", "clip": "clips/dog.wav", "direction": "left", "gain_db": -3}
//!   ]
//! }
//! ```
//!
//! `clip` paths are resolved against the scene file's directory. Each clip is
//! fitted to the duration and normalized to the reference level on load, so a
//! description re-renders to exactly the audio it was written from.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use scenedit_core::library::prepare_clip;
use scenedit_core::{Direction, EventId, GainDb, Scene};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::wav::{self, WavError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDescription {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<EventId>,
    pub label: String,
    pub clip: String,
    pub direction: Direction,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub duration_seconds: f64,
    pub events: Vec<EventDescription>,
}

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error("{path}: invalid JSON: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{field}: {message}")]
    Audio { field: String, message: String },
}

impl SceneFileError {
    pub fn is_schema(&self) -> bool {
        matches!(self, SceneFileError::Syntax { .. } | SceneFileError::Schema { .. })
    }
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> SceneFileError {
    SceneFileError::Schema { field: field.into(), message: message.into() }
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, at: &str) -> Result<&'a Value, SceneFileError> {
    obj.get(key).ok_or_else(|| schema(format!("{at}.{key}"), "missing"))
}

fn parse_event(v: &Value, at: &str) -> Result<EventDescription, SceneFileError> {
    let obj = v.as_object().ok_or_else(|| schema(at, "expected an object"))?;
    let text = |key: &str| -> Result<String, SceneFileError> {
        field(obj, key, at)?.as_str().map(String::from).ok_or_else(|| schema(format!("{at}.{key}"), "expected a string"))
    };
    let label = text("label")?;
    if label.trim().is_empty() {
        return Err(schema(format!("{at}.label"), "empty label"));
    }
    let direction_text = text("direction")?;
    let direction: Direction = direction_text
        .parse()
        .map_err(|_| schema(format!("{at}.direction"), format!("unknown direction {direction_text:?}; expected left, front or right")))?;
    let gain_db = match obj.get("gain_db") {
        None => 0.0,
        Some(g) => g.as_f64().filter(|g| g.is_finite()).ok_or_else(|| schema(format!("{at}.gain_db"), "expected a number"))?,
    };
    let event_id = match obj.get("event_id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(EventId(s.clone())),
        Some(_) => return Err(schema(format!("{at}.event_id"), "expected a string")),
    };
    Ok(EventDescription { event_id, label, clip: text("clip")?, direction, gain_db })
}

pub fn parse_scene_description(text: &str, path: &Path) -> Result<SceneDescription, SceneFileError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| SceneFileError::Syntax { path: path.into(), message: e.to_string() })?;
    let obj = root.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    let duration_seconds = match obj.get("duration_seconds") {
        None => scenedit_core::audio::CANONICAL_SECONDS,
        Some(d) => d
            .as_f64()
            .filter(|d| *d > 0.0 && d.is_finite())
            .ok_or_else(|| schema("$.duration_seconds", "expected a positive number"))?,
    };
    let events = field(obj, "events", "$")?.as_array().ok_or_else(|| schema("$.events", "expected an array"))?;
    let events = events.iter().enumerate().map(|(i, e)| parse_event(e, &format!("$.events[{i}]"))).collect::<Result<_, _>>()?;
    Ok(SceneDescription { duration_seconds, events })
}

pub fn read_scene_description(path: &Path) -> Result<SceneDescription, SceneFileError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| SceneFileError::Io { path: path.into(), message: e.to_string() })?;
    parse_scene_description(&text, path)
}

/// Builds the scene, loading clips relative to `base_dir`.
pub fn build_scene(desc: &SceneDescription, base_dir: &Path) -> Result<Scene, SceneFileError> {
    let mut scene = Scene::new(desc.duration_seconds);
    for (i, e) in desc.events.iter().enumerate() {
        let clip_path = base_dir.join(&e.clip);
        let raw = wav::load_clip(&clip_path, &e.label)?;
        let clip = prepare_clip(&raw, desc.duration_seconds)
            .map_err(|err| SceneFileError::Audio { field: format!("$.events[{i}].clip"), message: err.to_string() })?;
        scene.push(e.label.clone(), Arc::new(clip), e.direction, GainDb(e.gain_db));
    }
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneFileError> {
    let desc = read_scene_description(path)?;
    build_scene(&desc, path.parent().unwrap_or(Path::new(".")))
}

/// Description of a scene whose clips came from files; paths are the clips' origins.
pub fn describe_scene(scene: &Scene) -> SceneDescription {
    SceneDescription {
        duration_seconds: scene.duration_seconds,
        events: scene
            .events
            .iter()
            .map(|e| EventDescription {
                event_id: Some(e.event_id.clone()),
                label: e.label.clone(),
                clip: e.clip.origin_path.clone(),
                direction: e.direction,
                gain_db: e.gain_db.0,
            })
            .collect(),
    }
}
