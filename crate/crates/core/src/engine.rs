//! Exact execution of atomic steps as event-level scene mutations.
//!
//! Every step edits event parameters and re-renders the mixture, so unedited
//! events are reproduced bit-for-bit. [`OracleEditor`] wraps this behind the
//! generic [`Editor`] trait that learned or external editors also implement.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::audio::{AudioBuffer, AudioError};
use crate::label::normalize_label;
use crate::library::{prepare_clip, retrieve_clip, ClipLibrary, LibraryError};
use crate::plan::AtomicStep;
use crate::scene::{render_scene, EventId, Scene};
use crate::spatial::{Direction, GainDb};
use crate::SeededRng;

/// Direction used when an Add step does not specify one.
pub const DEFAULT_ADD_DIRECTION: Direction = Direction::Front;
/// Gain used when an Add step does not specify one.
pub const DEFAULT_ADD_GAIN: GainDb = GainDb(0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("no event matches {label:?}{}", direction.map(|d| alloc::format!(" at {d}")).unwrap_or_default())]
    TargetNotFound { label: String, direction: Option<Direction> },
    #[error("{count} events match {label:?}; add a direction to disambiguate")]
    AmbiguousTarget { label: String, count: usize },
    #[error("removing {label:?} would leave the scene empty")]
    EmptySceneResult { label: String },
    #[error("no catalog clip matches {label:?}")]
    CatalogMiss { label: String },
    #[error("add step needs a clip catalog")]
    MissingCatalog,
    #[error(transparent)]
    Library(LibraryError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl From<LibraryError> for EditError {
    fn from(e: LibraryError) -> Self {
        match e {
            LibraryError::CatalogMiss { label } => EditError::CatalogMiss { label },
            LibraryError::Audio(a) => EditError::Audio(a),
            other => EditError::Library(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditOutcome {
    pub scene_after: Scene,
    pub audio_after: AudioBuffer,
    pub edited_event_ids: Vec<EventId>,
}

/// Events whose label matches under normalization, optionally filtered by direction.
pub fn match_target(scene: &Scene, label: &str, direction: Option<Direction>) -> Vec<EventId> {
    let wanted = normalize_label(label);
    scene
        .events
        .iter()
        .filter(|e| normalize_label(&e.label) == wanted)
        .filter(|e| direction.is_none_or(|d| e.direction == d))
        .map(|e| e.event_id.clone())
        .collect()
}

fn resolve_one(scene: &Scene, step: &AtomicStep) -> Result<EventId, EditError> {
    let mut ids = match_target(scene, step.label(), step.target_direction());
    match ids.len() {
        0 => Err(EditError::TargetNotFound { label: step.label().into(), direction: step.target_direction() }),
        1 => Ok(ids.remove(0)),
        count => Err(EditError::AmbiguousTarget { label: step.label().into(), count }),
    }
}

/// Applies one step to a copy of `scene`. Add steps need `library`.
pub fn apply_step<R: Rng + ?Sized>(
    scene: &Scene,
    step: &AtomicStep,
    library: Option<&dyn ClipLibrary>,
    rng: &mut R,
) -> Result<EditOutcome, EditError> {
    let mut after = scene.clone();
    let edited = match step {
        AtomicStep::Add { label, direction, gain_db } => {
            let library = library.ok_or(EditError::MissingCatalog)?;
            let raw = retrieve_clip(library, label, rng)?;
            let clip = prepare_clip(&raw, scene.duration_seconds)?;
            let id = after.push(
                label.clone(),
                Arc::new(clip),
                direction.unwrap_or(DEFAULT_ADD_DIRECTION),
                gain_db.unwrap_or(DEFAULT_ADD_GAIN),
            );
            alloc::vec![id]
        }
        AtomicStep::Remove { label, .. } => {
            let id = resolve_one(scene, step)?;
            if scene.events.len() == 1 {
                return Err(EditError::EmptySceneResult { label: label.clone() });
            }
            after.remove(&id);
            alloc::vec![id]
        }
        AtomicStep::Extract { .. } => {
            let id = resolve_one(scene, step)?;
            let removed: Vec<EventId> =
                scene.events.iter().filter(|e| e.event_id != id).map(|e| e.event_id.clone()).collect();
            after.events.retain(|e| e.event_id == id);
            removed
        }
        AtomicStep::TurnUp { delta_db, .. } | AtomicStep::TurnDown { delta_db, .. } => {
            let id = resolve_one(scene, step)?;
            let sign = if matches!(step, AtomicStep::TurnUp { .. }) { 1.0 } else { -1.0 };
            let event = after.event_mut(&id).expect("resolved id exists");
            event.gain_db = GainDb(event.gain_db.0 + sign * delta_db.0);
            alloc::vec![id]
        }
        AtomicStep::Change { to, .. } => {
            let id = resolve_one(scene, step)?;
            after.event_mut(&id).expect("resolved id exists").direction = *to;
            alloc::vec![id]
        }
    };
    let audio_after = render_scene(&after);
    Ok(EditOutcome { scene_after: after, audio_after, edited_event_ids: edited })
}

/// One element `a_i` of an editing trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub scene: Scene,
    pub audio: AudioBuffer,
    /// Events touched by the step that produced this element; empty for `a_0`.
    pub edited_event_ids: Vec<EventId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("step {step_index}: {source}")]
pub struct PlanError {
    pub step_index: usize,
    pub source: EditError,
}

/// Applies `steps` in order; element 0 is the untouched scene.
pub fn execute_plan<R: Rng + ?Sized>(
    scene: &Scene,
    steps: &[AtomicStep],
    library: Option<&dyn ClipLibrary>,
    rng: &mut R,
) -> Result<Vec<TrajectoryStep>, PlanError> {
    let mut trajectory = Vec::with_capacity(steps.len() + 1);
    trajectory.push(TrajectoryStep { scene: scene.clone(), audio: render_scene(scene), edited_event_ids: Vec::new() });
    for (step_index, step) in steps.iter().enumerate() {
        let current = &trajectory.last().expect("non-empty").scene;
        let out = apply_step(current, step, library, rng).map_err(|source| PlanError { step_index, source })?;
        trajectory.push(TrajectoryStep { scene: out.scene_after, audio: out.audio_after, edited_event_ids: out.edited_event_ids });
    }
    Ok(trajectory)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditorError {
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error("editor timed out after {seconds} s")]
    AdapterTimeout { seconds: f64 },
    #[error("editor protocol error: {0}")]
    AdapterProtocol(String),
    #[error("editor transport error: {0}")]
    Transport(String),
}

/// `a_i = edit(a_{i-1}, s_i)`.
pub trait Editor {
    fn id(&self) -> String;
    fn edit(&mut self, audio_before: &AudioBuffer, step: &AtomicStep) -> Result<AudioBuffer, EditorError>;
}

/// Scene-backed exact editor. Its state is the scene, not the incoming audio.
pub struct OracleEditor<'a> {
    scene: Scene,
    library: Option<&'a dyn ClipLibrary>,
    rng: SeededRng,
}

impl<'a> OracleEditor<'a> {
    pub fn new(scene: Scene, library: Option<&'a dyn ClipLibrary>, seed: u64) -> Self {
        Self { scene, library, rng: SeededRng::seed_from_u64(seed) }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn render(&self) -> AudioBuffer {
        render_scene(&self.scene)
    }
}

impl Editor for OracleEditor<'_> {
    fn id(&self) -> String {
        String::from("oracle")
    }

    fn edit(&mut self, _audio_before: &AudioBuffer, step: &AtomicStep) -> Result<AudioBuffer, EditorError> {
        let out = apply_step(&self.scene, step, self.library, &mut self.rng)?;
        self.scene = out.scene_after;
        Ok(out.audio_after)
    }
}
