//! Deterministic engine for declarative stereo scene editing.
//!
//! A [`Scene`] is a set of independently parameterized sound events (label,
//! direction, gain) over mono source clips. Rendering spatializes every event
//! onto two channels and superposes them. Atomic edit steps ([`AtomicStep`])
//! are executed as exact event-level parameter changes, so the engine doubles
//! as an oracle editor against which learned editors can be measured with the
//! signal metrics in [`metrics`].
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the clip
//! catalog on disk, HTTP designers and the CLI live in the `scenedit` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod audio;
pub mod designer;
pub mod engine;
pub mod fft;
pub mod label;
pub mod library;
pub mod metrics;
pub mod plan;
pub mod resample;
pub mod scene;
pub mod seed;
pub mod spatial;

pub use audio::{AudioBuffer, AudioError, SourceClip, CANONICAL_LEN, REFERENCE_DBFS, SAMPLE_RATE_HZ};
pub use engine::{apply_step, execute_plan, match_target, EditError, EditOutcome, Editor, EditorError, OracleEditor, PlanError, TrajectoryStep};
pub use library::{ClipLibrary, LibraryError, SceneParams};
pub use plan::{AtomicStep, EditPlan, StepKind};
pub use scene::{render_scene, EventId, EventSpec, Scene};
pub use spatial::{itd_samples, spatialize, Direction, GainDb};

/// Deterministic RNG used for every random choice in the engine.
pub type SeededRng = rand_chacha::ChaCha8Rng;
