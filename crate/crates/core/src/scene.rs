use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::audio::{seconds_to_samples, AudioBuffer, SourceClip, CANONICAL_SECONDS};
use crate::spatial::{spatialize, Direction, GainDb};

/// Scene-unique event token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub String);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One independently parameterized sound event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub event_id: EventId,
    pub label: String,
    /// Mono clip already fitted to the scene duration and normalized.
    pub clip: Arc<SourceClip>,
    pub direction: Direction,
    pub gain_db: GainDb,
}

impl EventSpec {
    /// This event's spatialized contribution to the mix.
    pub fn render(&self) -> AudioBuffer {
        spatialize(&self.clip, self.direction, self.gain_db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub events: Vec<EventSpec>,
    pub duration_seconds: f64,
    next_id: u64,
}

impl Default for Scene {
    fn default() -> Self {
        Self::new(CANONICAL_SECONDS)
    }
}

impl Scene {
    pub fn new(duration_seconds: f64) -> Self {
        Self { events: Vec::new(), duration_seconds, next_id: 0 }
    }

    pub fn len_samples(&self) -> usize {
        seconds_to_samples(self.duration_seconds)
    }

    /// Appends an event with a fresh id and returns that id.
    pub fn push(&mut self, label: impl Into<String>, clip: Arc<SourceClip>, direction: Direction, gain_db: GainDb) -> EventId {
        assert_eq!(clip.len(), self.len_samples(), "clip not fitted to the scene duration");
        let event_id = EventId(format!("e{}", self.next_id));
        self.next_id += 1;
        self.events.push(EventSpec { event_id: event_id.clone(), label: label.into(), clip, direction, gain_db });
        event_id
    }

    pub fn event(&self, id: &EventId) -> Option<&EventSpec> {
        self.events.iter().find(|e| &e.event_id == id)
    }

    pub fn event_mut(&mut self, id: &EventId) -> Option<&mut EventSpec> {
        self.events.iter_mut().find(|e| &e.event_id == id)
    }

    pub fn remove(&mut self, id: &EventId) -> Option<EventSpec> {
        let pos = self.events.iter().position(|e| &e.event_id == id)?;
        Some(self.events.remove(pos))
    }

    pub fn labels(&self) -> Vec<String> {
        self.events.iter().map(|e| e.label.clone()).collect()
    }

    /// Sub-scene holding only the events accepted by `keep`, ids preserved.
    pub fn filtered(&self, mut keep: impl FnMut(&EventSpec) -> bool) -> Scene {
        Scene {
            events: self.events.iter().filter(|e| keep(e)).cloned().collect(),
            duration_seconds: self.duration_seconds,
            next_id: self.next_id,
        }
    }
}

/// Superposition of every event's spatialized contribution. No clipping.
pub fn render_scene(scene: &Scene) -> AudioBuffer {
    let mut mix = AudioBuffer::silent(scene.len_samples());
    for event in &scene.events {
        mix.mix_in(&event.render());
    }
    mix
}
