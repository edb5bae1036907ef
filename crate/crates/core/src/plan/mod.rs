//! Atomic edit steps and edit plans, in template-text and JSON surface forms.

mod canonical;
mod json;
mod template;
mod validate;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use canonical::{canonicalize_plan, canonicalize_steps};
pub use json::{parse_plan_json, plan_to_json, plan_to_json_string, step_effect, JsonPlanError, ParsedPlan};
pub use template::{parse_step, parse_steps, serialize_step, ParseError};
pub use validate::{validate_plan, RuleId, ValidationReport, Violation};

use crate::spatial::{Direction, GainDb};

#[derive(Debug, Clone, PartialEq)]
pub enum AtomicStep {
    Add { label: String, direction: Option<Direction>, gain_db: Option<GainDb> },
    Remove { label: String, direction: Option<Direction> },
    Extract { label: String, direction: Option<Direction> },
    TurnUp { label: String, delta_db: GainDb },
    TurnDown { label: String, delta_db: GainDb },
    Change { label: String, from: Option<Direction>, to: Direction },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Add,
    Remove,
    Extract,
    TurnUp,
    TurnDown,
    Change,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Add => "add",
            StepKind::Remove => "remove",
            StepKind::Extract => "extract",
            StepKind::TurnUp => "turn up",
            StepKind::TurnDown => "turn down",
            StepKind::Change => "change",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl AtomicStep {
    pub fn kind(&self) -> StepKind {
        match self {
            AtomicStep::Add { .. } => StepKind::Add,
            AtomicStep::Remove { .. } => StepKind::Remove,
            AtomicStep::Extract { .. } => StepKind::Extract,
            AtomicStep::TurnUp { .. } => StepKind::TurnUp,
            AtomicStep::TurnDown { .. } => StepKind::TurnDown,
            AtomicStep::Change { .. } => StepKind::Change,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            AtomicStep::Add { label, .. }
            | AtomicStep::Remove { label, .. }
            | AtomicStep::Extract { label, .. }
            | AtomicStep::TurnUp { label, .. }
            | AtomicStep::TurnDown { label, .. }
            | AtomicStep::Change { label, .. } => label,
        }
    }

    /// Direction used to disambiguate the target of a non-Add step.
    pub fn target_direction(&self) -> Option<Direction> {
        match self {
            AtomicStep::Remove { direction, .. } | AtomicStep::Extract { direction, .. } => *direction,
            AtomicStep::Change { from, .. } => *from,
            _ => None,
        }
    }

    pub fn is_add(&self) -> bool {
        matches!(self, AtomicStep::Add { .. })
    }

    pub fn add(label: impl Into<String>, direction: Option<Direction>, gain_db: Option<f64>) -> Self {
        AtomicStep::Add { label: label.into(), direction, gain_db: gain_db.map(GainDb) }
    }

    pub fn remove(label: impl Into<String>) -> Self {
        AtomicStep::Remove { label: label.into(), direction: None }
    }
}

impl fmt::Display for AtomicStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_step(self))
    }
}

/// High-level instruction, the source inventory it was written for, and its steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EditPlan {
    pub instruction: String,
    pub sound_sources: Vec<String>,
    pub steps: Vec<AtomicStep>,
}
