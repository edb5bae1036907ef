//! Plan validation against the sound sources of the scene it will edit.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use super::{AtomicStep, EditPlan};
use crate::label::normalize_label;

/// Maximum number of Add steps per plan.
pub const MAX_ADDS: usize = 2;
/// Maximum number of Remove steps per plan.
pub const MAX_REMOVES: usize = 2;
/// Inclusive range for turn up/down deltas.
pub const VOLUME_DELTA_RANGE_DB: (f64, f64) = (0.0, 6.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RuleId {
    /// Non-Add target does not match a scene source.
    R1,
    /// Remove count outside 1..=2, or no source left.
    R2,
    /// More than two Add steps.
    R3,
    /// Added label duplicates a scene source.
    R4,
    /// Volume delta outside [0, 6] dB.
    R5,
    /// Step targets a label only introduced by a later step.
    R6,
    /// Step targets (or adds into) a source that another Remove/Extract deletes.
    R7,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: RuleId,
    pub step_index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rules(&self) -> BTreeSet<RuleId> {
        self.violations.iter().map(|v| v.rule).collect()
    }

    fn push(&mut self, rule: RuleId, step_index: Option<usize>, message: String) {
        self.violations.push(Violation { rule, step_index, message });
    }
}

/// Labels a deleting step removes from the scene.
fn deleted_by(step: &AtomicStep, scene: &[String]) -> Vec<String> {
    let target = normalize_label(step.label());
    match step {
        AtomicStep::Remove { .. } => alloc::vec![target],
        AtomicStep::Extract { .. } => scene.iter().filter(|l| **l != target).cloned().collect(),
        _ => Vec::new(),
    }
}

pub fn validate_plan(plan: &EditPlan, scene_labels: &[String]) -> ValidationReport {
    let scene: Vec<String> = scene_labels.iter().map(|l| normalize_label(l)).collect();
    let mut report = ValidationReport::default();
    let steps = &plan.steps;

    for (i, step) in steps.iter().enumerate() {
        let target = normalize_label(step.label());
        match step {
            AtomicStep::Add { label, .. } => {
                if scene.contains(&target) {
                    report.push(RuleId::R4, Some(i), format!("added sound {label:?} duplicates an original source"));
                }
            }
            other => {
                if !scene.contains(&target) {
                    report.push(RuleId::R1, Some(i), format!("target {:?} matches no sound source", other.label()));
                }
                let later_add = steps[i + 1..].iter().any(|s| s.is_add() && normalize_label(s.label()) == target);
                if later_add {
                    report.push(RuleId::R6, Some(i), format!("target {:?} is only introduced by a later step", other.label()));
                }
            }
        }
        if let AtomicStep::TurnUp { delta_db, .. } | AtomicStep::TurnDown { delta_db, .. } = step {
            let (lo, hi) = VOLUME_DELTA_RANGE_DB;
            if !(lo..=hi).contains(&delta_db.0) {
                report.push(RuleId::R5, Some(i), format!("volume change {} dB outside [{lo}, {hi}]", delta_db.0));
            }
        }
    }

    let removes = steps.iter().filter(|s| matches!(s, AtomicStep::Remove { .. })).count();
    if removes > 0 && (removes > MAX_REMOVES || scene.len() <= removes) {
        report.push(
            RuleId::R2,
            None,
            format!("{removes} remove step(s) on {} source(s); remove 1 to {MAX_REMOVES} and keep at least one", scene.len()),
        );
    }

    let adds: Vec<usize> = steps.iter().enumerate().filter(|(_, s)| s.is_add()).map(|(i, _)| i).collect();
    if adds.len() > MAX_ADDS {
        report.push(RuleId::R3, Some(adds[MAX_ADDS]), format!("{} add steps; at most {MAX_ADDS} allowed", adds.len()));
    }

    for (d, deleter) in steps.iter().enumerate() {
        let gone = deleted_by(deleter, &scene);
        if gone.is_empty() {
            continue;
        }
        for (i, step) in steps.iter().enumerate() {
            if i != d && !step.is_add() && gone.contains(&normalize_label(step.label())) {
                report.push(
                    RuleId::R7,
                    Some(i),
                    format!("target {:?} is deleted by step {d}", step.label()),
                );
            }
        }
        if matches!(deleter, AtomicStep::Extract { .. }) && adds.iter().any(|&a| a < d) {
            report.push(RuleId::R7, Some(d), String::from("extract would also delete sounds added by earlier steps"));
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{Direction, GainDb};

    fn labels(ls: &[&str]) -> Vec<String> {
        ls.iter().map(|s| String::from(*s)).collect()
    }

    fn plan(steps: Vec<AtomicStep>) -> EditPlan {
        EditPlan { instruction: "x".into(), sound_sources: Vec::new(), steps }
    }

    #[test]
    fn remove_all_is_r2() {
        let r = validate_plan(&plan(alloc::vec![AtomicStep::remove("a"), AtomicStep::remove("b")]), &labels(&["a", "b"]));
        assert_eq!(r.rules(), [RuleId::R2].into());
    }

    #[test]
    fn three_adds_is_r3() {
        let steps = (0..3).map(|i| AtomicStep::add(format!("new {i}"), None, None)).collect();
        assert_eq!(validate_plan(&plan(steps), &labels(&["a"])).rules(), [RuleId::R3].into());
    }

    #[test]
    fn volume_out_of_range_is_r5() {
        let up = AtomicStep::TurnUp { label: "a".into(), delta_db: GainDb(9.0) };
        let down = AtomicStep::TurnDown { label: "a".into(), delta_db: GainDb(-1.0) };
        let r = validate_plan(&plan(alloc::vec![up, down]), &labels(&["a", "b"]));
        assert_eq!(r.rules(), [RuleId::R5].into());
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn later_added_target_is_r6() {
        let steps = alloc::vec![
            AtomicStep::TurnUp { label: "wind".into(), delta_db: GainDb(1.0) },
            AtomicStep::add("wind", Some(Direction::Left), None),
        ];
        assert_eq!(validate_plan(&plan(steps), &labels(&["a"])).rules(), [RuleId::R1, RuleId::R6].into());
    }

    #[test]
    fn modifying_a_removed_source_is_r7() {
        let steps = alloc::vec![
            AtomicStep::TurnUp { label: "a".into(), delta_db: GainDb(1.0) },
            AtomicStep::remove("a"),
        ];
        assert_eq!(validate_plan(&plan(steps), &labels(&["a", "b"])).rules(), [RuleId::R7].into());
        let extract_after_add = alloc::vec![
            AtomicStep::add("c", None, None),
            AtomicStep::Extract { label: "a".into(), direction: None },
        ];
        assert_eq!(validate_plan(&plan(extract_after_add), &labels(&["a", "b"])).rules(), [RuleId::R7].into());
    }

    #[test]
    fn normalized_labels_match() {
        let steps = alloc::vec![AtomicStep::remove("Dog  Bark"), AtomicStep::add("Rain ", None, None)];
        let r = validate_plan(&plan(steps), &labels(&["dog bark", "cat"]));
        assert!(r.is_valid(), "{r:?}");
    }
}
