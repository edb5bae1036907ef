use alloc::vec::Vec;

use super::{AtomicStep, EditPlan};

fn group(step: &AtomicStep) -> u8 {
    match step {
        AtomicStep::Remove { .. } | AtomicStep::Extract { .. } => 0,
        AtomicStep::TurnUp { .. } | AtomicStep::TurnDown { .. } | AtomicStep::Change { .. } => 1,
        AtomicStep::Add { .. } => 2,
    }
}

/// Stable reorder into remove/extract, then volume/direction, then add.
pub fn canonicalize_steps(steps: &[AtomicStep]) -> Vec<AtomicStep> {
    let mut out = steps.to_vec();
    out.sort_by_key(group);
    out
}

pub fn canonicalize_plan(plan: &EditPlan) -> EditPlan {
    EditPlan { steps: canonicalize_steps(&plan.steps), ..plan.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::GainDb;

    #[test]
    fn groups_in_order_and_idempotent() {
        let up = AtomicStep::TurnUp { label: "c".into(), delta_db: GainDb(1.0) };
        let steps = [AtomicStep::add("a", None, None), AtomicStep::remove("b"), up.clone()];
        let canon = canonicalize_steps(&steps);
        assert_eq!(canon, [AtomicStep::remove("b"), up, AtomicStep::add("a", None, None)]);
        assert_eq!(canonicalize_steps(&canon), canon);
    }
}
