use std::collections::BTreeSet;

use rand::SeedableRng;
use scenedit_core::designer::design_plan_template;
use scenedit_core::plan::{validate_plan, RuleId};
use scenedit_core::{AtomicStep, EditPlan, GainDb, SeededRng};

fn labels(ls: &[&str]) -> Vec<String> {
    ls.iter().map(|s| s.to_string()).collect()
}

fn rules_of(steps: Vec<AtomicStep>, scene: &[&str]) -> BTreeSet<RuleId> {
    let plan = EditPlan { instruction: "x".into(), sound_sources: labels(scene), steps };
    validate_plan(&plan, &labels(scene)).rules()
}

const SCENE: &[&str] = &["clock tick", "bird chirp", "wind"];

#[test]
fn remove_all_sources() {
    let steps = vec![AtomicStep::remove("clock tick"), AtomicStep::remove("bird chirp"), AtomicStep::remove("wind")];
    assert_eq!(rules_of(steps, SCENE), [RuleId::R2].into());
    assert_eq!(rules_of(vec![AtomicStep::remove("a"), AtomicStep::remove("b")], &["a", "b"]), [RuleId::R2].into());
}

#[test]
fn too_many_adds() {
    let steps = vec![
        AtomicStep::add("rooster crowing", None, None),
        AtomicStep::add("gentle breeze", None, Some(2.0)),
        AtomicStep::add("crowd chatter", None, None),
    ];
    assert_eq!(rules_of(steps, SCENE), [RuleId::R3].into());
}

#[test]
fn volume_outside_range() {
    for db in [-1.0, 6.5, 12.0] {
        let steps = vec![AtomicStep::TurnUp { label: "wind".into(), delta_db: GainDb(db) }];
        assert_eq!(rules_of(steps, SCENE), [RuleId::R5].into(), "{db}");
    }
    for db in [0.0, 6.0] {
        let steps = vec![AtomicStep::TurnDown { label: "wind".into(), delta_db: GainDb(db) }];
        assert!(rules_of(steps, SCENE).is_empty());
    }
}

#[test]
fn unmatched_target() {
    assert_eq!(rules_of(vec![AtomicStep::remove("thunder")], SCENE), [RuleId::R1].into());
}

#[test]
fn duplicate_add() {
    assert_eq!(rules_of(vec![AtomicStep::add("Bird  Chirp", None, None)], SCENE), [RuleId::R4].into());
}

#[test]
fn target_added_later() {
    let steps = vec![
        AtomicStep::TurnUp { label: "owl hooting".into(), delta_db: GainDb(2.0) },
        AtomicStep::add("owl hooting", None, None),
    ];
    assert!(rules_of(steps, SCENE).contains(&RuleId::R6));
}

#[test]
fn target_deleted_elsewhere() {
    let steps = vec![
        AtomicStep::remove("wind"),
        AtomicStep::TurnUp { label: "wind".into(), delta_db: GainDb(2.0) },
    ];
    assert_eq!(rules_of(steps, SCENE), [RuleId::R7].into());
}

#[test]
fn violations_name_steps() {
    let plan = EditPlan {
        instruction: "x".into(),
        sound_sources: labels(SCENE),
        steps: vec![AtomicStep::remove("wind"), AtomicStep::remove("thunder")],
    };
    let report = validate_plan(&plan, &labels(SCENE));
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].step_index, Some(1));
}

#[test]
fn designed_plans_pass() {
    let pool = ["dog bark", "car engine", "rain", "bird chirp", "clock tick", "wind", "siren", "thunder", "sea waves"];
    let mut rng = SeededRng::seed_from_u64(11);
    for i in 0..10_000 {
        let k = 2 + i % 4;
        let scene: Vec<String> = (0..k).map(|j| pool[(i * 7 + j * 2) % pool.len()].to_string()).collect();
        let plan = design_plan_template(&scene, &mut rng).unwrap();
        let report = validate_plan(&plan, &scene);
        assert!(report.is_valid(), "{scene:?} {plan:?} {report:?}");
    }
}
