use rand::{Rng, SeedableRng};
use scenedit_core::library::{sample_scene, MemoryLibrary};
use scenedit_core::metrics::{expected_step_delta, residual_error};
use scenedit_core::plan::canonicalize_steps;
use scenedit_core::{
    apply_step, execute_plan, render_scene, AtomicStep, ClipLibrary, Direction, EditError, GainDb, Scene, SceneParams,
    SeededRng, SourceClip,
};

const DUR: f64 = 0.5;
const LABELS: &[&str] = &["dog bark", "rain", "bird chirp", "wind", "siren", "clock tick", "thunder"];

fn library() -> MemoryLibrary {
    let mut lib = MemoryLibrary::new();
    let mut rng = SeededRng::seed_from_u64(3);
    for label in LABELS {
        for _ in 0..2 {
            let samples = (0..12_000).map(|_| rng.gen_range(-0.5..0.5)).collect();
            lib.insert(SourceClip { label: label.to_string(), samples, sample_rate_hz: 24_000, origin_path: String::new() });
        }
    }
    lib
}

fn params() -> SceneParams {
    SceneParams { duration_seconds: DUR, ..SceneParams::default() }
}

fn random_scene(lib: &MemoryLibrary, seed: u64) -> Scene {
    sample_scene(lib, &mut SeededRng::seed_from_u64(seed), &params()).unwrap()
}

fn pick(scene: &Scene, rng: &mut SeededRng) -> String {
    scene.events[rng.gen_range(0..scene.events.len())].label.clone()
}

fn absent(lib: &MemoryLibrary, scene: &Scene, rng: &mut SeededRng) -> String {
    let present = scene.labels();
    let free: Vec<String> = lib.labels().into_iter().filter(|l| !present.contains(l)).collect();
    free[rng.gen_range(0..free.len())].clone()
}

#[test]
fn add_then_remove_restores() {
    let lib = library();
    for seed in 0..30 {
        let scene = random_scene(&lib, seed);
        let mut rng = SeededRng::seed_from_u64(seed + 100);
        let label = absent(&lib, &scene, &mut rng);
        let dir = Direction::ALL[rng.gen_range(0..3)];
        let added = apply_step(&scene, &AtomicStep::add(&label, Some(dir), Some(rng.gen_range(-3.0..3.0))), Some(&lib), &mut rng).unwrap();
        let back = apply_step(&added.scene_after, &AtomicStep::remove(&label), None, &mut rng).unwrap();
        assert!(back.audio_after.max_abs_diff(&render_scene(&scene)) <= 1e-7);
    }
}

#[test]
fn extract_plus_remove_is_mix() {
    let lib = library();
    for seed in 0..30 {
        let scene = random_scene(&lib, seed);
        let mut rng = SeededRng::seed_from_u64(seed);
        let label = pick(&scene, &mut rng);
        let only = apply_step(&scene, &AtomicStep::Extract { label: label.clone(), direction: None }, None, &mut rng).unwrap();
        let rest = apply_step(&scene, &AtomicStep::remove(&label), None, &mut rng).unwrap();
        let mut sum = only.audio_after.clone();
        sum.mix_in(&rest.audio_after);
        assert!(sum.max_abs_diff(&render_scene(&scene)) <= 1e-7);
    }
}

#[test]
fn up_down_and_change_invert() {
    let lib = library();
    for seed in 0..30 {
        let scene = random_scene(&lib, seed);
        let original = render_scene(&scene);
        let mut rng = SeededRng::seed_from_u64(seed);
        let label = pick(&scene, &mut rng);
        let d = GainDb(rng.gen_range(0.0..6.0));
        let up = apply_step(&scene, &AtomicStep::TurnUp { label: label.clone(), delta_db: d }, None, &mut rng).unwrap();
        let down = apply_step(&up.scene_after, &AtomicStep::TurnDown { label: label.clone(), delta_db: d }, None, &mut rng).unwrap();
        assert!(down.audio_after.max_abs_diff(&original) <= 1e-7);

        let from = scene.events.iter().find(|e| e.label == label).unwrap().direction;
        let to = Direction::ALL[(Direction::ALL.iter().position(|x| *x == from).unwrap() + 1) % 3];
        let there = apply_step(&scene, &AtomicStep::Change { label: label.clone(), from: Some(from), to }, None, &mut rng).unwrap();
        let back = apply_step(&there.scene_after, &AtomicStep::Change { label, from: Some(to), to: from }, None, &mut rng).unwrap();
        assert!(back.audio_after.max_abs_diff(&original) <= 1e-7);
    }
}

#[test]
fn steps_only_touch_their_target() {
    let lib = library();
    for seed in 0..20 {
        let scene = random_scene(&lib, seed);
        let mut rng = SeededRng::seed_from_u64(seed);
        let label = pick(&scene, &mut rng);
        let step = match seed % 3 {
            0 => AtomicStep::TurnDown { label, delta_db: GainDb(4.0) },
            1 => AtomicStep::Change { label, from: None, to: Direction::Left },
            _ => AtomicStep::add(absent(&lib, &scene, &mut rng), Some(Direction::Right), Some(1.0)),
        };
        let out = apply_step(&scene, &step, Some(&lib), &mut rng).unwrap();
        for e in &scene.events {
            if !out.edited_event_ids.contains(&e.event_id) {
                assert_eq!(out.scene_after.event(&e.event_id), Some(e));
            }
        }
        let delta = expected_step_delta(&scene, &out.scene_after, &out.edited_event_ids);
        assert!(residual_error(&render_scene(&scene), &out.audio_after, &delta) <= 1e-7);
    }
}

#[test]
fn turn_up_scales_isolated_event() {
    let lib = library();
    let scene = random_scene(&lib, 5);
    let label = scene.events[0].label.clone();
    let before = scene.events[0].render().rms();
    for d in [2.0, 3.0, 6.0] {
        let out = apply_step(&scene, &AtomicStep::TurnUp { label: label.clone(), delta_db: GainDb(d) }, None, &mut SeededRng::seed_from_u64(0)).unwrap();
        let after = out.scene_after.events[0].render().rms();
        let ratio = after / before;
        assert!((ratio / 10f64.powf(d / 20.0) - 1.0).abs() <= 1e-4, "{d}: {ratio}");
    }
}

#[test]
fn error_cases() {
    let lib = library();
    let mut rng = SeededRng::seed_from_u64(0);
    let mut scene = random_scene(&lib, 1);
    let err = apply_step(&scene, &AtomicStep::remove("spaceship"), None, &mut rng).unwrap_err();
    assert!(matches!(err, EditError::TargetNotFound { .. }));
    let err = apply_step(&scene, &AtomicStep::add("spaceship", None, None), Some(&lib), &mut rng).unwrap_err();
    assert!(matches!(err, EditError::CatalogMiss { .. }));
    let err = apply_step(&scene, &AtomicStep::add("rain", None, None), None, &mut rng).unwrap_err();
    assert!(matches!(err, EditError::MissingCatalog));

    let dup = scene.events[0].clone();
    let other = if dup.direction == Direction::Left { Direction::Right } else { Direction::Left };
    scene.push(dup.label.clone(), dup.clip.clone(), other, GainDb(0.0));
    let err = apply_step(&scene, &AtomicStep::remove(&dup.label), None, &mut rng).unwrap_err();
    assert!(matches!(err, EditError::AmbiguousTarget { count: 2, .. }));
    let ok = AtomicStep::Remove { label: dup.label.clone(), direction: Some(other) };
    assert!(apply_step(&scene, &ok, None, &mut rng).is_ok());

    let single = scene.filtered(|e| e.event_id == dup.event_id);
    let err = apply_step(&single, &AtomicStep::remove(&dup.label), None, &mut rng).unwrap_err();
    assert!(matches!(err, EditError::EmptySceneResult { .. }));
}

#[test]
fn canonical_order_gives_same_audio() {
    let lib = library();
    for seed in 0..20 {
        let scene = random_scene(&lib, seed);
        let mut rng = SeededRng::seed_from_u64(seed);
        let labels = scene.labels();
        let steps = vec![
            AtomicStep::add(absent(&lib, &scene, &mut rng), Some(Direction::Left), Some(2.0)),
            AtomicStep::TurnDown { label: labels[0].clone(), delta_db: GainDb(3.0) },
            AtomicStep::remove(labels[1].clone()),
        ];
        let original = execute_plan(&scene, &steps, Some(&lib), &mut SeededRng::seed_from_u64(seed)).unwrap();
        let canonical =
            execute_plan(&scene, &canonicalize_steps(&steps), Some(&lib), &mut SeededRng::seed_from_u64(seed)).unwrap();
        let (a, b) = (&original.last().unwrap().audio, &canonical.last().unwrap().audio);
        assert!(a.max_abs_diff(b) <= 1e-7);
        assert_eq!(original.len(), steps.len() + 1);
    }
}
