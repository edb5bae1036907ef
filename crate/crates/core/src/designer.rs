//! Rule-based plan designer.
//!
//! Picks a soundscape theme compatible with the scene, writes a short
//! high-level instruction for it, and derives atomic steps: removals of
//! sources that clash with the theme, a few volume/direction tweaks, and up to
//! two theme-appropriate additions. Every plan it returns passes
//! [`validate_plan`] against the labels it was given.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::label::{label_tokens, normalize_label};
use crate::plan::{validate_plan, AtomicStep, EditPlan};
use crate::spatial::{Direction, GainDb};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignerError {
    #[error("scene has {0} sources; the designer handles 2 to 5")]
    InvalidSceneSize(usize),
    #[error("no scenario keeps at least one of the scene's sources")]
    NoCompatibleScenario,
}

/// A soundscape theme.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplate {
    pub name: &'static str,
    /// Instruction text; `{time}` is replaced by a time of day.
    pub instruction_pattern: &'static str,
    pub compatible_add_labels: &'static [&'static str],
    /// Keywords marking a source as out of place in this theme.
    pub incompatible: &'static [&'static str],
    /// Keywords marking a source the theme wants louder.
    pub favored: &'static [&'static str],
}

const TIMES_OF_DAY: [&str; 4] = ["morning", "afternoon", "evening", "night"];

const NOISY_MACHINES: &[&str] = &["engine", "traffic", "siren", "drill", "jackhammer", "horn", "alarm", "chainsaw", "vacuum"];

pub const BUILTIN_SCENARIOS: &[ScenarioTemplate] = &[
    ScenarioTemplate {
        name: "bookstore",
        instruction_pattern: "Make this sound like it was recorded in a bookstore",
        compatible_add_labels: &["pages turning", "soft footsteps", "quiet murmur", "door chime"],
        incompatible: &["engine", "traffic", "siren", "dog", "rain", "thunder", "gunshot", "firework", "wave", "crowd cheering", "drum"],
        favored: &["page", "typing", "clock"],
    },
    ScenarioTemplate {
        name: "coffee shop",
        instruction_pattern: "Make this sound like a busy coffee shop in the {time}",
        compatible_add_labels: &["espresso machine", "cups clinking", "crowd chatter", "cash register"],
        incompatible: &["thunder", "wave", "rooster", "cow", "sheep", "gunshot", "chainsaw", "wolf", "frog", "cricket"],
        favored: &["speech", "talking", "chatter", "laugh", "music"],
    },
    ScenarioTemplate {
        name: "train station",
        instruction_pattern: "Make this sound like a busy train station",
        compatible_add_labels: &["train arriving", "station announcement", "rolling suitcase", "crowd chatter"],
        incompatible: &["bird", "rooster", "cow", "sheep", "wave", "cricket", "frog", "owl", "goat"],
        favored: &["footstep", "speech", "train", "whistle"],
    },
    ScenarioTemplate {
        name: "forest at night",
        instruction_pattern: "Make this sound like a forest at night",
        compatible_add_labels: &["crickets chirping", "owl hooting", "leaves rustling", "distant wolf howl"],
        incompatible: &[
            "engine", "traffic", "siren", "typing", "keyboard", "phone", "crowd", "train", "horn", "music", "rooster", "vacuum",
            "baby",
        ],
        favored: &["wind", "owl", "cricket", "stream", "leaves"],
    },
    ScenarioTemplate {
        name: "beach",
        instruction_pattern: "Make this sound like a beach",
        compatible_add_labels: &["sea waves", "seagulls calling", "children playing", "gentle breeze"],
        incompatible: &["engine", "traffic", "typing", "keyboard", "rooster", "cow", "sheep", "chainsaw", "snow", "drill"],
        favored: &["wave", "wind", "laugh", "seagull"],
    },
    ScenarioTemplate {
        name: "sunny day",
        instruction_pattern: "Make this sound like a sunny day",
        compatible_add_labels: &["birds chirping", "children laughing", "gentle breeze", "bees buzzing"],
        incompatible: &["rain", "rainfall", "thunder", "storm", "siren", "hail", "drip"],
        favored: &["bird", "laugh", "bee"],
    },
    ScenarioTemplate {
        name: "park",
        instruction_pattern: "Craft this sound to feel like a park in the {time}",
        compatible_add_labels: &["children playing", "dog barking", "birds chirping", "fountain splashing"],
        incompatible: &["typing", "keyboard", "siren", "alarm", "jackhammer", "drill", "vacuum", "gunshot"],
        favored: &["bird", "laugh", "children", "dog"],
    },
    ScenarioTemplate {
        name: "quiet farm",
        instruction_pattern: "Make this audio sound like a quiet farm",
        compatible_add_labels: &["rooster crowing", "cow mooing", "sheep bleating", "chickens clucking"],
        incompatible: &["traffic", "siren", "train", "crowd", "typing", "keyboard", "music", "firework", "gunshot", "jackhammer"],
        favored: &["rooster", "cow", "sheep", "goat", "bird"],
    },
    ScenarioTemplate {
        name: "firework show",
        instruction_pattern: "Make this audio sound like a firework show",
        compatible_add_labels: &["fireworks exploding", "crowd cheering", "firecrackers popping"],
        incompatible: &["typing", "keyboard", "snore", "clock", "page", "cricket", "owl", "vacuum"],
        favored: &["crowd", "cheer", "clap", "firework"],
    },
    ScenarioTemplate {
        name: "library",
        instruction_pattern: "Transform this into an indoor library setting",
        compatible_add_labels: &["pages turning", "pencil writing", "quiet footsteps", "chair creaking"],
        incompatible: &["engine", "traffic", "dog", "bark", "thunder", "siren", "music", "drum", "shout", "crowd", "wave", "rooster"],
        favored: &["page", "clock", "typing"],
    },
    ScenarioTemplate {
        name: "rainy city street",
        instruction_pattern: "Make this sound like a rainy city street",
        compatible_add_labels: &["rain falling", "cars passing on wet road", "umbrella opening", "distant thunder"],
        incompatible: &["bird", "rooster", "cow", "sheep", "wave", "cricket", "firework", "bee"],
        favored: &["rain", "traffic", "car", "footstep"],
    },
    ScenarioTemplate {
        name: "thunderstorm",
        instruction_pattern: "Make it sound like a thunderstorm is rolling in",
        compatible_add_labels: &["thunder rumbling", "heavy rain", "strong wind gusts"],
        incompatible: &["bird", "bee", "children playing", "ice cream truck", "firework", "cricket"],
        favored: &["rain", "wind", "thunder"],
    },
    ScenarioTemplate {
        name: "countryside morning",
        instruction_pattern: "Make this sound like a countryside morning",
        compatible_add_labels: &["rooster crowing", "birds chirping", "distant church bell", "cow mooing"],
        incompatible: NOISY_MACHINES,
        favored: &["bird", "rooster", "cow", "bell"],
    },
    ScenarioTemplate {
        name: "garden",
        instruction_pattern: "Make this sound like a quiet {time} in a garden",
        compatible_add_labels: &["gentle breeze", "bees buzzing", "leaves rustling", "water fountain"],
        incompatible: &["clock", "tick", "engine", "traffic", "siren", "typing", "keyboard", "alarm", "drill", "crowd"],
        favored: &["bird", "chirp", "bee", "leaves", "fountain"],
    },
    ScenarioTemplate {
        name: "office",
        instruction_pattern: "Make this sound like a busy open-plan office",
        compatible_add_labels: &["keyboard typing", "phone ringing", "printer running", "coworkers chatting"],
        incompatible: &["cow", "sheep", "rooster", "wave", "thunder", "wolf", "owl", "firework", "gunshot", "frog"],
        favored: &["typing", "keyboard", "phone", "speech"],
    },
    ScenarioTemplate {
        name: "kitchen",
        instruction_pattern: "Make this sound like a home kitchen at dinner time",
        compatible_add_labels: &["sizzling pan", "dishes clattering", "kettle whistling", "chopping vegetables"],
        incompatible: &["traffic", "siren", "wave", "thunder", "train", "cow", "crowd cheering", "firework", "wolf"],
        favored: &["sizzle", "water", "speech", "dish"],
    },
    ScenarioTemplate {
        name: "stadium",
        instruction_pattern: "Make this sound like a packed stadium during a match",
        compatible_add_labels: &["crowd cheering", "referee whistle", "stadium announcer", "drums beating"],
        incompatible: &["bird", "cricket", "owl", "page", "typing", "snore", "baby", "clock"],
        favored: &["crowd", "cheer", "clap", "whistle", "drum"],
    },
    ScenarioTemplate {
        name: "desert",
        instruction_pattern: "Make this sound like an empty desert at {time}",
        compatible_add_labels: &["dry wind howling", "sand shifting", "distant camel grunt"],
        incompatible: &["rain", "rainfall", "wave", "water", "stream", "frog", "traffic", "crowd", "rooster", "cow", "snow"],
        favored: &["wind"],
    },
    ScenarioTemplate {
        name: "snowy mountain",
        instruction_pattern: "Make this sound like a snowy mountain cabin",
        compatible_add_labels: &["crackling fireplace", "wind whistling", "footsteps in snow"],
        incompatible: &["wave", "cricket", "frog", "bee", "traffic", "siren", "lawn mower", "crowd"],
        favored: &["wind", "fire"],
    },
    ScenarioTemplate {
        name: "construction site",
        instruction_pattern: "Make this sound like a construction site",
        compatible_add_labels: &["jackhammer", "hammering", "truck reversing beep", "power drill"],
        incompatible: &["bird", "owl", "cricket", "baby", "page", "wave", "snore", "music"],
        favored: &["hammer", "drill", "engine", "truck"],
    },
    ScenarioTemplate {
        name: "harbor",
        instruction_pattern: "Make this sound like a harbor at {time}",
        compatible_add_labels: &["ship horn", "seagulls calling", "water lapping", "rope creaking"],
        incompatible: &["cow", "sheep", "rooster", "typing", "keyboard", "cricket", "jackhammer"],
        favored: &["wave", "water", "seagull", "horn"],
    },
    ScenarioTemplate {
        name: "campfire",
        instruction_pattern: "Make this sound like a campfire night with friends",
        compatible_add_labels: &["crackling campfire", "crickets chirping", "acoustic guitar", "people laughing"],
        incompatible: &["traffic", "siren", "engine", "typing", "keyboard", "vacuum", "alarm", "rain", "rainfall"],
        favored: &["fire", "laugh", "guitar", "cricket"],
    },
];

fn matches_keyword(tokens: &alloc::collections::BTreeSet<String>, keyword: &str) -> bool {
    let kw = label_tokens(keyword);
    !kw.is_empty() && kw.is_subset(tokens)
}

fn any_keyword(label: &str, keywords: &[&str]) -> bool {
    let tokens = label_tokens(label);
    keywords.iter().any(|k| matches_keyword(&tokens, k))
}

impl ScenarioTemplate {
    pub fn is_incompatible(&self, label: &str) -> bool {
        any_keyword(label, self.incompatible)
    }

    pub fn favors(&self, label: &str) -> bool {
        any_keyword(label, self.favored)
    }

    pub fn instruction<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let time = TIMES_OF_DAY.choose(rng).expect("non-empty");
        self.instruction_pattern.replace("{time}", time)
    }
}

pub fn design_plan_template<R: Rng + ?Sized>(scene_labels: &[String], rng: &mut R) -> Result<EditPlan, DesignerError> {
    design_plan_with(BUILTIN_SCENARIOS, scene_labels, rng)
}

pub fn design_plan_with<R: Rng + ?Sized>(
    scenarios: &[ScenarioTemplate],
    scene_labels: &[String],
    rng: &mut R,
) -> Result<EditPlan, DesignerError> {
    design_plan_filtered(scenarios, scene_labels, &|_| true, rng)
}

/// Like [`design_plan_with`], but only adds labels accepted by `can_add`
/// (typically: labels the clip catalog can resolve).
pub fn design_plan_filtered<R: Rng + ?Sized>(
    scenarios: &[ScenarioTemplate],
    scene_labels: &[String],
    can_add: &dyn Fn(&str) -> bool,
    rng: &mut R,
) -> Result<EditPlan, DesignerError> {
    if !(2..=5).contains(&scene_labels.len()) {
        return Err(DesignerError::InvalidSceneSize(scene_labels.len()));
    }
    let normalized: Vec<String> = scene_labels.iter().map(|l| normalize_label(l)).collect();
    // Labels occurring more than once cannot be targeted without a direction.
    let targetable: Vec<usize> =
        (0..normalized.len()).filter(|&i| normalized.iter().filter(|l| **l == normalized[i]).count() == 1).collect();

    let viable: Vec<&ScenarioTemplate> =
        scenarios.iter().filter(|s| scene_labels.iter().any(|l| !s.is_incompatible(l))).collect();
    if viable.is_empty() {
        return Err(DesignerError::NoCompatibleScenario);
    }
    let with_removals: Vec<&ScenarioTemplate> = viable
        .iter()
        .copied()
        .filter(|s| targetable.iter().any(|&i| s.is_incompatible(&scene_labels[i])))
        .collect();
    let pool = if with_removals.is_empty() { &viable } else { &with_removals };
    let scenario = *pool.choose(rng).expect("non-empty pool");

    let mut steps = Vec::new();

    let removable: Vec<usize> = targetable.iter().copied().filter(|&i| scenario.is_incompatible(&scene_labels[i])).collect();
    let mut removed = Vec::new();
    if !removable.is_empty() {
        // Compatible sources always remain, so removing up to two never empties the scene.
        let n = rng.gen_range(1..=removable.len().min(2));
        removed = removable.choose_multiple(rng, n).copied().collect();
        for &i in &removed {
            steps.push(AtomicStep::remove(scene_labels[i].clone()));
        }
    }

    let kept: Vec<usize> = targetable.iter().copied().filter(|i| !removed.contains(i)).collect();
    let n_mods = rng.gen_range(0..=kept.len().min(2));
    for &i in kept.choose_multiple(rng, n_mods) {
        let label = scene_labels[i].clone();
        let delta_db = GainDb(rng.gen_range(1..=6) as f64);
        let step = if scenario.favors(&label) {
            AtomicStep::TurnUp { label, delta_db }
        } else {
            match rng.gen_range(0..3) {
                0 => AtomicStep::TurnUp { label, delta_db },
                1 => AtomicStep::TurnDown { label, delta_db },
                _ => AtomicStep::Change { label, from: None, to: *Direction::ALL.choose(rng).expect("non-empty") },
            }
        };
        steps.push(step);
    }

    let addable: Vec<&str> = scenario
        .compatible_add_labels
        .iter()
        .copied()
        .filter(|a| !normalized.contains(&normalize_label(a)) && can_add(a))
        .collect();
    let min_adds = usize::from(steps.is_empty() && !addable.is_empty());
    let n_adds = rng.gen_range(min_adds..=addable.len().min(2));
    for label in addable.choose_multiple(rng, n_adds) {
        let direction = *Direction::ALL.choose(rng).expect("non-empty");
        let gain = rng.gen_range(0..=6) as f64;
        steps.push(AtomicStep::add(label.to_string(), Some(direction), Some(gain)));
    }

    if steps.is_empty() {
        let &i = kept.choose(rng).ok_or(DesignerError::NoCompatibleScenario)?;
        steps.push(AtomicStep::TurnUp { label: scene_labels[i].clone(), delta_db: GainDb(rng.gen_range(1..=6) as f64) });
    }
    steps.shuffle(rng);

    let plan = EditPlan { instruction: scenario.instruction(rng), sound_sources: scene_labels.to_vec(), steps };
    debug_assert!(validate_plan(&plan, scene_labels).is_valid(), "designer produced an invalid plan: {plan:?}");
    Ok(plan)
}
