//! Structured JSON plan form.
//!
//! ```json
//! {
//!   "sound sources": ["dog bark", "car engine"],
//!   "complex editing instruction": "Make this sound like a countryside morning",
//!   "atomic editing steps": [
//!     {"operation": "remove", "target": "car engine", "effect": "None"},
//!     {"operation": "add", "target": "rooster crowing", "effect": "at right by 3dB"},
//!     {"operation": "turn down", "target": "dog bark", "effect": "2dB"},
//!     {"operation": "change", "target": "dog bark", "effect": "to left"}
//!   ]
//! }
//! ```
//!
//! A bare top-level array is accepted as the step list alone.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::template::{parse_number, strip_db_suffix};
use super::AtomicStep;
use crate::spatial::{Direction, GainDb};

pub const KEY_SOURCES: &str = "sound sources";
pub const KEY_INSTRUCTION: &str = "complex editing instruction";
pub const KEY_STEPS: &str = "atomic editing steps";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JsonPlanError {
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> JsonPlanError {
    JsonPlanError::Schema { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPlan {
    pub plan: super::EditPlan,
    /// Unknown keys that were ignored.
    pub warnings: Vec<String>,
}

const PLACEHOLDERS: [&str; 8] = ["", "none", "null", "n/a", "...", "xxx", "placeholder", "tbd"];

fn is_none_like(s: &str) -> bool {
    matches!(s.trim().to_ascii_lowercase().as_str(), "" | "none" | "null" | "n/a")
}

pub fn parse_plan_json(bytes: &[u8]) -> Result<ParsedPlan, JsonPlanError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| JsonPlanError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut warnings = Vec::new();
    let mut plan = super::EditPlan::default();
    let steps = match value {
        Value::Array(steps) => steps,
        Value::Object(mut obj) => {
            let sources = obj.remove(KEY_SOURCES).ok_or_else(|| schema("$", format!("missing key {KEY_SOURCES:?}")))?;
            let instruction =
                obj.remove(KEY_INSTRUCTION).ok_or_else(|| schema("$", format!("missing key {KEY_INSTRUCTION:?}")))?;
            let steps = obj.remove(KEY_STEPS).ok_or_else(|| schema("$", format!("missing key {KEY_STEPS:?}")))?;
            for key in obj.keys() {
                warnings.push(format!("ignored unknown key {key:?} at $"));
            }
            plan.sound_sources = match sources {
                Value::Array(items) => items
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| match v {
                        Value::String(s) => Ok(s),
                        _ => Err(schema(format!("$.{KEY_SOURCES}[{i}]"), "expected string")),
                    })
                    .collect::<Result<_, _>>()?,
                _ => return Err(schema(format!("$.{KEY_SOURCES}"), "expected array of strings")),
            };
            plan.instruction = match instruction {
                Value::String(s) => s,
                _ => return Err(schema(format!("$.{KEY_INSTRUCTION}"), "expected string")),
            };
            match steps {
                Value::Array(steps) => steps,
                _ => return Err(schema(format!("$.{KEY_STEPS}"), "expected array")),
            }
        }
        _ => return Err(schema("$", "expected object or array")),
    };
    for (i, step) in steps.into_iter().enumerate() {
        let path = format!("$.{KEY_STEPS}[{i}]");
        let Value::Object(obj) = step else {
            return Err(schema(path, "expected object"));
        };
        plan.steps.push(parse_step_object(obj, &path, &mut warnings)?);
    }
    Ok(ParsedPlan { plan, warnings })
}

fn parse_step_object(mut obj: Map<String, Value>, path: &str, warnings: &mut Vec<String>) -> Result<AtomicStep, JsonPlanError> {
    let string_field = |obj: &mut Map<String, Value>, key: &str, required: bool| -> Result<Option<String>, JsonPlanError> {
        match obj.remove(key) {
            Some(Value::String(s)) => Ok(Some(s)),
            Some(Value::Null) | None if !required => Ok(None),
            None | Some(Value::Null) => Err(schema(path, format!("missing key {key:?}"))),
            Some(_) => Err(schema(format!("{path}.{key}"), "expected string")),
        }
    };
    let operation = string_field(&mut obj, "operation", true)?.expect("required");
    let target = string_field(&mut obj, "target", true)?.expect("required");
    let effect = string_field(&mut obj, "effect", false)?;
    for key in obj.keys() {
        warnings.push(format!("ignored unknown key {key:?} at {path}"));
    }

    let target = target.trim().to_string();
    if PLACEHOLDERS.contains(&target.to_ascii_lowercase().as_str()) {
        return Err(schema(format!("{path}.target"), format!("placeholder target {target:?}")));
    }
    let op = operation.trim().to_ascii_lowercase().replace('_', " ");
    let op = op.split_whitespace().collect::<Vec<_>>().join(" ");
    let effect = effect.filter(|e| !is_none_like(e));
    let effect_path = format!("{path}.effect");
    let words: Vec<&str> = effect.as_deref().map(|e| e.split_whitespace().collect()).unwrap_or_default();
    let malformed = |what: &str| schema(effect_path.clone(), format!("malformed {what} effect {:?}", effect.as_deref().unwrap_or("")));

    let step = match op.as_str() {
        "add" => {
            let (direction, rest) = take_direction(&words, "at", true);
            let gain_db = match rest {
                [] => None,
                _ => Some(parse_gain(rest, &["by", "with"]).ok_or_else(|| malformed("add"))?),
            };
            AtomicStep::Add { label: target, direction, gain_db }
        }
        "remove" | "extract" => {
            let (direction, rest) = take_direction(&words, "at", true);
            if !rest.is_empty() {
                return Err(malformed(&op));
            }
            if op == "remove" {
                AtomicStep::Remove { label: target, direction }
            } else {
                AtomicStep::Extract { label: target, direction }
            }
        }
        "turn up" | "turn down" => {
            let delta = parse_gain(&words, &["by"]).ok_or_else(|| malformed(&op))?;
            if op == "turn up" {
                AtomicStep::TurnUp { label: target, delta_db: delta }
            } else {
                AtomicStep::TurnDown { label: target, delta_db: delta }
            }
        }
        "change" | "change direction" | "change sound direction" => {
            let (from, rest) = take_direction(&words, "from", false);
            let (to, rest) = take_direction(rest, "to", false);
            match (to, rest) {
                (Some(to), []) => AtomicStep::Change { label: target, from, to },
                _ => return Err(malformed("change")),
            }
        }
        other => return Err(schema(format!("{path}.operation"), format!("unknown operation {other:?}"))),
    };
    Ok(step)
}

/// Leading `<kw> [the] <dir>`; returns the remaining words.
fn take_direction<'a, 'w>(words: &'a [&'w str], keyword: &str, allow_article: bool) -> (Option<Direction>, &'a [&'w str]) {
    match words {
        [kw, dir, rest @ ..] if kw.eq_ignore_ascii_case(keyword) => match dir.parse() {
            Ok(d) => (Some(d), rest),
            Err(_) if allow_article && dir.eq_ignore_ascii_case("the") => match rest {
                [dir, rest @ ..] => match dir.parse() {
                    Ok(d) => (Some(d), rest),
                    Err(_) => (None, words),
                },
                [] => (None, words),
            },
            Err(_) => (None, words),
        },
        _ => (None, words),
    }
}

/// `[kw] <n> dB` or `[kw] <n>dB`, consuming all words.
fn parse_gain(words: &[&str], keywords: &[&str]) -> Option<GainDb> {
    let words = match words {
        [kw, rest @ ..] if keywords.iter().any(|k| kw.eq_ignore_ascii_case(k)) => rest,
        _ => words,
    };
    match words {
        [n, db] if db.eq_ignore_ascii_case("db") => parse_number(n).map(GainDb),
        [glued] => strip_db_suffix(glued).and_then(parse_number).map(GainDb),
        _ => None,
    }
}

/// Canonical `effect` string for a step.
pub fn step_effect(step: &AtomicStep) -> String {
    match step {
        AtomicStep::Add { direction, gain_db, .. } => match (direction, gain_db) {
            (Some(d), Some(g)) => format!("at {d} by {g}dB"),
            (Some(d), None) => format!("at {d}"),
            (None, Some(g)) => format!("by {g}dB"),
            (None, None) => "None".to_string(),
        },
        AtomicStep::Remove { direction, .. } | AtomicStep::Extract { direction, .. } => match direction {
            Some(d) => format!("at {d}"),
            None => "None".to_string(),
        },
        AtomicStep::TurnUp { delta_db, .. } | AtomicStep::TurnDown { delta_db, .. } => format!("{delta_db}dB"),
        AtomicStep::Change { from, to, .. } => match from {
            Some(f) => format!("from {f} to {to}"),
            None => format!("to {to}"),
        },
    }
}

pub fn plan_to_json(plan: &super::EditPlan) -> Value {
    let steps: Vec<Value> = plan
        .steps
        .iter()
        .map(|s| json!({"operation": s.kind().as_str(), "target": s.label(), "effect": step_effect(s)}))
        .collect();
    json!({
        KEY_SOURCES: plan.sound_sources,
        KEY_INSTRUCTION: plan.instruction,
        KEY_STEPS: steps,
    })
}

pub fn plan_to_json_string(plan: &super::EditPlan) -> String {
    serde_json::to_string_pretty(&plan_to_json(plan)).expect("plan JSON is always serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::EditPlan;

    fn steps_of(json: &str) -> Vec<AtomicStep> {
        parse_plan_json(json.as_bytes()).unwrap().plan.steps
    }

    #[test]
    fn base_prompt_examples() {
        assert_eq!(
            steps_of(r#"[{"operation":"add","target":"crowd chatter","effect":"at front by 4dB"}]"#),
            [AtomicStep::Add { label: "crowd chatter".into(), direction: Some(Direction::Front), gain_db: Some(GainDb(4.0)) }]
        );
        assert_eq!(steps_of(r#"[{"operation":"remove","target":"rain","effect":"None"}]"#), [AtomicStep::remove("rain")]);
        assert_eq!(
            steps_of(r#"[{"operation":"turn down","target":"dog bark","effect":"3dB"}]"#),
            [AtomicStep::TurnDown { label: "dog bark".into(), delta_db: GainDb(3.0) }]
        );
        assert_eq!(
            steps_of(r#"[{"operation":"change","target":"siren","effect":"to left"}]"#),
            [AtomicStep::Change { label: "siren".into(), from: None, to: Direction::Left }]
        );
    }

    #[test]
    fn placeholder_target_is_rejected() {
        let err = parse_plan_json(br#"[{"operation":"add","target":"none","effect":"at left by 2dB"}]"#).unwrap_err();
        assert!(matches!(err, JsonPlanError::Schema { ref path, .. } if path.ends_with(".target")), "{err:?}");
    }

    #[test]
    fn schema_errors() {
        let missing = parse_plan_json(br#"{"sound sources": [], "atomic editing steps": []}"#).unwrap_err();
        assert!(matches!(missing, JsonPlanError::Schema { .. }));
        let unknown_op = parse_plan_json(br#"[{"operation":"mute","target":"rain"}]"#).unwrap_err();
        assert!(matches!(unknown_op, JsonPlanError::Schema { ref message, .. } if message.contains("unknown operation")));
        let bad_effect = parse_plan_json(br#"[{"operation":"turn up","target":"rain","effect":"loud"}]"#).unwrap_err();
        assert!(matches!(bad_effect, JsonPlanError::Schema { ref message, .. } if message.contains("malformed")));
        let no_to = parse_plan_json(br#"[{"operation":"change","target":"rain","effect":"None"}]"#).unwrap_err();
        assert!(matches!(no_to, JsonPlanError::Schema { .. }));
        assert!(matches!(parse_plan_json(b"{not json"), Err(JsonPlanError::Syntax { line: 1, .. })));
    }

    #[test]
    fn unknown_keys_become_warnings() {
        let parsed = parse_plan_json(
            br#"{"sound sources":["rain"],"complex editing instruction":"x","atomic editing steps":[
                {"operation":"remove","target":"rain","effect":"None","why":"dry"}],"notes":1}"#,
        )
        .unwrap();
        assert_eq!(parsed.warnings.len(), 2);
        assert_eq!(parsed.plan.sound_sources, ["rain"]);
    }

    #[test]
    fn json_form_round_trips() {
        let plan = EditPlan {
            instruction: "Make this sound like a beach".into(),
            sound_sources: ["dog bark".into(), "car engine".into()].into(),
            steps: [
                AtomicStep::remove("car engine"),
                AtomicStep::add("sea waves", Some(Direction::Left), Some(4.0)),
                AtomicStep::add("seagull", None, None),
                AtomicStep::Extract { label: "dog bark".into(), direction: Some(Direction::Right) },
                AtomicStep::TurnUp { label: "dog bark".into(), delta_db: GainDb(1.5) },
                AtomicStep::Change { label: "dog bark".into(), from: Some(Direction::Left), to: Direction::Front },
            ]
            .into(),
        };
        let text = plan_to_json_string(&plan);
        assert_eq!(parse_plan_json(text.as_bytes()).unwrap().plan, plan);
    }
}
