//! Plan design through an external chat-completion endpoint.
//!
//! Each request carries the base prompt as the system message and one or more
//! numbered source lists as the user message. Replies are parsed with the JSON
//! plan parser and gated by the validator; sets that fail are re-requested
//! one at a time up to `max_retries` times.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use scenedit_core::plan::{parse_plan_json, validate_plan, RuleId};
use scenedit_core::EditPlan;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const BASE_PROMPT: &str = include_str!("../assets/base_prompt.txt");
pub const DEFAULT_API_KEY_ENV: &str = "SCENEDIT_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignerMode {
    #[default]
    Template,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignerConfig {
    pub mode: DesignerMode,
    pub endpoint_url: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub model_name: Option<String>,
    pub max_retries: u32,
    pub temperature: Option<f64>,
    /// Source lists per request.
    pub batch_size: usize,
    /// Requests in flight at once.
    pub concurrency: usize,
    pub timeout_seconds: f64,
}

impl Default for DesignerConfig {
    fn default() -> Self {
        Self {
            mode: DesignerMode::Template,
            endpoint_url: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            model_name: None,
            max_retries: 3,
            temperature: None,
            batch_size: 15,
            concurrency: 4,
            timeout_seconds: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("llm mode needs endpoint_url")]
    MissingEndpoint,
    #[error("environment variable {0} with the API key is not set")]
    MissingApiKey(String),
    #[error("endpoint {url} unreachable: {message}")]
    EndpointUnreachable { url: String, message: String },
    #[error("endpoint rejected the API key (HTTP {status})")]
    AuthFailure { status: u16 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("plan failed validation: {}", rules.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    ValidationFailed { rules: Vec<RuleId> },
}

impl LlmError {
    /// Errors that no retry or other request can fix.
    pub fn is_fatal(&self) -> bool {
        matches!(self, LlmError::MissingEndpoint | LlmError::MissingApiKey(_) | LlmError::AuthFailure { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlmBatchResult {
    /// One slot per input set, `None` where the set was dropped.
    pub plans: Vec<Option<EditPlan>>,
    pub dropped: Vec<(usize, LlmError)>,
    pub retries: usize,
}

/// Removes one surrounding markdown code fence, if present.
pub fn strip_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(start) = trimmed.find("```") else {
        return trimmed;
    };
    let after = &trimmed[start + 3..];
    // Skip the info string ("json") up to the end of the fence line.
    let body = after.find('\n').map_or(after, |nl| &after[nl + 1..]);
    body.find("```").map_or(body, |end| &body[..end]).trim()
}

fn user_message(sets: &[&[String]]) -> String {
    let list = |labels: &[String]| serde_json::to_string(labels).expect("strings serialize");
    if let [one] = sets {
        return format!("Sound sources: {}", list(one));
    }
    let mut msg = String::new();
    for (i, labels) in sets.iter().enumerate() {
        msg.push_str(&format!("Set {}: {}\n", i + 1, list(labels)));
    }
    msg.push_str(&format!("Return a JSON array with {} objects, one per set, in the same order.", sets.len()));
    msg
}

struct Client {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    config: DesignerConfig,
}

impl Client {
    fn new(config: &DesignerConfig) -> Result<Self, LlmError> {
        let url = config.endpoint_url.clone().ok_or(LlmError::MissingEndpoint)?;
        let api_key = std::env::var(&config.api_key_env).map_err(|_| LlmError::MissingApiKey(config.api_key_env.clone()))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_seconds)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { agent, url, api_key, config: config.clone() })
    }

    /// Message content of one chat-completion call.
    fn complete(&self, user: &str) -> Result<String, LlmError> {
        let mut body = json!({
            "model": self.config.model_name.clone().unwrap_or_else(|| "default".into()),
            "messages": [
                {"role": "system", "content": BASE_PROMPT},
                {"role": "user", "content": user},
            ],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        let unreachable = |e: ureq::Error| LlmError::EndpointUnreachable { url: self.url.clone(), message: e.to_string() };
        let mut response = self
            .agent
            .post(&self.url)
            .header("Authorization", format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body.to_string())
            .map_err(unreachable)?;
        let status = response.status().as_u16();
        if status == 401 || status == 403 {
            return Err(LlmError::AuthFailure { status });
        }
        let text = response.body_mut().read_to_string().map_err(unreachable)?;
        if !(200..300).contains(&status) {
            return Err(LlmError::EndpointUnreachable { url: self.url.clone(), message: format!("HTTP {status}: {text}") });
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| LlmError::MalformedResponse(format!("response body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(String::from)
            .ok_or_else(|| LlmError::MalformedResponse("no choices[0].message.content".into()))
    }

    /// Like [`Client::complete`], retrying transport failures.
    fn complete_with_retries(&self, user: &str, retries: &AtomicUsize) -> Result<String, LlmError> {
        let mut attempt = 0;
        loop {
            match self.complete(user) {
                Err(e @ LlmError::EndpointUnreachable { .. }) if attempt < self.config.max_retries => {
                    attempt += 1;
                    retries.fetch_add(1, Ordering::Relaxed);
                    log::warn!("designer request failed ({e}); retry {attempt}/{}", self.config.max_retries);
                }
                other => return other,
            }
        }
    }
}

fn check_plan(value: &Value, labels: &[String]) -> Result<EditPlan, LlmError> {
    let parsed = parse_plan_json(value.to_string().as_bytes()).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    for w in &parsed.warnings {
        log::debug!("designer reply: {w}");
    }
    let mut plan = parsed.plan;
    if plan.steps.is_empty() {
        return Err(LlmError::MalformedResponse("plan has no steps".into()));
    }
    plan.sound_sources = labels.to_vec();
    let report = validate_plan(&plan, labels);
    if !report.is_valid() {
        return Err(LlmError::ValidationFailed { rules: report.rules().into_iter().collect() });
    }
    Ok(plan)
}

/// Per-set outcomes for one reply covering `sets`.
fn split_reply(content: &str, sets: &[&[String]]) -> Vec<Result<EditPlan, LlmError>> {
    let malformed = |msg: String| sets.iter().map(|_| Err(LlmError::MalformedResponse(msg.clone()))).collect();
    let value: Value = match serde_json::from_str(strip_fences(content)) {
        Ok(v) => v,
        Err(e) => return malformed(format!("reply is not JSON: {e}")),
    };
    let items = match value {
        Value::Array(items) if sets.len() > 1 || items.first().is_some_and(Value::is_object) => items,
        obj @ Value::Object(_) => vec![obj],
        _ => return malformed("reply is neither a plan object nor an array of plans".into()),
    };
    if items.len() != sets.len() {
        return malformed(format!("expected {} plans, got {}", sets.len(), items.len()));
    }
    items.iter().zip(sets).map(|(item, labels)| check_plan(item, labels)).collect()
}

fn design_batch(client: &Client, sets: &[&[String]], retries: &AtomicUsize) -> Result<Vec<Result<EditPlan, LlmError>>, LlmError> {
    let content = client.complete_with_retries(&user_message(sets), retries)?;
    let mut outcomes = split_reply(&content, sets);
    for (i, outcome) in outcomes.iter_mut().enumerate() {
        let mut attempt = 0;
        while let Err(e) = outcome {
            if attempt >= client.config.max_retries {
                break;
            }
            attempt += 1;
            retries.fetch_add(1, Ordering::Relaxed);
            log::info!("re-requesting set {i} ({e}); retry {attempt}/{}", client.config.max_retries);
            let content = client.complete_with_retries(&user_message(&sets[i..=i]), retries)?;
            *outcome = split_reply(&content, &sets[i..=i]).remove(0);
        }
    }
    Ok(outcomes)
}

/// Designs one plan per label set. Sets that stay invalid after retries are
/// dropped and reported; endpoint and authentication failures abort.
pub fn design_plans_llm(sets: &[Vec<String>], config: &DesignerConfig) -> Result<LlmBatchResult, LlmError> {
    let client = Client::new(config)?;
    let batch_size = config.batch_size.max(1);
    let batches: Vec<(usize, Vec<&[String]>)> = sets
        .chunks(batch_size)
        .enumerate()
        .map(|(b, chunk)| (b * batch_size, chunk.iter().map(Vec::as_slice).collect()))
        .collect();
    let retries = AtomicUsize::new(0);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Vec<Result<EditPlan, LlmError>>, LlmError>>>> =
        Mutex::new(vec![None; batches.len()]);
    std::thread::scope(|scope| {
        for _ in 0..config.concurrency.clamp(1, batches.len().max(1)) {
            scope.spawn(|| loop {
                let b = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, batch)) = batches.get(b) else { break };
                let outcome = design_batch(&client, batch, &retries);
                let fatal = matches!(&outcome, Err(e) if e.is_fatal());
                results.lock().expect("results lock")[b] = Some(outcome);
                if fatal {
                    next.store(batches.len(), Ordering::Relaxed);
                }
            });
        }
    });

    let mut out = LlmBatchResult { plans: vec![None; sets.len()], dropped: Vec::new(), retries: retries.into_inner() };
    for ((start, _), outcome) in batches.iter().zip(results.into_inner().expect("results lock")) {
        let outcomes = match outcome {
            Some(o) => o?,
            None => continue,
        };
        for (offset, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(plan) => out.plans[start + offset] = Some(plan),
                Err(e) => {
                    log::warn!("dropping set {}: {e}", start + offset);
                    out.dropped.push((start + offset, e));
                }
            }
        }
    }
    Ok(out)
}

/// Single-set convenience wrapper; a dropped set becomes the error.
pub fn design_plan_llm(labels: &[String], config: &DesignerConfig) -> Result<(EditPlan, usize), LlmError> {
    let mut result = design_plans_llm(&[labels.to_vec()], config)?;
    match (result.plans.pop().flatten(), result.dropped.pop()) {
        (Some(plan), _) => Ok((plan, result.retries)),
        (None, Some((_, e))) => Err(e),
        (None, None) => Err(LlmError::MalformedResponse("no plan returned".into())),
    }
}
