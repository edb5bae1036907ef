mod common;

use scenedit::designer_llm::{design_plan_llm, design_plans_llm, DesignerConfig, DesignerMode, LlmError, BASE_PROMPT};
use scenedit_core::plan::RuleId;
use scenedit_core::{AtomicStep, Direction, GainDb};
use serde_json::Value;

use common::{chat, MockServer};

fn config(url: &str) -> DesignerConfig {
    DesignerConfig {
        mode: DesignerMode::Llm,
        endpoint_url: Some(url.into()),
        api_key_env: common::api_key_env(),
        max_retries: 2,
        batch_size: 1,
        concurrency: 1,
        timeout_seconds: 5.0,
        ..DesignerConfig::default()
    }
}

fn labels() -> Vec<String> {
    vec!["clock tick".into(), "bird chirp".into(), "wind".into()]
}

const GARDEN: &str = r#"```json
{
  "sound sources": ["clock tick", "bird chirp", "wind"],
  "complex editing instruction": "Turn the study into a garden",
  "atomic editing steps": [
    {"operation": "remove", "target": "clock tick", "effect": "None"},
    {"operation": "turn up", "target": "bird chirp", "effect": "by 3dB"},
    {"operation": "add", "target": "crowd chatter", "effect": "at front by 4dB"}
  ]
}
```"#;

const REMOVE_ALL: &str = r#"{"sound sources": ["clock tick", "bird chirp", "wind"], "complex editing instruction": "Silence everything", "atomic editing steps": [
    {"operation": "remove", "target": "clock tick", "effect": "None"},
    {"operation": "remove", "target": "bird chirp", "effect": "None"},
    {"operation": "remove", "target": "wind", "effect": "None"}]}"#;

#[test]
fn fenced_reply_yields_plan() {
    let server = MockServer::start(vec![chat(GARDEN)]);
    let (plan, retries) = design_plan_llm(&labels(), &config(&server.url)).unwrap();
    assert_eq!(retries, 0);
    assert_eq!(plan.sound_sources, labels());
    assert_eq!(
        plan.steps,
        vec![
            AtomicStep::remove("clock tick"),
            AtomicStep::TurnUp { label: "bird chirp".into(), delta_db: GainDb(3.0) },
            AtomicStep::add("crowd chatter", Some(Direction::Front), Some(4.0)),
        ]
    );

    let requests = server.requests.lock().unwrap();
    let body: Value = serde_json::from_str(&requests[0]).unwrap();
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], BASE_PROMPT);
    assert!(body["messages"][1]["content"].as_str().unwrap().contains("\"bird chirp\""));
}

#[test]
fn invalid_replies_are_retried() {
    let server = MockServer::start(vec![chat(REMOVE_ALL), chat("not json at all"), chat(GARDEN)]);
    let (plan, retries) = design_plan_llm(&labels(), &config(&server.url)).unwrap();
    assert_eq!(retries, 2);
    assert_eq!(plan.steps.len(), 3);
    assert_eq!(server.request_count(), 3);
}

#[test]
fn persistent_invalid_plan_is_dropped() {
    let server = MockServer::start(vec![chat(REMOVE_ALL)]);
    match design_plan_llm(&labels(), &config(&server.url)) {
        Err(LlmError::ValidationFailed { rules }) => assert!(rules.contains(&RuleId::R2), "{rules:?}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(server.request_count(), 3);
}

#[test]
fn batched_reply_splits_per_set() {
    let other: Vec<String> = vec!["rain".into(), "dog bark".into()];
    let reply = format!(
        "[{}, {}]",
        GARDEN.trim_start_matches("```json").trim_end_matches("```"),
        r#"{"sound sources": ["rain", "dog bark"], "complex editing instruction": "Quieter rain", "atomic editing steps": [{"operation": "turn down", "target": "rain", "effect": "by 9dB"}]}"#
    );
    let fixed = r#"{"sound sources": ["rain", "dog bark"], "complex editing instruction": "Quieter rain", "atomic editing steps": [{"operation": "turn down", "target": "rain", "effect": "by 2dB"}]}"#;
    let server = MockServer::start(vec![chat(&reply), chat(fixed)]);
    let mut cfg = config(&server.url);
    cfg.batch_size = 2;
    let result = design_plans_llm(&[labels(), other.clone()], &cfg).unwrap();
    assert!(result.dropped.is_empty());
    assert_eq!(result.retries, 1);
    let second = result.plans[1].as_ref().unwrap();
    assert_eq!(second.sound_sources, other);
    assert_eq!(second.steps, vec![AtomicStep::TurnDown { label: "rain".into(), delta_db: GainDb(2.0) }]);
    let requests = server.requests.lock().unwrap();
    let user: Value = serde_json::from_str(&requests[0]).unwrap();
    assert!(user["messages"][1]["content"].as_str().unwrap().contains("Set 2:"));
}

#[test]
fn request_carries_bearer_key() {
    // The mock only records bodies, so check the header with a raw listener.
    use std::io::{Read, Write};
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut buf = vec![0u8; 65536];
        let mut head = Vec::new();
        while !head.windows(4).any(|w| w == b"\r\n\r\n") {
            let n = stream.read(&mut buf).unwrap();
            head.extend_from_slice(&buf[..n]);
        }
        let body = b"{}";
        let _ = write!(stream, "HTTP/1.1 401 X\r\nContent-Length: {}\r\nConnection: close\r\n\r\n", body.len());
        let _ = stream.write_all(body);
        String::from_utf8_lossy(&head).into_owned()
    });
    let err = design_plan_llm(&labels(), &config(&url)).unwrap_err();
    assert_eq!(err, LlmError::AuthFailure { status: 401 });
    assert!(err.is_fatal());
    let head = handle.join().unwrap().to_ascii_lowercase();
    assert!(head.contains("authorization: bearer test-key"), "{head}");
}

#[test]
fn configuration_errors() {
    let mut cfg = config("http://127.0.0.1:9/v1");
    cfg.api_key_env = "SCENEDIT_TEST_UNSET_KEY".into();
    std::env::remove_var("SCENEDIT_TEST_UNSET_KEY");
    assert_eq!(design_plan_llm(&labels(), &cfg).unwrap_err(), LlmError::MissingApiKey("SCENEDIT_TEST_UNSET_KEY".into()));

    let mut cfg = config("x");
    cfg.endpoint_url = None;
    assert_eq!(design_plan_llm(&labels(), &cfg).unwrap_err(), LlmError::MissingEndpoint);

    let mut cfg = config("http://127.0.0.1:9/v1");
    cfg.max_retries = 1;
    assert!(matches!(design_plan_llm(&labels(), &cfg), Err(LlmError::EndpointUnreachable { .. })));
}

#[test]
fn server_errors_are_retried() {
    let server = MockServer::start(vec![(503, "busy".into()), chat(GARDEN)]);
    let (_, retries) = design_plan_llm(&labels(), &config(&server.url)).unwrap();
    assert_eq!(retries, 1);
}
