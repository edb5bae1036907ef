mod common;

use std::time::Duration;

use scenedit::adapter::{ExternalEditor, Transport};
use scenedit_core::{AtomicStep, AudioBuffer, Editor, EditorError};

use common::MockServer;

fn audio() -> AudioBuffer {
    let left: Vec<f64> = (0..4800).map(|i| (i as f64 * 0.01).sin() * 0.3).collect();
    let right: Vec<f64> = left.iter().map(|x| x * 0.5).collect();
    AudioBuffer::new(left, right, 24_000).unwrap()
}

fn editor(spec: &str, timeout: f64) -> ExternalEditor {
    ExternalEditor::new(Transport::parse(spec).unwrap(), None, Duration::from_secs_f64(timeout)).unwrap()
}

#[test]
fn copy_editor_is_identity() {
    let mut ed = editor("cmd:cp {input} {output}", 10.0);
    let before = audio();
    let after = ed.edit(&before, &AtomicStep::remove("wind")).unwrap();
    assert!(after.max_abs_diff(&before) < 1e-7);
    let step = std::fs::read_to_string(ed.work_dir().join("step.txt")).unwrap();
    assert_eq!(step, "Remove the sound of wind\n");
    assert_eq!(ed.id(), "cmd:cp");
}

#[test]
fn protocol_violations() {
    let step = AtomicStep::remove("wind");
    let err = editor("cmd:true", 10.0).edit(&audio(), &step).unwrap_err();
    assert!(matches!(err, EditorError::AdapterProtocol(ref m) if m.contains("output.wav")), "{err:?}");

    let err = editor("cmd:false", 10.0).edit(&audio(), &step).unwrap_err();
    assert!(matches!(err, EditorError::AdapterProtocol(_)), "{err:?}");

    // Truncates the input to a short prefix, so the frame count is wrong.
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("short.sh");
    std::fs::write(&script, "head -c 844 \"$1\" > \"$2\"\n").unwrap();
    let spec = format!("cmd:sh {} {{input}} {{output}}", script.display());
    let err = editor(&spec, 10.0).edit(&audio(), &step).unwrap_err();
    assert!(matches!(err, EditorError::AdapterProtocol(_)), "{err:?}");

    let err = editor("cmd:definitely-not-a-program-xyz", 10.0).edit(&audio(), &step).unwrap_err();
    assert!(matches!(err, EditorError::Transport(_)), "{err:?}");
}

#[test]
fn slow_editor_times_out() {
    let started = std::time::Instant::now();
    let err = editor("cmd:sleep 5", 0.2).edit(&audio(), &AtomicStep::remove("wind")).unwrap_err();
    assert!(matches!(err, EditorError::AdapterTimeout { .. }), "{err:?}");
    assert!(started.elapsed() < Duration::from_secs(3));
}

#[test]
fn http_editor_posts_paths() {
    let server = MockServer::start(vec![(500, "{}".into())]);
    let mut ed = editor(&server.url, 5.0);
    let err = ed.edit(&audio(), &AtomicStep::remove("wind")).unwrap_err();
    assert!(matches!(err, EditorError::AdapterProtocol(ref m) if m.contains("500")), "{err:?}");
    let body: serde_json::Value = serde_json::from_str(&server.requests.lock().unwrap()[0]).unwrap();
    assert_eq!(body["step"], "Remove the sound of wind");
    assert!(body["input"].as_str().unwrap().ends_with("input.wav"));
    assert!(body["output"].as_str().unwrap().ends_with("output.wav"));

    // A 2xx without an output file is a protocol error too.
    let server = MockServer::start(vec![(200, "{}".into())]);
    let err = editor(&server.url, 5.0).edit(&audio(), &AtomicStep::remove("wind")).unwrap_err();
    assert!(matches!(err, EditorError::AdapterProtocol(_)), "{err:?}");
}
