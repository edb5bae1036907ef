//! External editors over the file-exchange protocol.
//!
//! For every call the adapter writes `input.wav` (stereo float32) and
//! `step.txt` (the step in template form) into a work directory, invokes the
//! editor, and reads `output.wav` back. The editor is either a subprocess
//! whose arguments may use the placeholders `{input}`, `{step}`, `{output}`
//! and `{step_text}`, or an HTTP endpoint that receives
//! `{"input", "step_file", "step", "output"}` as a JSON POST and answers 2xx
//! once the output file exists.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use scenedit_core::plan::serialize_step;
use scenedit_core::{AtomicStep, AudioBuffer, Editor, EditorError};
use serde_json::json;
use wait_timeout::ChildExt;

use crate::wav;

#[derive(Debug, Clone, PartialEq)]
pub enum Transport {
    Command { program: String, args: Vec<String> },
    Http { url: String },
}

impl Transport {
    /// `cmd:<program> <args...>` (whitespace separated) or an `http(s)://` URL.
    pub fn parse(spec: &str) -> Option<Transport> {
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Some(Transport::Http { url: spec.into() });
        }
        let rest = spec.strip_prefix("cmd:")?;
        let mut words = rest.split_whitespace().map(String::from);
        let program = words.next()?;
        Some(Transport::Command { program, args: words.collect() })
    }
}

pub struct ExternalEditor {
    transport: Transport,
    work_dir: PathBuf,
    timeout: Duration,
    _temp: Option<tempfile::TempDir>,
}

impl ExternalEditor {
    pub fn new(transport: Transport, work_dir: Option<PathBuf>, timeout: Duration) -> std::io::Result<Self> {
        let (work_dir, temp) = match work_dir {
            Some(dir) => {
                std::fs::create_dir_all(&dir)?;
                (dir, None)
            }
            None => {
                let temp = tempfile::Builder::new().prefix("scenedit-editor").tempdir()?;
                (temp.path().to_path_buf(), Some(temp))
            }
        };
        Ok(Self { transport, work_dir, timeout, _temp: temp })
    }

    pub fn work_dir(&self) -> &Path {
        &self.work_dir
    }

    fn paths(&self) -> (PathBuf, PathBuf, PathBuf) {
        (self.work_dir.join("input.wav"), self.work_dir.join("step.txt"), self.work_dir.join("output.wav"))
    }

    fn run_command(&self, program: &str, args: &[String], step_text: &str) -> Result<(), EditorError> {
        let (input, step, output) = self.paths();
        let fill = |a: &String| {
            a.replace("{input}", &input.to_string_lossy())
                .replace("{step}", &step.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
                .replace("{step_text}", step_text)
        };
        let mut child = Command::new(program)
            .args(args.iter().map(fill))
            .current_dir(&self.work_dir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EditorError::Transport(format!("cannot start {program}: {e}")))?;
        let status = match child.wait_timeout(self.timeout).map_err(|e| EditorError::Transport(e.to_string()))? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(EditorError::AdapterTimeout { seconds: self.timeout.as_secs_f64() });
            }
        };
        if !status.success() {
            let mut stderr = String::new();
            if let Some(mut pipe) = child.stderr.take() {
                use std::io::Read;
                let _ = pipe.read_to_string(&mut stderr);
            }
            return Err(EditorError::AdapterProtocol(format!("{program} exited with {status}: {}", stderr.trim())));
        }
        Ok(())
    }

    fn run_http(&self, url: &str, step_text: &str) -> Result<(), EditorError> {
        let (input, step, output) = self.paths();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let body = json!({
            "input": input.to_string_lossy(),
            "step_file": step.to_string_lossy(),
            "step": step_text,
            "output": output.to_string_lossy(),
        });
        let response = agent.post(url).header("Content-Type", "application/json").send(body.to_string());
        match response {
            Ok(r) if r.status().is_success() => Ok(()),
            Ok(r) => Err(EditorError::AdapterProtocol(format!("editor endpoint answered HTTP {}", r.status().as_u16()))),
            Err(ureq::Error::Timeout(_)) => Err(EditorError::AdapterTimeout { seconds: self.timeout.as_secs_f64() }),
            Err(e) => Err(EditorError::Transport(e.to_string())),
        }
    }
}

impl Editor for ExternalEditor {
    fn id(&self) -> String {
        match &self.transport {
            Transport::Command { program, .. } => format!("cmd:{program}"),
            Transport::Http { url } => url.clone(),
        }
    }

    fn edit(&mut self, audio_before: &AudioBuffer, step: &AtomicStep) -> Result<AudioBuffer, EditorError> {
        let (input, step_path, output) = self.paths();
        let step_text = serialize_step(step);
        let io = |e: String| EditorError::Transport(e);
        wav::write_stereo(&input, audio_before).map_err(|e| io(e.to_string()))?;
        std::fs::write(&step_path, format!("{step_text}\n")).map_err(|e| io(e.to_string()))?;
        match std::fs::remove_file(&output) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io(e.to_string())),
        }
        match &self.transport {
            Transport::Command { program, args } => self.run_command(program, args, &step_text)?,
            Transport::Http { url } => self.run_http(url, &step_text)?,
        }
        if !output.exists() {
            return Err(EditorError::AdapterProtocol("editor did not write output.wav".into()));
        }
        let edited = wav::read_stereo(&output).map_err(|e| EditorError::AdapterProtocol(e.to_string()))?;
        if edited.sample_rate_hz() != audio_before.sample_rate_hz() {
            return Err(EditorError::AdapterProtocol(format!(
                "output rate {} Hz, expected {}",
                edited.sample_rate_hz(),
                audio_before.sample_rate_hz()
            )));
        }
        if edited.len() != audio_before.len() {
            return Err(EditorError::AdapterProtocol(format!(
                "output has {} frames, expected {}",
                edited.len(),
                audio_before.len()
            )));
        }
        Ok(edited)
    }
}
