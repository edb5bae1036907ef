//! Scores candidate audio against a synthesized dataset.
//!
//! Candidates mirror the dataset layout: for manifest path
//! `audio/r000003/a2.wav` the candidate is `<candidate_dir>/audio/r000003/a2.wav`.
//! Missing candidates are skipped. An optional external scorer is run per pair
//! through the same placeholder convention as external editors
//! (`{reference}`, `{candidate}`, `{output}`); it writes one number to `{output}`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use scenedit_core::metrics::{gcc_mse, lsd, MetricError};
use serde::Serialize;
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::pipeline::{read_manifest, PipelineError};
use crate::wav::{self, WavError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Manifest(#[from] PipelineError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{path}: {source}")]
    Metric { path: PathBuf, source: MetricError },
    #[error("external scorer: {0}")]
    Scorer(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub record_id: String,
    pub step: usize,
    pub lsd: f64,
    /// `None` when every frame is silent.
    pub gcc_mse: Option<f64>,
    pub external: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExternalScorer {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl ExternalScorer {
    pub fn parse(spec: &str, timeout: Duration) -> Option<Self> {
        let mut words = spec.split_whitespace().map(String::from);
        let program = words.next()?;
        Some(Self { program, args: words.collect(), timeout })
    }

    pub fn score(&self, reference: &Path, candidate: &Path) -> Result<f64, EvalError> {
        let dir = tempfile::tempdir().map_err(|e| EvalError::Scorer(e.to_string()))?;
        let output = dir.path().join("score.txt");
        let fill = |a: &String| {
            a.replace("{reference}", &reference.to_string_lossy())
                .replace("{candidate}", &candidate.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
        };
        let mut child = Command::new(&self.program)
            .args(self.args.iter().map(fill))
            .spawn()
            .map_err(|e| EvalError::Scorer(format!("cannot start {}: {e}", self.program)))?;
        match child.wait_timeout(self.timeout).map_err(|e| EvalError::Scorer(e.to_string()))? {
            Some(status) if status.success() => {}
            Some(status) => return Err(EvalError::Scorer(format!("exited with {status}"))),
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(EvalError::Scorer("timed out".into()));
            }
        }
        let text = std::fs::read_to_string(&output).map_err(|e| EvalError::Scorer(format!("no score written: {e}")))?;
        text.trim().parse().map_err(|_| EvalError::Scorer(format!("not a number: {:?}", text.trim())))
    }
}

/// Rows for every step (i >= 1) whose candidate file exists.
pub fn evaluate(manifest: &Path, candidate_dir: &Path, scorer: Option<&ExternalScorer>) -> Result<Vec<EvalRow>, EvalError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for record in read_manifest(manifest)? {
        for (step, rel) in record.audio_paths.iter().enumerate().skip(1) {
            let candidate_path = candidate_dir.join(rel);
            if !candidate_path.exists() {
                continue;
            }
            let reference_path = base.join(rel);
            let reference = wav::read_stereo(&reference_path)?;
            let candidate = wav::read_stereo(&candidate_path)?;
            let metric = |source| EvalError::Metric { path: candidate_path.clone(), source };
            let lsd = lsd(&reference, &candidate).map_err(metric)?;
            let gcc = match gcc_mse(&reference, &candidate) {
                Ok(v) => Some(v),
                Err(MetricError::NoVoicedFrames) => None,
                Err(e) => return Err(metric(e)),
            };
            let external = scorer.map(|s| s.score(&reference_path, &candidate_path)).transpose()?;
            rows.push(EvalRow { record_id: record.record_id.clone(), step, lsd, gcc_mse: gcc, external });
        }
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[EvalRow]) -> String {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("record_id,step,lsd,gcc_mse,external\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.record_id, r.step, r.lsd, opt(r.gcc_mse), opt(r.external)));
    }
    out
}
