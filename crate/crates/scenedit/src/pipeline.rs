//! Dataset synthesis: scenes → plans → trajectories → WAV files + manifests.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! manifest.jsonl        one TrajectoryRecord per line, in record order
//! single_step.jsonl     one SingleStepPair per step (when enabled)
//! audio/r000000/a0.wav  a_0 ... a_n of each record
//! ```
//!
//! Record `i` draws every random choice from `record_rng(seed, i)`, so the
//! output does not depend on the worker count.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use scenedit_core::designer::{design_plan_filtered, DesignerError, BUILTIN_SCENARIOS};
use scenedit_core::library::{prepare_clip, resolve_label, sample_scene};
use scenedit_core::metrics::{expected_step_delta, residual_error};
use scenedit_core::plan::{canonicalize_plan, plan_to_json, serialize_step, validate_plan};
use scenedit_core::seed::record_rng;
use scenedit_core::{
    apply_step, execute_plan, render_scene, AtomicStep, AudioBuffer, EditError, EditPlan, EventId, GainDb, LibraryError,
    PlanError, Scene, SceneParams, SeededRng,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::designer_llm::{design_plans_llm, DesignerConfig, DesignerMode, LlmError};
use crate::scene_file::{build_scene, describe_scene, EventDescription, SceneDescription, SceneFileError};
use crate::wav::{self, WavError};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SINGLE_STEP_FILE: &str = "single_step.jsonl";
/// Per-sample tolerance of the step residual check.
pub const RESIDUAL_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub record_count: usize,
    pub catalog_dir: Option<PathBuf>,
    pub k_min: usize,
    pub k_max: usize,
    pub duration_seconds: f64,
    pub gain_min_db: f64,
    pub gain_max_db: f64,
    pub designer: DesignerConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub worker_count: usize,
    pub single_step_expansion: bool,
    /// Failed records tolerated before aborting; default 1% of `record_count`, rounded up.
    pub failure_budget: Option<usize>,
    /// Fixed `created_at` stamp; the current time when absent.
    pub created_at: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let scene = SceneParams::default();
        Self {
            record_count: 10,
            catalog_dir: None,
            k_min: scene.k_min,
            k_max: scene.k_max,
            duration_seconds: scene.duration_seconds,
            gain_min_db: scene.gain_min_db,
            gain_max_db: scene.gain_max_db,
            designer: DesignerConfig::default(),
            output_dir: PathBuf::from("dataset"),
            seed: 0,
            worker_count: std::thread::available_parallelism().map_or(1, |n| n.get()),
            single_step_expansion: false,
            failure_budget: None,
            created_at: None,
        }
    }
}

impl PipelineConfig {
    pub fn scene_params(&self) -> Result<SceneParams, PipelineError> {
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(PipelineError::Config(format!("invalid event range {}..={}", self.k_min, self.k_max)));
        }
        if self.k_min < 2 || self.k_max > 5 {
            log::warn!("event range {}..={} is outside the usual 2..=5", self.k_min, self.k_max);
        }
        if !(self.duration_seconds > 0.0) || self.gain_min_db > self.gain_max_db {
            return Err(PipelineError::Config("duration must be positive and gain_min_db <= gain_max_db".into()));
        }
        Ok(SceneParams {
            k_min: self.k_min,
            k_max: self.k_max,
            duration_seconds: self.duration_seconds,
            gain_min_db: self.gain_min_db,
            gain_max_db: self.gain_max_db,
        })
    }

    pub fn budget(&self) -> usize {
        self.failure_budget.unwrap_or(self.record_count.div_ceil(100))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMeta {
    pub step: String,
    pub edited_event_ids: Vec<EventId>,
    /// Events touched by the step that still exist afterwards, as they are after it.
    pub events_after: Vec<EventDescription>,
    /// Gain applied when exporting this step's audio (1 unless it would clip).
    pub export_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub schema_version: u32,
    pub record_id: String,
    pub index: u64,
    pub seed: u64,
    pub scene_initial: SceneDescription,
    /// Plan in the JSON form, steps in execution order.
    pub plan: serde_json::Value,
    /// Steps in the order the designer emitted them.
    pub designed_steps: Vec<String>,
    /// Relative to the output directory; `a_0` first.
    pub audio_paths: Vec<String>,
    pub initial_export_gain: f64,
    pub per_step_meta: Vec<StepMeta>,
    pub created_at: String,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> impl Iterator<Item = &str> {
        self.per_step_meta.iter().map(|m| m.step.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStepPair {
    pub record_id: String,
    pub step_index: usize,
    pub step: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedRecord {
    pub index: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PipelineStats {
    pub requested: usize,
    pub succeeded: usize,
    pub failures: usize,
    pub failed: Vec<FailedRecord>,
    pub steps_total: usize,
    pub single_step_pairs: usize,
    pub designer_retries: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Designer(#[from] DesignerError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("plan failed validation: {0}")]
    Validation(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("step {step}: residual {error:e} exceeds tolerance")]
    Residual { step: usize, error: f64 },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("output directory {path} is not writable: {message}")]
    OutputDirNotWritable { path: PathBuf, message: String },
    #[error("{} records failed, budget is {budget}", stats.failures)]
    FailureBudgetExceeded { budget: usize, stats: Box<PipelineStats> },
    #[error("invalid pipeline config: {0}")]
    Config(String),
    /// Endpoint configuration or authentication problem; retrying other records cannot help.
    #[error("designer: {0}")]
    Designer(LlmError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RecordError + '_ {
    move |e| RecordError::Io { path: path.into(), message: e.to_string() }
}

pub fn record_id(index: u64) -> String {
    format!("r{index:06}")
}

fn audio_rel_path(id: &str, step: usize) -> String {
    format!("audio/{id}/a{step}.wav")
}

/// Scene and RNG for record `index`; the RNG continues into plan design and execution.
pub fn sample_record_scene(catalog: &Catalog, params: &SceneParams, seed: u64, index: u64) -> Result<(Scene, SeededRng), RecordError> {
    let mut rng = record_rng(seed, index);
    let scene = sample_scene(catalog, &mut rng, params)?;
    Ok((scene, rng))
}

/// Template-designer plan whose additions the catalog can resolve.
pub fn design_template(catalog: &Catalog, scene: &Scene, rng: &mut SeededRng) -> Result<EditPlan, DesignerError> {
    let can_add = |label: &str| resolve_label(catalog, label).is_some();
    design_plan_filtered(BUILTIN_SCENARIOS, &scene.labels(), &can_add, rng)
}

/// Validates, canonicalizes, executes and exports one record.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_record(
    catalog: &Catalog,
    scene: &Scene,
    plan: &EditPlan,
    rng: &mut SeededRng,
    index: u64,
    seed: u64,
    output_dir: &Path,
    created_at: &str,
) -> Result<TrajectoryRecord, RecordError> {
    let report = validate_plan(plan, &scene.labels());
    if !report.is_valid() {
        let rules: Vec<String> = report.violations.iter().map(|v| format!("{} {}", v.rule, v.message)).collect();
        return Err(RecordError::Validation(rules.join("; ")));
    }
    let canonical = canonicalize_plan(plan);
    let trajectory = execute_plan(scene, &canonical.steps, Some(catalog), rng)?;
    for i in 1..trajectory.len() {
        let (before, after) = (&trajectory[i - 1], &trajectory[i]);
        let expected = expected_step_delta(&before.scene, &after.scene, &after.edited_event_ids);
        let error = residual_error(&before.audio, &after.audio, &expected);
        if !(error <= RESIDUAL_TOLERANCE) {
            return Err(RecordError::Residual { step: i - 1, error });
        }
    }

    let id = record_id(index);
    let dir = output_dir.join("audio").join(&id);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut audio_paths = Vec::with_capacity(trajectory.len());
    let mut gains = Vec::with_capacity(trajectory.len());
    for (i, t) in trajectory.iter().enumerate() {
        let rel = audio_rel_path(&id, i);
        gains.push(wav::export(&output_dir.join(&rel), &t.audio)?);
        audio_paths.push(rel);
    }
    let per_step_meta = canonical
        .steps
        .iter()
        .zip(&trajectory[1..])
        .zip(&gains[1..])
        .map(|((step, t), gain)| {
            let described = describe_scene(&t.scene);
            StepMeta {
                step: serialize_step(step),
                edited_event_ids: t.edited_event_ids.clone(),
                events_after: described
                    .events
                    .into_iter()
                    .filter(|e| e.event_id.as_ref().is_some_and(|id| t.edited_event_ids.contains(id)))
                    .collect(),
                export_gain: *gain,
            }
        })
        .collect();
    Ok(TrajectoryRecord {
        schema_version: SCHEMA_VERSION,
        record_id: id,
        index,
        seed,
        scene_initial: describe_scene(scene),
        plan: plan_to_json(&canonical),
        designed_steps: plan.steps.iter().map(serialize_step).collect(),
        audio_paths,
        initial_export_gain: gains[0],
        per_step_meta,
        created_at: created_at.into(),
    })
}

/// One (step, a_{i-1}, a_i) tuple per step of every record.
pub fn expand_single_step<'a>(records: impl IntoIterator<Item = &'a TrajectoryRecord>) -> Vec<SingleStepPair> {
    records
        .into_iter()
        .flat_map(|r| {
            r.per_step_meta.iter().enumerate().map(move |(i, meta)| SingleStepPair {
                record_id: r.record_id.clone(),
                step_index: i,
                step: meta.step.clone(),
                before: r.audio_paths[i].clone(),
                after: r.audio_paths[i + 1].clone(),
            })
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Scene(#[from] SceneFileError),
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
    #[error("step {step}: {source}")]
    Edit { step: usize, source: EditError },
}

/// Rebuilds a record's trajectory from its manifest row alone (no RNG):
/// clips come from the recorded origin paths, added events from `events_after`.
pub fn replay_record(record: &TrajectoryRecord, base_dir: &Path) -> Result<Vec<(Scene, AudioBuffer, Vec<EventId>)>, ReplayError> {
    let mut scene = build_scene(&record.scene_initial, base_dir)?;
    let mut out = vec![(scene.clone(), render_scene(&scene), Vec::new())];
    for (i, meta) in record.per_step_meta.iter().enumerate() {
        let step = scenedit_core::plan::parse_step(&meta.step)
            .map_err(|e| ReplayError::Step { step: i, message: e.to_string() })?;
        let edited = if let AtomicStep::Add { .. } = step {
            let [event] = meta.events_after.as_slice() else {
                return Err(ReplayError::Step { step: i, message: "add step must record exactly one event".into() });
            };
            let raw = crate::wav::load_clip(&base_dir.join(&event.clip), &event.label).map_err(SceneFileError::from)?;
            let clip = prepare_clip(&raw, scene.duration_seconds)
                .map_err(|e| ReplayError::Step { step: i, message: e.to_string() })?;
            vec![scene.push(event.label.clone(), Arc::new(clip), event.direction, GainDb(event.gain_db))]
        } else {
            let outcome = apply_step(&scene, &step, None, &mut record_rng(0, 0))
                .map_err(|source| ReplayError::Edit { step: i, source })?;
            scene = outcome.scene_after;
            outcome.edited_event_ids
        };
        out.push((scene.clone(), render_scene(&scene), edited));
    }
    Ok(out)
}

fn check_writable(dir: &Path) -> Result<(), PipelineError> {
    let fail = |e: std::io::Error| PipelineError::OutputDirNotWritable { path: dir.into(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".scenedit-write-probe");
    std::fs::write(&probe, b"").map_err(fail)?;
    std::fs::remove_file(&probe).map_err(fail)
}

fn remove_record_files(output_dir: &Path, index: u64) {
    let dir = output_dir.join("audio").join(record_id(index));
    if dir.exists() {
        if let Err(e) = std::fs::remove_dir_all(&dir) {
            log::warn!("cannot remove {}: {e}", dir.display());
        }
    }
}

struct JsonlWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    fn create(path: PathBuf) -> Result<Self, PipelineError> {
        let file = File::create(&path).map_err(|e| PipelineError::OutputDirNotWritable { path: path.clone(), message: e.to_string() })?;
        Ok(Self { path, out: BufWriter::new(file) })
    }

    fn write<T: Serialize>(&mut self, row: &T) -> Result<(), PipelineError> {
        let line = serde_json::to_string(row).expect("manifest rows serialize");
        writeln!(self.out, "{line}").map_err(|e| PipelineError::Io { path: self.path.clone(), message: e.to_string() })
    }

    fn finish(mut self) -> Result<(), PipelineError> {
        self.out.flush().map_err(|e| PipelineError::Io { path: self.path.clone(), message: e.to_string() })
    }
}

/// Produces one chunk of records; results are in index order.
fn run_chunk(
    pool: &rayon::ThreadPool,
    catalog: &Catalog,
    config: &PipelineConfig,
    params: &SceneParams,
    indices: std::ops::Range<u64>,
    created_at: &str,
    retries: &mut usize,
) -> Result<Vec<(u64, Result<TrajectoryRecord, RecordError>)>, PipelineError> {
    let out_dir = &config.output_dir;
    let seed = config.seed;
    pool.install(|| match config.designer.mode {
        DesignerMode::Template => Ok(indices
            .into_par_iter()
            .map(|index| {
                let result = sample_record_scene(catalog, params, seed, index).and_then(|(scene, mut rng)| {
                    let plan = design_template(catalog, &scene, &mut rng)?;
                    synthesize_record(catalog, &scene, &plan, &mut rng, index, seed, out_dir, created_at)
                });
                (index, result)
            })
            .collect()),
        DesignerMode::Llm => {
            let sampled: Vec<(u64, Result<(Scene, SeededRng), RecordError>)> =
                indices.into_par_iter().map(|index| (index, sample_record_scene(catalog, params, seed, index))).collect();
            let label_sets: Vec<Vec<String>> =
                sampled.iter().filter_map(|(_, s)| s.as_ref().ok()).map(|(scene, _)| scene.labels()).collect();
            let designed = design_plans_llm(&label_sets, &config.designer);
            let plans: Vec<Result<EditPlan, LlmError>> = match designed {
                Ok(batch) => {
                    *retries += batch.retries;
                    let mut errors: HashMap<usize, LlmError> = batch.dropped.into_iter().collect();
                    batch
                        .plans
                        .into_iter()
                        .enumerate()
                        .map(|(i, p)| {
                            p.ok_or_else(|| errors.remove(&i).unwrap_or(LlmError::MalformedResponse("no plan".into())))
                        })
                        .collect()
                }
                Err(e) if e.is_fatal() => return Err(PipelineError::Designer(e)),
                Err(e) => label_sets.iter().map(|_| Err(e.clone())).collect(),
            };
            let mut plans = plans.into_iter();
            let jobs: Vec<(u64, Result<(Scene, SeededRng, EditPlan), RecordError>)> = sampled
                .into_iter()
                .map(|(index, s)| {
                    let job = s.and_then(|(scene, rng)| {
                        let plan = plans.next().expect("one plan slot per sampled scene")?;
                        Ok((scene, rng, plan))
                    });
                    (index, job)
                })
                .collect();
            Ok(jobs
                .into_par_iter()
                .map(|(index, job)| {
                    let result = job.and_then(|(scene, mut rng, plan)| {
                        synthesize_record(catalog, &scene, &plan, &mut rng, index, seed, out_dir, created_at)
                    });
                    (index, result)
                })
                .collect())
        }
    })
}

pub fn run_pipeline(config: &PipelineConfig, catalog: &Catalog) -> Result<PipelineStats, PipelineError> {
    let started = Instant::now();
    let params = config.scene_params()?;
    check_writable(&config.output_dir)?;
    let created_at = config.created_at.clone().unwrap_or_else(|| chrono::Utc::now().to_rfc3339());
    let workers = config.worker_count.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
    let chunk = match config.designer.mode {
        DesignerMode::Template => (workers * 4) as u64,
        // Request grouping must not depend on the worker count.
        DesignerMode::Llm => (config.designer.batch_size.max(1) * config.designer.concurrency.max(1)) as u64,
    };
    let budget = config.budget();

    let mut manifest = JsonlWriter::create(config.output_dir.join(MANIFEST_FILE))?;
    let mut single = if config.single_step_expansion {
        Some(JsonlWriter::create(config.output_dir.join(SINGLE_STEP_FILE))?)
    } else {
        None
    };
    let mut stats = PipelineStats { requested: config.record_count, ..Default::default() };
    let mut next = 0u64;
    while stats.succeeded < config.record_count {
        let results = run_chunk(&pool, catalog, config, &params, next..next + chunk, &created_at, &mut stats.designer_retries)?;
        next += chunk;
        for (index, result) in results {
            if stats.succeeded == config.record_count {
                remove_record_files(&config.output_dir, index);
                continue;
            }
            match result {
                Ok(record) => {
                    manifest.write(&record)?;
                    if let Some(single) = single.as_mut() {
                        for pair in expand_single_step([&record]) {
                            single.write(&pair)?;
                            stats.single_step_pairs += 1;
                        }
                    }
                    stats.steps_total += record.per_step_meta.len();
                    stats.succeeded += 1;
                }
                Err(e) => {
                    log::warn!("record {index} failed: {e}");
                    remove_record_files(&config.output_dir, index);
                    stats.failures += 1;
                    stats.failed.push(FailedRecord { index, error: e.to_string() });
                    if stats.failures > budget {
                        manifest.finish()?;
                        stats.wall_seconds = started.elapsed().as_secs_f64();
                        return Err(PipelineError::FailureBudgetExceeded { budget, stats: Box::new(stats) });
                    }
                }
            }
        }
    }
    manifest.finish()?;
    if let Some(single) = single {
        single.finish()?;
    }
    stats.wall_seconds = started.elapsed().as_secs_f64();
    Ok(stats)
}

/// Reads a manifest back.
pub fn read_manifest(path: &Path) -> Result<Vec<TrajectoryRecord>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io { path: path.into(), message: e.to_string() })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| PipelineError::Io { path: path.into(), message: format!("line {}: {e}", i + 1) })
        })
        .collect()
}
