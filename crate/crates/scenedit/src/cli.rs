//! The `scenedit` command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | internal error |
//! | 2 | usage, schema, parse or validation error |
//! | 3 | IO error (missing/unreadable/unwritable files, empty catalog) |
//! | 4 | edit engine error |
//! | 5 | designer endpoint or external editor error |
//! | 6 | failure budget exceeded during synthesis |
//! | 7 | metric error (mismatched buffers, nothing voiced) |

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use scenedit_core::metrics::{roundtrip_drift, DriftError};
use scenedit_core::plan::{canonicalize_plan, parse_plan_json, parse_steps, plan_to_json, serialize_step, validate_plan};
use scenedit_core::{execute_plan, render_scene, ClipLibrary, EditPlan, Editor, EditorError, OracleEditor, SeededRng};
use rand::SeedableRng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::adapter::{ExternalEditor, Transport};
use crate::catalog::{build_catalog, Catalog, CatalogError};
use crate::designer_llm::{DesignerMode, LlmError};
use crate::eval::{evaluate, rows_to_csv, EvalError, ExternalScorer};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError, StepMeta};
use crate::scene_file::{describe_scene, load_scene, SceneFileError};
use crate::wav::{self, WavError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_ENGINE: u8 = 4;
pub const EXIT_REMOTE: u8 = 5;
pub const EXIT_BUDGET: u8 = 6;
pub const EXIT_METRIC: u8 = 7;

#[derive(Debug, Parser)]
#[command(name = "scenedit", version, about = "Declarative stereo scene editing and dataset synthesis")]
pub struct Cli {
    /// Seed for every random choice; drawn and printed when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for synthesis.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// error, warn, info, debug, trace, or json (structured stderr).
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    /// TOML or JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Template,
    Llm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene description to a stereo WAV.
    Render { scene: PathBuf, out: PathBuf },
    /// Apply a plan (template text or JSON) to a scene, writing a_0..a_n.
    Edit {
        scene: PathBuf,
        /// Plan file, or `-` for stdin.
        plan: String,
        out_dir: PathBuf,
        /// Clip catalog for Add steps.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Reorder steps into remove, modify, add before executing.
        #[arg(long)]
        canonical: bool,
    },
    /// Print the normalized plan and its validation report; exit 0 iff valid.
    Parse {
        plan: String,
        /// Validate against this scene's labels.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Validate against these labels (semicolon separated).
        #[arg(long, value_delimiter = ';')]
        labels: Vec<String>,
    },
    /// Synthesize a dataset.
    Synth {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        records: Option<usize>,
        #[arg(long)]
        single_step: bool,
        #[arg(long, value_enum)]
        designer: Option<ModeArg>,
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// Score candidate audio against a dataset manifest (CSV).
    Eval {
        manifest: PathBuf,
        candidate_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// External scorer command using {reference} {candidate} {output}.
        #[arg(long)]
        scorer: Option<String>,
    },
    /// Repeated add/remove drift experiment (CSV).
    Roundtrip {
        /// `oracle`, `cmd:<program> <args...>` or an http(s) URL.
        #[arg(long)]
        editor: String,
        /// Input audio; defaults to the render of --scene.
        #[arg(long)]
        audio: Option<PathBuf>,
        #[arg(long)]
        label: String,
        #[arg(long, default_value_t = 5)]
        rounds: usize,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-call timeout for external editors, seconds.
        #[arg(long, default_value_t = 300.0)]
        timeout: f64,
    },
    /// Write the synthetic test catalog.
    TestCatalog { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        Self { code, kind, message: message.into() }
    }
}

impl From<SceneFileError> for CliError {
    fn from(e: SceneFileError) -> Self {
        match &e {
            SceneFileError::Syntax { .. } | SceneFileError::Schema { .. } => CliError::new(EXIT_SCHEMA, "schema", e.to_string()),
            SceneFileError::Audio { .. } => CliError::new(EXIT_SCHEMA, "audio", e.to_string()),
            SceneFileError::Io { .. } | SceneFileError::Wav(_) => CliError::new(EXIT_IO, "io", e.to_string()),
        }
    }
}

impl From<WavError> for CliError {
    fn from(e: WavError) -> Self {
        CliError::new(EXIT_IO, "io", e.to_string())
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        match &e {
            CatalogError::Sidecar { .. } => CliError::new(EXIT_SCHEMA, "schema", e.to_string()),
            _ => CliError::new(EXIT_IO, "io", e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::FailureBudgetExceeded { stats, .. } => {
                let stats = serde_json::to_string(stats).unwrap_or_default();
                CliError::new(EXIT_BUDGET, "failure_budget", format!("{e}; stats: {stats}"))
            }
            PipelineError::Config(_) => CliError::new(EXIT_SCHEMA, "config", e.to_string()),
            PipelineError::Designer(LlmError::MissingEndpoint | LlmError::MissingApiKey(_)) => {
                CliError::new(EXIT_SCHEMA, "config", e.to_string())
            }
            PipelineError::Designer(_) => CliError::new(EXIT_REMOTE, "designer", e.to_string()),
            PipelineError::OutputDirNotWritable { .. } | PipelineError::Io { .. } => CliError::new(EXIT_IO, "io", e.to_string()),
        }
    }
}

impl From<EditorError> for CliError {
    fn from(e: EditorError) -> Self {
        match &e {
            EditorError::Edit(_) => CliError::new(EXIT_ENGINE, "engine", e.to_string()),
            _ => CliError::new(EXIT_REMOTE, "editor", e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(EXIT_IO, "io", format!("{}: {e}", path.display()))
}

/// Values from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub log_level: Option<String>,
    pub catalog: Option<PathBuf>,
    pub synth: Option<Value>,
}

pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    let value: Value = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::new(EXIT_SCHEMA, "config", format!("{}: {e}", path.display())))?
    } else {
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::new(EXIT_SCHEMA, "config", format!("{}: {e}", path.display())))?;
        serde_json::to_value(table).map_err(|e| CliError::new(EXIT_SCHEMA, "config", e.to_string()))?
    };
    serde_json::from_value(value).map_err(|e| CliError::new(EXIT_SCHEMA, "config", format!("{}: {e}", path.display())))
}

/// Plan from template text or JSON, chosen by the first non-whitespace byte.
pub fn parse_plan_auto(text: &str) -> Result<(EditPlan, Vec<String>), CliError> {
    match text.trim_start().as_bytes().first() {
        Some(b'{') | Some(b'[') => {
            let parsed = parse_plan_json(text.as_bytes()).map_err(|e| CliError::new(EXIT_SCHEMA, "parse", e.to_string()))?;
            Ok((parsed.plan, parsed.warnings))
        }
        _ => {
            let steps = parse_steps(text).map_err(|e| CliError::new(EXIT_SCHEMA, "parse", e.to_string()))?;
            Ok((EditPlan { steps, ..Default::default() }, Vec::new()))
        }
    }
}

fn read_text(arg: &str) -> Result<String, CliError> {
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| io_error(Path::new("<stdin>"), e))?;
        return Ok(s);
    }
    std::fs::read_to_string(arg).map_err(|e| io_error(Path::new(arg), e))
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn violations_error(report: &scenedit_core::plan::ValidationReport) -> CliError {
    let lines: Vec<String> = report
        .violations
        .iter()
        .map(|v| match v.step_index {
            Some(i) => format!("{} (step {i}): {}", v.rule, v.message),
            None => format!("{}: {}", v.rule, v.message),
        })
        .collect();
    CliError::new(EXIT_SCHEMA, "validation", format!("plan is invalid:\n  {}", lines.join("\n  ")))
}

struct Context {
    seed: u64,
    file: FileConfig,
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> u64 {
    flag.or(file).unwrap_or_else(|| {
        let seed = rand::random::<u64>();
        eprintln!("seed: {seed}");
        seed
    })
}

fn cmd_render(scene: &Path, out: &Path) -> Result<(), CliError> {
    let scene = load_scene(scene)?;
    let audio = render_scene(&scene);
    let gain = wav::export(out, &audio)?;
    println!(
        "frames={} peak={:.6} rms={:.6} export_gain={}",
        audio.len(),
        audio.peak(),
        audio.rms(),
        gain
    );
    Ok(())
}

fn open_catalog(flag: Option<&Path>, ctx: &Context) -> Result<Option<Catalog>, CliError> {
    match flag.or(ctx.file.catalog.as_deref()) {
        Some(dir) => {
            let catalog = build_catalog(dir)?;
            Ok(Some(catalog))
        }
        None => Ok(None),
    }
}

fn cmd_edit(scene_path: &Path, plan_arg: &str, out_dir: &Path, catalog: Option<&Path>, canonical: bool, ctx: &Context) -> Result<(), CliError> {
    let scene = load_scene(scene_path)?;
    let (mut plan, warnings) = parse_plan_auto(&read_text(plan_arg)?)?;
    for w in warnings {
        log::warn!("{w}");
    }
    let labels = scene.labels();
    if plan.sound_sources.is_empty() {
        plan.sound_sources = labels.clone();
    }
    let report = validate_plan(&plan, &labels);
    if !report.is_valid() {
        return Err(violations_error(&report));
    }
    if canonical {
        plan = canonicalize_plan(&plan);
    }
    let catalog = open_catalog(catalog, ctx)?;
    let mut rng = SeededRng::seed_from_u64(ctx.seed);
    let trajectory = execute_plan(&scene, &plan.steps, catalog.as_ref().map(|c| c as &dyn ClipLibrary), &mut rng)
        .map_err(|e| CliError::new(EXIT_ENGINE, "engine", e.to_string()))?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut audio_paths = Vec::new();
    let mut gains = Vec::new();
    for (i, t) in trajectory.iter().enumerate() {
        let name = format!("a{i}.wav");
        gains.push(wav::export(&out_dir.join(&name), &t.audio)?);
        audio_paths.push(name);
    }
    let meta: Vec<StepMeta> = plan
        .steps
        .iter()
        .zip(&trajectory[1..])
        .zip(&gains[1..])
        .map(|((step, t), gain)| StepMeta {
            step: serialize_step(step),
            edited_event_ids: t.edited_event_ids.clone(),
            events_after: describe_scene(&t.scene)
                .events
                .into_iter()
                .filter(|e| e.event_id.as_ref().is_some_and(|id| t.edited_event_ids.contains(id)))
                .collect(),
            export_gain: *gain,
        })
        .collect();
    let manifest = json!({
        "seed": ctx.seed,
        "scene_initial": describe_scene(&scene),
        "plan": plan_to_json(&plan),
        "audio_paths": audio_paths,
        "initial_export_gain": gains[0],
        "per_step_meta": meta,
    });
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
    println!("wrote {} files to {}", trajectory.len(), out_dir.display());
    Ok(())
}

fn cmd_parse(plan_arg: &str, scene: Option<&Path>, labels: &[String]) -> Result<(), CliError> {
    let (plan, warnings) = parse_plan_auto(&read_text(plan_arg)?)?;
    let scene_labels = match scene {
        Some(path) => load_scene(path)?.labels(),
        None if !labels.is_empty() => labels.to_vec(),
        None => plan.sound_sources.clone(),
    };
    let report = validate_plan(&plan, &scene_labels);
    let out = json!({
        "plan": plan_to_json(&plan),
        "steps": plan.steps.iter().map(serialize_step).collect::<Vec<_>>(),
        "warnings": warnings,
        "valid": report.is_valid(),
        "violations": report.violations,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
    if report.is_valid() {
        Ok(())
    } else {
        Err(violations_error(&report))
    }
}

/// Pipeline config from the file's `[synth]` table, then global values, then flags.
pub fn synth_config(
    ctx_seed: Option<u64>,
    workers: Option<usize>,
    file: &FileConfig,
    overrides: &SynthOverrides,
) -> Result<PipelineConfig, CliError> {
    let table = file.synth.clone().unwrap_or(Value::Object(Default::default()));
    let table_seed = table.get("seed").and_then(Value::as_u64);
    let mut config: PipelineConfig =
        serde_json::from_value(table).map_err(|e| CliError::new(EXIT_SCHEMA, "config", format!("[synth]: {e}")))?;
    let explicit = ctx_seed.or(file.seed).or(table_seed);
    config.seed = resolve_seed(explicit, None);
    if let Some(w) = workers.or(file.workers) {
        config.worker_count = w;
    }
    if let Some(c) = overrides.catalog.clone().or_else(|| file.catalog.clone()) {
        config.catalog_dir = Some(c);
    }
    if let Some(o) = overrides.out.clone() {
        config.output_dir = o;
    }
    if let Some(n) = overrides.records {
        config.record_count = n;
    }
    if overrides.single_step {
        config.single_step_expansion = true;
    }
    if let Some(mode) = overrides.designer {
        config.designer.mode = match mode {
            ModeArg::Template => DesignerMode::Template,
            ModeArg::Llm => DesignerMode::Llm,
        };
    }
    if let Some(url) = overrides.endpoint.clone() {
        config.designer.endpoint_url = Some(url);
    }
    Ok(config)
}

#[derive(Debug, Default, Clone)]
pub struct SynthOverrides {
    pub catalog: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub records: Option<usize>,
    pub single_step: bool,
    pub designer: Option<ModeArg>,
    pub endpoint: Option<String>,
}

fn cmd_synth(config: PipelineConfig) -> Result<(), CliError> {
    let dir = config
        .catalog_dir
        .clone()
        .ok_or_else(|| CliError::new(EXIT_SCHEMA, "config", "synth needs --catalog or catalog_dir"))?;
    let catalog = build_catalog(&dir)?;
    let stats = run_pipeline(&config, &catalog)?;
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

fn cmd_eval(manifest: &Path, candidates: &Path, out: Option<&Path>, scorer: Option<&str>) -> Result<(), CliError> {
    let scorer = match scorer {
        Some(spec) => Some(
            ExternalScorer::parse(spec, Duration::from_secs(300))
                .ok_or_else(|| CliError::new(EXIT_SCHEMA, "usage", "empty --scorer command"))?,
        ),
        None => None,
    };
    let rows = evaluate(manifest, candidates, scorer.as_ref()).map_err(|e| match &e {
        EvalError::Manifest(_) | EvalError::Wav(_) => CliError::new(EXIT_IO, "io", e.to_string()),
        EvalError::Metric { .. } => CliError::new(EXIT_METRIC, "metric", e.to_string()),
        EvalError::Scorer(_) => CliError::new(EXIT_REMOTE, "scorer", e.to_string()),
    })?;
    log::info!("scored {} candidate files", rows.len());
    write_text(out, &rows_to_csv(&rows))
}

#[allow(clippy::too_many_arguments)]
fn cmd_roundtrip(
    editor_spec: &str,
    audio: Option<&Path>,
    label: &str,
    rounds: usize,
    scene: Option<&Path>,
    catalog: Option<&Path>,
    out: Option<&Path>,
    timeout: f64,
    ctx: &Context,
) -> Result<(), CliError> {
    let scene = scene.map(load_scene).transpose()?;
    let input = match (audio, &scene) {
        (Some(path), _) => wav::read_stereo(path)?,
        (None, Some(s)) => render_scene(s),
        (None, None) => return Err(CliError::new(EXIT_SCHEMA, "usage", "roundtrip needs --audio or --scene")),
    };
    let catalog = open_catalog(catalog, ctx)?;
    let mut editor: Box<dyn Editor + '_> = if editor_spec == "oracle" {
        let scene = scene.ok_or_else(|| CliError::new(EXIT_SCHEMA, "usage", "the oracle editor needs --scene"))?;
        let library = catalog.as_ref().map(|c| c as &dyn ClipLibrary);
        Box::new(OracleEditor::new(scene, library, ctx.seed))
    } else {
        let transport = Transport::parse(editor_spec)
            .ok_or_else(|| CliError::new(EXIT_SCHEMA, "usage", format!("unknown editor spec {editor_spec:?}")))?;
        let editor = ExternalEditor::new(transport, None, Duration::from_secs_f64(timeout))
            .map_err(|e| CliError::new(EXIT_IO, "io", e.to_string()))?;
        Box::new(editor)
    };
    let result = roundtrip_drift(editor.as_mut(), &input, label, rounds).map_err(|e| match e {
        DriftError::Editor { round, source } => {
            let mut err = CliError::from(source);
            err.message = format!("round {round}: {}", err.message);
            err
        }
        DriftError::Metric(m) => CliError::new(EXIT_METRIC, "metric", m.to_string()),
    })?;
    eprintln!("editor {} label {:?}: {:?}", result.editor_id, result.label_used, result.lsd_per_round);
    write_text(out, &result.to_csv())
}

fn init_logging(level: &str) {
    let json = level == "json";
    let filter = if json { "info" } else { level };
    let mut builder = env_logger::Builder::new();
    builder.parse_filters(filter);
    if json {
        builder.format(|buf, record| {
            let line = json!({
                "level": record.level().to_string().to_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = builder.try_init();
}

fn run_command(cli: Cli, file: FileConfig) -> Result<(), CliError> {
    let needs_seed = matches!(cli.command, Command::Edit { .. } | Command::Roundtrip { .. });
    let seed = if needs_seed { resolve_seed(cli.seed, file.seed) } else { cli.seed.or(file.seed).unwrap_or(0) };
    match cli.command {
        Command::Render { scene, out } => cmd_render(&scene, &out),
        Command::Edit { scene, plan, out_dir, catalog, canonical } => {
            let ctx = Context { seed, file };
            cmd_edit(&scene, &plan, &out_dir, catalog.as_deref(), canonical, &ctx)
        }
        Command::Parse { plan, scene, labels } => cmd_parse(&plan, scene.as_deref(), &labels),
        Command::Synth { catalog, out, records, single_step, designer, endpoint } => {
            let overrides = SynthOverrides { catalog, out, records, single_step, designer, endpoint };
            let config = synth_config(cli.seed, cli.workers, &file, &overrides)?;
            cmd_synth(config)
        }
        Command::Eval { manifest, candidate_dir, out, scorer } => cmd_eval(&manifest, &candidate_dir, out.as_deref(), scorer.as_deref()),
        Command::Roundtrip { editor, audio, label, rounds, scene, catalog, out, timeout } => {
            let ctx = Context { seed, file };
            cmd_roundtrip(&editor, audio.as_deref(), &label, rounds, scene.as_deref(), catalog.as_deref(), out.as_deref(), timeout, &ctx)
        }
        Command::TestCatalog { dir } => crate::testdata::write_test_catalog(&dir)
            .map_err(|e| CliError::new(EXIT_IO, "io", format!("{}: {e}", dir.display()))),
    }
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> u8 {
    let file = match cli.config.as_deref().map(load_config).transpose() {
        Ok(file) => file.unwrap_or_default(),
        Err(e) => {
            report(&e, cli.log_level.as_deref() == Some("json"));
            return e.code;
        }
    };
    let level = cli.log_level.clone().or_else(|| file.log_level.clone()).unwrap_or_else(|| "warn".into());
    let json = level == "json";
    init_logging(&level);
    match run_command(cli, file) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report(&e, json);
            e.code
        }
    }
}

fn report(e: &CliError, json: bool) {
    if json {
        eprintln!("{}", json!({"level": "error", "code": e.code, "kind": e.kind, "message": e.message}));
    } else {
        eprintln!("error: {}", e.message);
    }
}

pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    std::process::ExitCode::from(run(cli))
}
