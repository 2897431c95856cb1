//! Run directories and repeated-run execution.
//!
//! Layout: `<runs_root>/<problem_id>/run-NN/` holding `manifest.json`,
//! `transcript.jsonl`, `solution.json`, `cassette.jsonl` and, once graded,
//! `score.json`.

use crate::config::HarnessConfig;
use crate::error::CliError;
use physagent_core::agent::{run_agent, transcript, AgentContext, RunPolicy, Solution, TerminatedBy};
use physagent_core::dsl::ExecBudget;
use physagent_core::gateway::{
    canonical_digest, Cassette, CassetteEntry, ChatBackend, ChatMessage, Completion, GatewayError, LiveBackend,
    ModelConfig, ReplayBackend, ReqwestTransport, Transport, API_KEY_ENV,
};
use physagent_core::problem::{load_problem, Problem};
use physagent_core::tools::{
    load_recordings, parse_tool_names, registry_build, ModelHandle, RecordedTransport, ToolDeps, WolframTool,
    WOLFRAM_APP_ID_ENV,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const SOLUTION_FILE: &str = "solution.json";
pub const CASSETTE_FILE: &str = "cassette.jsonl";
pub const SCORE_FILE: &str = "score.json";
pub const GRADE_FILE: &str = "grade.json";

/// App id sent to the knowledge-engine recordings when none is configured.
const OFFLINE_APP_ID: &str = "offline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub problem_id: String,
    pub problem_dir: PathBuf,
    pub config_digest: String,
    pub enabled_tools: BTreeSet<String>,
    /// Model id per role.
    pub models: BTreeMap<String, String>,
    pub policy: RunPolicy,
    pub budget: ExecBudget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,
    pub harness_version: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminated_by: Option<TerminatedBy>,
    #[serde(default)]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<Self, CliError> {
        read_json(&run_dir.join(MANIFEST_FILE))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_file(path, &text)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn run_index(name: &str) -> Option<usize> {
    name.strip_prefix("run-")?.parse().ok()
}

/// Reserve `count` new run directories under `problem_root`, taking the
/// lowest unused indices. Directories are created here, before any run
/// starts.
pub fn allocate_runs(problem_root: &Path, count: usize) -> Result<Vec<(String, PathBuf)>, CliError> {
    let io = |e: std::io::Error| CliError::data(format!("{}: {e}", problem_root.display()));
    std::fs::create_dir_all(problem_root).map_err(io)?;
    let mut taken = BTreeSet::new();
    for entry in std::fs::read_dir(problem_root).map_err(io)? {
        if let Some(i) = run_index(&entry.map_err(io)?.file_name().to_string_lossy()) {
            taken.insert(i);
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut i = 1;
    while out.len() < count {
        if !taken.contains(&i) {
            let id = format!("run-{i:02}");
            let dir = problem_root.join(&id);
            match std::fs::create_dir(&dir) {
                Ok(()) => out.push((id, dir)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {}
                Err(e) => return Err(io(e)),
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Every `run-NN` directory two levels below a runs root, sorted.
pub fn scan_runs(runs_root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::data(format!("{}: {e}", runs_root.display()));
    let mut dirs = Vec::new();
    for problem in std::fs::read_dir(runs_root).map_err(io)? {
        let problem = problem.map_err(io)?.path();
        if !problem.is_dir() {
            continue;
        }
        for run in std::fs::read_dir(&problem).map_err(io)? {
            let run = run.map_err(io)?.path();
            if run.is_dir() && run.file_name().and_then(|n| n.to_str()).and_then(run_index).is_some() {
                dirs.push(run);
            }
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Appends every exchange passing through any of its taps, so one cassette
/// covers all model roles of a run in call order.
#[derive(Default)]
pub struct CallLog {
    entries: Mutex<Vec<CassetteEntry>>,
}

impl CallLog {
    pub fn cassette(&self) -> Cassette {
        Cassette {
            entries: self.entries.lock().unwrap().clone(),
        }
    }
}

pub struct Tap {
    inner: Arc<dyn ChatBackend>,
    log: Arc<CallLog>,
}

impl Tap {
    pub fn new(inner: Arc<dyn ChatBackend>, log: Arc<CallLog>) -> Self {
        Tap { inner, log }
    }
}

impl ChatBackend for Tap {
    fn generate(&self, messages: &[ChatMessage], cfg: &ModelConfig) -> Result<Completion, GatewayError> {
        let completion = self.inner.generate(messages, cfg)?;
        let mut entries = self.log.entries.lock().unwrap();
        let index = entries.len();
        entries.push(CassetteEntry {
            index,
            prompt_digest: canonical_digest(messages),
            response: completion.text.clone(),
        });
        Ok(completion)
    }
}

/// Where model responses come from.
pub enum ModelSource {
    Replay { cassettes: Vec<(PathBuf, Cassette)>, strict: bool },
    Live(LiveModels),
}

pub struct LiveModels {
    pub manager: Arc<dyn ChatBackend>,
    pub vision: Arc<dyn ChatBackend>,
    pub reviewer: Arc<dyn ChatBackend>,
    pub summarizer: Arc<dyn ChatBackend>,
}

pub fn live_backend(endpoint: &str, transport: Arc<dyn Transport>) -> Result<Arc<dyn ChatBackend>, CliError> {
    LiveBackend::from_env(endpoint, transport)
        .map(|b| Arc::new(b) as Arc<dyn ChatBackend>)
        .map_err(|_| CliError::data(format!("{API_KEY_ENV} is not set; it is required for live model calls")))
}

pub fn http_transport() -> Result<Arc<dyn Transport>, CliError> {
    Ok(Arc::new(
        ReqwestTransport::new().map_err(|e| CliError::backend(format!("cannot start HTTP client: {e}")))?,
    ))
}

impl LiveModels {
    pub fn from_config(cfg: &HarnessConfig) -> Result<Self, CliError> {
        let transport = http_transport()?;
        Ok(LiveModels {
            manager: live_backend(&cfg.manager.endpoint, transport.clone())?,
            vision: live_backend(&cfg.vision.endpoint, transport.clone())?,
            reviewer: live_backend(&cfg.reviewer.endpoint, transport.clone())?,
            summarizer: live_backend(&cfg.summarizer.endpoint, transport)?,
        })
    }
}

pub fn wolfram_tool(cfg: &HarnessConfig) -> Result<Arc<WolframTool>, CliError> {
    let app_id = std::env::var(WOLFRAM_APP_ID_ENV).ok().filter(|s| !s.is_empty());
    let tool = match &cfg.wolfram.recordings {
        Some(path) => {
            let recordings = load_recordings(path).map_err(CliError::data)?;
            WolframTool::new(
                &cfg.wolfram.endpoint,
                Some(app_id.unwrap_or_else(|| OFFLINE_APP_ID.into())),
                Arc::new(RecordedTransport::new(recordings)),
            )
        }
        None => {
            if app_id.is_none() {
                log::warn!("{WOLFRAM_APP_ID_ENV} is not set; wolfram_query calls will fail");
            }
            WolframTool::new(&cfg.wolfram.endpoint, app_id, http_transport()?)
        }
    };
    Ok(Arc::new(tool.with_timeout(Duration::from_millis(cfg.wolfram.timeout_ms))))
}

pub struct SolveOptions {
    pub problem_dir: PathBuf,
    pub runs: usize,
    pub disabled: Vec<String>,
    pub replay: Vec<PathBuf>,
    pub strict_replay: bool,
    pub inline_images: bool,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub dir: PathBuf,
    pub terminated_by: TerminatedBy,
    pub steps: usize,
    pub answered: usize,
    pub error: Option<String>,
}

/// Resolve the enabled tool set after `--disable-tool` flags.
pub fn effective_tools(cfg: &HarnessConfig, disabled: &[String]) -> Result<BTreeSet<String>, CliError> {
    let disabled = parse_tool_names(disabled).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg.enabled_tools().difference(&disabled).cloned().collect())
}

struct RunPlan<'a> {
    cfg: &'a HarnessConfig,
    problem: Arc<Problem>,
    problem_dir: PathBuf,
    enabled: BTreeSet<String>,
    policy: RunPolicy,
    wolfram: Arc<WolframTool>,
    config_digest: String,
}

fn models_by_role(cfg: &HarnessConfig) -> BTreeMap<String, String> {
    [
        ("manager", &cfg.manager.model),
        ("vision", &cfg.vision.model),
        ("reviewer", &cfg.reviewer.model),
        ("summarizer", &cfg.summarizer.model),
    ]
    .into_iter()
    .map(|(role, m)| (role.to_string(), m.model_id.clone()))
    .collect()
}

struct RoleBackends {
    manager: Arc<dyn ChatBackend>,
    vision: Arc<dyn ChatBackend>,
    reviewer: Arc<dyn ChatBackend>,
    summarizer: Arc<dyn ChatBackend>,
}

fn role_backends(source: &ModelSource, run_index: usize, log: &Arc<CallLog>) -> RoleBackends {
    let tap = |b: Arc<dyn ChatBackend>| Arc::new(Tap::new(b, log.clone())) as Arc<dyn ChatBackend>;
    match source {
        ModelSource::Replay { cassettes, strict } => {
            let (_, cassette) = &cassettes[run_index % cassettes.len()];
            let replay: Arc<dyn ChatBackend> = if *strict {
                Arc::new(ReplayBackend::strict(cassette.clone()))
            } else {
                Arc::new(ReplayBackend::lenient(cassette.clone()))
            };
            let shared = tap(replay);
            RoleBackends {
                manager: shared.clone(),
                vision: shared.clone(),
                reviewer: shared.clone(),
                summarizer: shared,
            }
        }
        ModelSource::Live(live) => RoleBackends {
            manager: tap(live.manager.clone()),
            vision: tap(live.vision.clone()),
            reviewer: tap(live.reviewer.clone()),
            summarizer: tap(live.summarizer.clone()),
        },
    }
}

fn execute_run(
    plan: &RunPlan<'_>,
    source: &ModelSource,
    run_index: usize,
    run_id: &str,
    dir: &Path,
) -> Result<RunOutcome, CliError> {
    let cfg = plan.cfg;
    let replay = match source {
        ModelSource::Replay { cassettes, .. } => Some(cassettes[run_index % cassettes.len()].0.clone()),
        ModelSource::Live(_) => None,
    };
    let policy = RunPolicy {
        seed_label: run_id.to_string(),
        ..plan.policy.clone()
    };
    let mut manifest = RunManifest {
        run_id: run_id.to_string(),
        problem_id: plan.problem.id.clone(),
        problem_dir: plan.problem_dir.clone(),
        config_digest: plan.config_digest.clone(),
        enabled_tools: plan.enabled.clone(),
        models: models_by_role(cfg),
        policy: policy.clone(),
        budget: cfg.budget,
        replay,
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
        status: RunStatus::Running,
        terminated_by: None,
        steps: 0,
        error: None,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;

    let log = Arc::new(CallLog::default());
    let roles = role_backends(source, run_index, &log);
    let deps = ToolDeps {
        problem: plan.problem.clone(),
        vision: ModelHandle::new(roles.vision, cfg.vision.model.clone()),
        reviewer: ModelHandle::new(roles.reviewer, cfg.reviewer.model.clone()),
        summarizer: ModelHandle::new(roles.summarizer, cfg.summarizer.model.clone()),
        summary_chars: cfg.tools.summary_chars,
        neutral_review_prompt: cfg.reviewer.neutral_prompt,
        wolfram: plan.wolfram.clone(),
    };
    let registry = registry_build(&plan.enabled, &deps).map_err(|e| CliError::data(e.to_string()))?;
    let manager = ModelHandle::new(roles.manager, cfg.manager.model.clone());
    let summarizer = deps.summarizer();
    let run = run_agent(&AgentContext {
        problem: &plan.problem,
        registry: &registry,
        manager: &manager,
        summarizer: Some(&summarizer),
        policy: &policy,
        budget: &cfg.budget,
    });

    write_file(&dir.join(TRANSCRIPT_FILE), &transcript::to_jsonl(&run.transcript))?;
    write_json(&dir.join(SOLUTION_FILE), &run.solution)?;
    log.cassette()
        .save(dir.join(CASSETTE_FILE))
        .map_err(|e| CliError::data(e.to_string()))?;
    let s: &Solution = &run.solution;
    manifest.status = RunStatus::Finished;
    manifest.terminated_by = Some(s.terminated_by);
    manifest.steps = s.trajectory.len();
    manifest.error = s.error.clone();
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(RunOutcome {
        run_id: run_id.to_string(),
        dir: dir.to_path_buf(),
        terminated_by: s.terminated_by,
        steps: s.trajectory.len(),
        answered: s.answers.len(),
        error: s.error.clone(),
    })
}

/// Execute `opts.runs` independent runs, in parallel up to the job limit.
pub fn solve(cfg: &HarnessConfig, opts: &SolveOptions) -> Result<Vec<RunOutcome>, CliError> {
    if opts.runs == 0 {
        return Err(CliError::usage("--runs must be at least 1"));
    }
    let enabled = effective_tools(cfg, &opts.disabled)?;
    let problem = load_problem(&opts.problem_dir).map_err(|e| CliError::data(e.to_string()))?;
    let source = if opts.replay.is_empty() {
        ModelSource::Live(LiveModels::from_config(cfg)?)
    } else {
        if opts.replay.len() != 1 && opts.replay.len() != opts.runs {
            return Err(CliError::usage(format!(
                "give one --replay cassette or one per run ({} runs, {} cassettes)",
                opts.runs,
                opts.replay.len()
            )));
        }
        let mut cassettes = Vec::new();
        for path in &opts.replay {
            let c = Cassette::load(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            cassettes.push((path.clone(), c));
        }
        ModelSource::Replay {
            cassettes,
            strict: opts.strict_replay,
        }
    };
    let plan = RunPlan {
        cfg,
        problem_dir: opts
            .problem_dir
            .canonicalize()
            .unwrap_or_else(|_| opts.problem_dir.clone()),
        policy: RunPolicy {
            inline_images: cfg.policy.inline_images || opts.inline_images,
            ..cfg.policy.clone()
        },
        enabled,
        wolfram: wolfram_tool(cfg)?,
        config_digest: cfg.digest(),
        problem: Arc::new(problem),
    };
    let slots = allocate_runs(&cfg.paths.runs_root.join(&plan.problem.id), opts.runs)?;
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let jobs = opts.jobs.unwrap_or(available).clamp(1, opts.runs);

    let next = Mutex::new(0usize);
    let results: Mutex<Vec<Option<Result<RunOutcome, CliError>>>> =
        Mutex::new((0..slots.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some((id, dir)) = slots.get(i) else { break };
                let outcome = execute_run(&plan, &source, i, id, dir);
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every run slot is filled"))
        .collect()
}
