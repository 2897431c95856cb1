use crate::config::HarnessConfig;
use crate::error::CliError;
use crate::runs::{
    self, read_json, scan_runs, write_json, RunManifest, RunOutcome, SolveOptions, CASSETTE_FILE, GRADE_FILE,
    SCORE_FILE, SOLUTION_FILE, TRANSCRIPT_FILE,
};
use physagent_core::agent::{transcript, Phase, Solution, TerminatedBy};
use physagent_core::dsl::{execute, parse_script, StepOutcome};
use physagent_core::gateway::{Cassette, ChatBackend, ReplayBackend};
use physagent_core::problem::{load_problem, load_rubric};
use physagent_core::scoring::{
    count_accurate, flag_outliers, judge_grade, load_distribution, load_expert_qa, load_grade, mae, medal_class,
    parse_decimal, parse_readings, rank, render_table, score_solution, ReportSection, ScoreReport,
};
use physagent_core::tools::{registry_build, ModelHandle, ToolDeps};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub struct SolveSummary {
    pub outcomes: Vec<RunOutcome>,
    pub text: String,
}

impl SolveSummary {
    pub fn any_fatal(&self) -> bool {
        self.outcomes.iter().any(|o| o.terminated_by == TerminatedBy::FatalError)
    }
}

pub fn solve(cfg: &HarnessConfig, opts: &SolveOptions) -> Result<SolveSummary, CliError> {
    let outcomes = runs::solve(cfg, opts)?;
    let mut text = String::new();
    for o in &outcomes {
        let _ = write!(
            text,
            "{}: {} after {} steps, {} answers -> {}",
            o.run_id,
            o.terminated_by,
            o.steps,
            o.answered,
            o.dir.display()
        );
        if let Some(e) = &o.error {
            let _ = write!(text, " ({e})");
        }
        text.push('\n');
    }
    Ok(SolveSummary { outcomes, text })
}

pub enum GradeSource {
    File(PathBuf),
    /// Grade with the configured judge model, or from a cassette.
    Judge { replay: Option<PathBuf> },
}

pub fn grade(cfg: &HarnessConfig, run_dir: &Path, rubric_path: &Path, source: &GradeSource) -> Result<String, CliError> {
    let solution: Solution = read_json(&run_dir.join(SOLUTION_FILE))?;
    let rubric = load_rubric(rubric_path).map_err(|e| CliError::data(e.to_string()))?;
    if rubric.problem_id != solution.problem_id {
        return Err(CliError::data(format!(
            "rubric {} is for problem {} but the run solved {}",
            rubric_path.display(),
            rubric.problem_id,
            solution.problem_id
        )));
    }
    let record = match source {
        GradeSource::File(path) => {
            let record = load_grade(path, &rubric).map_err(|e| CliError::data(e.to_string()))?;
            if record.run_id != solution.run_id {
                return Err(CliError::data(format!(
                    "grade file {} is for run {} but the run directory holds {}",
                    path.display(),
                    record.run_id,
                    solution.run_id
                )));
            }
            record
        }
        GradeSource::Judge { replay } => {
            let backend: Arc<dyn ChatBackend> = match replay {
                Some(path) => Arc::new(ReplayBackend::lenient(
                    Cassette::load(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?,
                )),
                None => runs::live_backend(&cfg.judge.endpoint, runs::http_transport()?)?,
            };
            let judge = ModelHandle::new(backend, cfg.judge.model.clone());
            let record = judge_grade(&solution, &rubric, &judge).map_err(|e| CliError::backend(e.to_string()))?;
            write_json(&run_dir.join(GRADE_FILE), &record)?;
            record
        }
    };
    let report = score_solution(&rubric, &record).map_err(|e| CliError::data(e.to_string()))?;
    write_json(&run_dir.join(SCORE_FILE), &report)?;

    let mut out = format!(
        "{} {}: {} / {} ({}{})\n",
        report.problem_id,
        report.run_id,
        report.total,
        rubric.total(),
        serde_json::to_value(report.grader).expect("grader serializes").as_str().unwrap_or("?"),
        if report.official { "" } else { ", not official" }
    );
    for p in &report.per_part {
        let _ = writeln!(out, "  {}: {} / {}", p.part, p.score, p.max);
    }
    Ok(out)
}

pub struct ReportOutput {
    pub sections: Vec<ReportSection>,
    pub table: String,
    pub export: PathBuf,
}

/// Mean ± std tables over every scored run, one section per problem.
pub fn report(runs_root: &Path, problem: Option<&str>, export: Option<&Path>) -> Result<ReportOutput, CliError> {
    let mut by_problem: BTreeMap<String, Vec<ScoreReport>> = BTreeMap::new();
    for dir in scan_runs(runs_root)? {
        let path = dir.join(SCORE_FILE);
        if !path.is_file() {
            continue;
        }
        let r: ScoreReport = read_json(&path)?;
        if problem.is_none_or(|p| p == r.problem_id) {
            by_problem.entry(r.problem_id.clone()).or_default().push(r);
        }
    }
    if by_problem.is_empty() {
        return Err(CliError::data(match problem {
            Some(p) => format!("no scored runs for problem {p} under {}", runs_root.display()),
            None => format!("no scored runs under {}", runs_root.display()),
        }));
    }
    let mut sections = Vec::new();
    for (id, mut reports) in by_problem {
        reports.sort_by(|a, b| a.run_id.cmp(&b.run_id));
        sections.push(ReportSection::from_reports(&id, &reports).map_err(|e| CliError::data(e.to_string()))?);
    }
    let export = export.map_or_else(|| runs_root.join("report.json"), Path::to_path_buf);
    write_json(&export, &sections)?;
    Ok(ReportOutput {
        table: render_table(&sections),
        sections,
        export,
    })
}

pub fn rank_cmd(score: &str, distribution: &Path) -> Result<String, CliError> {
    let score = parse_decimal(score).map_err(CliError::usage)?;
    let dist = load_distribution(distribution).map_err(|e| CliError::data(e.to_string()))?;
    let mut out = String::new();
    match rank(score, &dist) {
        Ok(r) => {
            let _ = writeln!(out, "rank: {r} of {}", dist.scores.len() + 1);
        }
        Err(_) => out.push_str("rank: unavailable (the distribution has no per-contestant scores)\n"),
    }
    match medal_class(score, &dist) {
        Ok(class) => {
            let _ = writeln!(out, "medal class: {class}");
        }
        Err(_) => out.push_str("medal class: unavailable (the distribution has no thresholds)\n"),
    }
    Ok(out)
}

pub fn digit_acc(fixture: &Path, n: usize) -> Result<String, CliError> {
    let records = load_expert_qa(fixture).map_err(|e| CliError::data(e.to_string()))?;
    let mut without = Vec::new();
    let mut with = Vec::new();
    for r in &records {
        let gt = r.gt().map_err(|e| CliError::data(e.to_string()))?;
        without.push((r.without_tool().map_err(|e| CliError::data(e.to_string()))?, gt.clone()));
        with.push((r.with_tool().map_err(|e| CliError::data(e.to_string()))?, gt));
    }
    let without = count_accurate(&without, n).map_err(|e| CliError::usage(e.to_string()))?;
    let with = count_accurate(&with, n).map_err(|e| CliError::usage(e.to_string()))?;
    let total = records.len();
    Ok(format!("N={n}: without-tool: {without}/{total}, with-tool: {with}/{total}\n"))
}

pub fn bench_image(readings: &Path, gt: &str, tol: &str) -> Result<String, CliError> {
    let text = std::fs::read_to_string(readings).map_err(|e| CliError::data(format!("{}: {e}", readings.display())))?;
    let values = parse_readings(&text).map_err(|e| CliError::data(e.to_string()))?;
    let gt = parse_decimal(gt).map_err(CliError::usage)?;
    let tol = parse_decimal(tol).map_err(CliError::usage)?;
    let err = mae(&values, gt).map_err(|e| CliError::data(format!("{}: {e}", readings.display())))?;
    let flagged = flag_outliers(&values, gt, tol).map_err(|e| CliError::usage(e.to_string()))?;
    let flagged = if flagged.is_empty() {
        "none".to_string()
    } else {
        flagged.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
    };
    Ok(format!(
        "readings: {}\nMAE: {}\nflagged (|reading - gt| > {tol}, 0-based): {flagged}\n",
        values.len(),
        err.normalize()
    ))
}

/// Re-run each recorded action script against the tools. Tool-internal
/// model calls are served from the run's cassette.
pub fn replay(cfg: &HarnessConfig, run_dir: &Path) -> Result<String, CliError> {
    let manifest = RunManifest::load(run_dir)?;
    let records = transcript::load(run_dir.join(TRANSCRIPT_FILE)).map_err(CliError::data)?;
    let cassette = Cassette::load(run_dir.join(CASSETTE_FILE)).map_err(|e| CliError::data(e.to_string()))?;
    let problem = load_problem(&manifest.problem_dir).map_err(|e| CliError::data(e.to_string()))?;
    let backend: Arc<dyn ChatBackend> = Arc::new(ReplayBackend::lenient(cassette));
    let deps = ToolDeps {
        problem: Arc::new(problem),
        vision: ModelHandle::new(backend.clone(), cfg.vision.model.clone()),
        reviewer: ModelHandle::new(backend.clone(), cfg.reviewer.model.clone()),
        summarizer: ModelHandle::new(backend, cfg.summarizer.model.clone()),
        summary_chars: cfg.tools.summary_chars,
        neutral_review_prompt: cfg.reviewer.neutral_prompt,
        wolfram: runs::wolfram_tool(cfg)?,
    };
    let registry = registry_build(&manifest.enabled_tools, &deps).map_err(|e| CliError::data(e.to_string()))?;

    let mut out = String::new();
    let (mut total, mut matching) = (0, 0);
    for rec in records.iter().filter(|r| r.phase == Phase::Action) {
        let Some(script_text) = rec.payload.as_str() else { continue };
        total += 1;
        let recorded = records
            .iter()
            .find(|r| r.step_index == rec.step_index && r.phase == Phase::Observation)
            .and_then(|r| r.payload.as_str());
        let (observation, is_final) = match parse_script(script_text) {
            Err(e) => (e.to_string(), false),
            Ok(script) => match execute(&script, &registry, &manifest.budget) {
                Err(e) => (e.to_string(), false),
                Ok(StepOutcome::Observation(o)) => (o, false),
                Ok(StepOutcome::Final { observation, .. }) => (observation, true),
            },
        };
        let same = match recorded {
            Some(r) => r == observation || (is_final && r.starts_with(&observation)),
            None => is_final && observation.is_empty(),
        };
        if same {
            matching += 1;
        }
        let _ = writeln!(
            out,
            "step {}: {}{}",
            rec.step_index,
            if same { "matches recording" } else { "differs from recording" },
            if is_final { " (final_answer)" } else { "" }
        );
        if !same {
            let _ = writeln!(out, "  recorded: {:?}\n  replayed: {:?}", recorded.unwrap_or(""), observation);
        }
    }
    let _ = writeln!(out, "{matching} of {total} action steps reproduce their observations");
    Ok(out)
}
