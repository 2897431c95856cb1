//! Command-line harness: solve problems with the tool-using agent, grade
//! runs against rubrics, and report aggregate scores.

pub mod commands;
pub mod config;
pub mod error;
pub mod runs;

use clap::{Args, Parser, Subcommand};
use commands::GradeSource;
use config::HarnessConfig;
use error::{CliError, EXIT_BACKEND, EXIT_OK, EXIT_USAGE};
use runs::SolveOptions;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "physagent", version, about = "Solve, grade and report physics olympiad runs")]
pub struct Cli {
    /// Harness configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the agent on one problem, once per repetition.
    Solve(SolveArgs),
    /// Score a run against a rubric.
    Grade(GradeArgs),
    /// Aggregate scored runs into mean ± std tables.
    Report(ReportArgs),
    /// Place a total score within a contestant distribution.
    Rank(RankArgs),
    /// Count N-digit-accurate answers with and without the knowledge engine.
    DigitAcc(DigitAccArgs),
    /// Mean absolute error of repeated image readings.
    BenchImage(BenchImageArgs),
    /// Re-execute a run's action scripts and compare observations.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem directory containing problem.toml.
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Remove a tool from the configured set; repeatable.
    #[arg(long = "disable-tool", value_name = "NAME")]
    pub disable_tool: Vec<String>,
    /// Serve model calls from a cassette. Give once for all runs or once per run.
    #[arg(long, value_name = "CASSETTE")]
    pub replay: Vec<PathBuf>,
    /// Require every replayed request to match its recorded digest.
    #[arg(long, requires = "replay")]
    pub strict_replay: bool,
    /// Attach the problem images to every manager prompt.
    #[arg(long)]
    pub inline_images: bool,
    /// Concurrent runs; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Overrides `paths.runs_root`.
    #[arg(long)]
    pub runs_root: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradeArgs {
    pub run_dir: PathBuf,
    #[arg(long)]
    pub rubric: PathBuf,
    /// Human grade file listing the addressed scoring points.
    #[arg(long, conflicts_with = "judge")]
    pub grade_file: Option<PathBuf>,
    /// Grade with the judge model; the result is marked unofficial.
    #[arg(long)]
    pub judge: bool,
    /// Serve judge calls from a cassette.
    #[arg(long, requires = "judge", value_name = "CASSETTE")]
    pub judge_replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Overrides `paths.runs_root`.
    #[arg(long)]
    pub runs_root: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// JSON export path; defaults to report.json under the runs root.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Total score in points.
    pub score: String,
    #[arg(long)]
    pub dist: PathBuf,
}

#[derive(Debug, Args)]
pub struct DigitAccArgs {
    pub fixture: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct BenchImageArgs {
    /// One reading per line.
    pub readings: PathBuf,
    #[arg(long)]
    pub gt: String,
    #[arg(long, default_value = "0.01")]
    pub tol: String,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub run_dir: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<HarnessConfig, CliError> {
    match path {
        Some(p) => HarnessConfig::load(p).map_err(CliError::data),
        None => {
            let cwd = std::env::current_dir().map_err(|e| CliError::data(e.to_string()))?;
            HarnessConfig::from_toml("", &cwd).map_err(CliError::data)
        }
    }
}

/// Execute a parsed command. Returns the text for stdout and the exit code.
pub fn run(cli: Cli) -> Result<(String, i32), CliError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Solve(a) => {
            if let Some(root) = a.runs_root {
                cfg.paths.runs_root = root;
            }
            if let Some(n) = a.max_steps {
                cfg.policy.max_steps = n;
                cfg.validate().map_err(CliError::usage)?;
            }
            let opts = SolveOptions {
                problem_dir: a.problem,
                runs: a.runs,
                disabled: a.disable_tool,
                replay: a.replay,
                strict_replay: a.strict_replay,
                inline_images: a.inline_images,
                jobs: a.jobs,
            };
            let summary = commands::solve(&cfg, &opts)?;
            let code = if summary.any_fatal() { EXIT_BACKEND } else { EXIT_OK };
            Ok((summary.text, code))
        }
        Command::Grade(a) => {
            let source = match (a.grade_file, a.judge) {
                (Some(path), false) => GradeSource::File(path),
                (None, true) => GradeSource::Judge { replay: a.judge_replay },
                _ => return Err(CliError::usage("grade needs exactly one of --grade-file or --judge")),
            };
            Ok((commands::grade(&cfg, &a.run_dir, &a.rubric, &source)?, EXIT_OK))
        }
        Command::Report(a) => {
            let root = a.runs_root.unwrap_or_else(|| cfg.paths.runs_root.clone());
            let out = commands::report(&root, a.problem.as_deref(), a.export.as_deref())?;
            Ok((format!("{}\nexported to {}\n", out.table, out.export.display()), EXIT_OK))
        }
        Command::Rank(a) => Ok((commands::rank_cmd(&a.score, &a.dist)?, EXIT_OK)),
        Command::DigitAcc(a) => Ok((commands::digit_acc(&a.fixture, a.n)?, EXIT_OK)),
        Command::BenchImage(a) => Ok((commands::bench_image(&a.readings, &a.gt, &a.tol)?, EXIT_OK)),
        Command::Replay(a) => Ok((commands::replay(&cfg, &a.run_dir)?, EXIT_OK)),
    }
}

/// Parse arguments, run, print, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok((text, code)) => {
            print!("{text}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
