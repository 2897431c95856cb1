use super::ast::{ActionScript, Call, Statement};
use super::value::{evaluate, ToolArgs, Value};
use crate::tools::{Tool, ToolRegistry};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::{mpsc, Arc};
use std::time::Duration;

pub const TRUNCATION_MARKER: &str = "\n[observation truncated]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecBudget {
    pub max_statements: usize,
    pub max_observation_chars: usize,
    pub max_tool_millis: u64,
}

impl Default for ExecBudget {
    fn default() -> Self {
        ExecBudget {
            max_statements: 16,
            max_observation_chars: 20_000,
            max_tool_millis: 600_000,
        }
    }
}

impl ExecBudget {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_statements == 0 || self.max_observation_chars == 0 || self.max_tool_millis == 0
        {
            return Err("execution budgets must be strictly positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Observation(String),
    /// `final_answer` ran. `observation` holds output of statements before it.
    Final {
        args: BTreeMap<String, Value>,
        observation: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("BudgetExceeded: statement {at} exceeds the limit of {limit} statements per step")]
    BudgetExceeded { at: usize, limit: usize },
}

/// Run a script's statements in order against the registry.
///
/// Tool errors are written into the observation; only budget violations abort.
pub fn execute(
    script: &ActionScript,
    registry: &ToolRegistry,
    budget: &ExecBudget,
) -> Result<StepOutcome, ExecError> {
    if script.statements.len() > budget.max_statements {
        return Err(ExecError::BudgetExceeded {
            at: budget.max_statements + 1,
            limit: budget.max_statements,
        });
    }
    let timeout = Duration::from_millis(budget.max_tool_millis);
    let mut bindings: BTreeMap<String, Value> = BTreeMap::new();
    let mut segments: Vec<String> = Vec::new();

    for (i, stmt) in script.statements.iter().enumerate() {
        match stmt {
            Statement::Let { name, call } => {
                let text = match run_call(call, registry, &bindings, timeout) {
                    Ok(out) => {
                        bindings.insert(name.clone(), Value::Str(out.clone()));
                        out
                    }
                    Err(err) => err,
                };
                segments.push(format!("[{name}]\n{text}"));
            }
            Statement::Expr(call) => {
                let text = run_call(call, registry, &bindings, timeout).unwrap_or_else(|e| e);
                segments.push(format!("[{}#{}]\n{text}", call.tool, i + 1));
            }
            Statement::FinalAnswer(args) => {
                let mut evaluated = BTreeMap::new();
                for (name, expr) in args {
                    match evaluate(expr, &bindings) {
                        Ok(v) => {
                            evaluated.insert(name.clone(), v);
                        }
                        Err(var) => {
                            segments.push(format!(
                                "[final_answer]\nUnboundVariable: {var} (its tool call failed)"
                            ));
                            return Ok(StepOutcome::Observation(render_observation(
                                &segments, budget,
                            )));
                        }
                    }
                }
                return Ok(StepOutcome::Final {
                    args: evaluated,
                    observation: render_observation(&segments, budget),
                });
            }
        }
    }
    Ok(StepOutcome::Observation(render_observation(&segments, budget)))
}

fn run_call(
    call: &Call,
    registry: &ToolRegistry,
    bindings: &BTreeMap<String, Value>,
    timeout: Duration,
) -> Result<String, String> {
    let Some(tool) = registry.lookup(&call.tool) else {
        return Err(format!("UnknownTool: {}", call.tool));
    };
    let mut args = ToolArgs::new();
    for (name, expr) in &call.args {
        let value = evaluate(expr, bindings)
            .map_err(|var| format!("UnboundVariable: {var} (its tool call failed)"))?;
        args.insert(name.clone(), value);
    }
    call_with_timeout(tool, args, timeout)
        .map_err(|cause| format!("ToolFailure: {}: {cause}", call.tool))
}

fn call_with_timeout(tool: Arc<dyn Tool>, args: ToolArgs, timeout: Duration) -> Result<String, String> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(tool.call(&args).map_err(|e| e.to_string()));
    });
    match rx.recv_timeout(timeout) {
        Ok(result) => result,
        Err(mpsc::RecvTimeoutError::Timeout) => {
            Err(format!("timed out after {} ms", timeout.as_millis()))
        }
        Err(mpsc::RecvTimeoutError::Disconnected) => Err("tool panicked".into()),
    }
}

fn render_observation(segments: &[String], budget: &ExecBudget) -> String {
    truncate_observation(segments.join("\n\n"), budget.max_observation_chars)
}

/// Cut `text` to `max_chars` characters, appending [`TRUNCATION_MARKER`] when
/// anything was dropped.
pub fn truncate_observation(text: String, max_chars: usize) -> String {
    match text.char_indices().nth(max_chars) {
        None => text,
        Some((byte, _)) => {
            let mut cut = text[..byte].to_string();
            cut.push_str(TRUNCATION_MARKER);
            cut
        }
    }
}
