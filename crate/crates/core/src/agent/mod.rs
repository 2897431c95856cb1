//! The manager agent: a Reason–Act loop over the action language.
//!
//! Each turn the model sees the system prompt, a summary of condensed steps
//! (if any), the retained steps as assistant/observation pairs, and a
//! standing instruction naming the subparts still unanswered.

mod prompt;
pub mod transcript;

pub use prompt::build_system_prompt;
pub use transcript::{strip_wallclock, Phase, TranscriptRecord};

use crate::dsl::{self, execute, parse_script, ExecBudget, StepOutcome, Value};
use crate::gateway::{ChatMessage, ContentPart, GatewayError, TokenUsage};
use crate::problem::Problem;
use crate::tools::{ModelHandle, Summarizer, ToolRegistry};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

pub const NUDGE: &str = "Your previous reply had no fenced `action` block, so nothing was executed. \
End every reply with exactly one block fenced as ```action.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunPolicy {
    pub max_steps: usize,
    /// Condense older steps once the rendered prompt exceeds this many characters.
    pub summarize_when_prompt_exceeds: usize,
    pub seed_label: String,
    /// Also show the manager every problem image directly.
    pub inline_images: bool,
}

impl Default for RunPolicy {
    fn default() -> Self {
        RunPolicy {
            max_steps: 24,
            summarize_when_prompt_exceeds: 200_000,
            seed_label: "run".into(),
            inline_images: false,
        }
    }
}

impl RunPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_steps == 0 {
            return Err("max_steps must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    pub reasoning: String,
    pub action: String,
    /// Absent only for the step whose `final_answer` ended the run.
    pub observation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_note: Option<String>,
    pub token_usage: TokenUsage,
    pub wallclock_ms: u64,
}

impl Step {
    /// The assistant message this step came from.
    fn assistant_text(&self) -> String {
        if self.action.is_empty() {
            self.reasoning.clone()
        } else if self.reasoning.is_empty() {
            format!("```action\n{}\n```", self.action)
        } else {
            format!("{}\n\n```action\n{}\n```", self.reasoning, self.action)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    steps: Vec<Step>,
    summary: Option<String>,
    /// Steps before this index are covered by `summary`.
    summarized_upto: usize,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: Step) {
        debug_assert_eq!(step.index, self.steps.len());
        self.steps.push(step);
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn summary(&self) -> Option<&str> {
        self.summary.as_deref()
    }

    pub fn summarized_upto(&self) -> usize {
        self.summarized_upto
    }

    /// Steps still shown to the model verbatim.
    pub fn retained(&self) -> &[Step] {
        &self.steps[self.summarized_upto..]
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Text handed to the summarizer: the current summary plus every
    /// retained step except the newest.
    fn condensable_text(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.summary {
            out.push_str(&format!("Earlier summary:\n{s}\n\n"));
        }
        let retained = self.retained();
        for step in &retained[..retained.len().saturating_sub(1)] {
            out.push_str(&format!("Step {}\nReasoning:\n{}\n", step.index, step.reasoning));
            if !step.action.is_empty() {
                out.push_str(&format!("Action:\n{}\n", step.action));
            }
            if let Some(obs) = &step.observation {
                out.push_str(&format!("Observation:\n{obs}\n"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    FinalAnswer,
    MaxSteps,
    FatalError,
}

impl fmt::Display for TerminatedBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminatedBy::FinalAnswer => "final_answer",
            TerminatedBy::MaxSteps => "max_steps",
            TerminatedBy::FatalError => "fatal_error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub problem_id: String,
    pub run_id: String,
    pub answers: BTreeMap<String, String>,
    pub terminated_by: TerminatedBy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub trajectory: Trajectory,
}

impl Solution {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Split model output at its action fence.
pub fn split_reasoning_and_action(model_output: &str) -> Result<(String, String), dsl::NoActionBlock> {
    let block = dsl::select_action_block(model_output).ok_or(dsl::NoActionBlock)?;
    let reasoning = model_output[..block.start].trim().to_string();
    let action = block.body.trim_end_matches('\n').to_string();
    Ok((reasoning, action))
}

/// Condense all but the newest step when the prompt has grown past the
/// policy threshold. Best-effort: on failure the trajectory is returned
/// unchanged together with a warning.
pub fn maybe_summarize(
    t: Trajectory,
    prompt_chars: usize,
    policy: &RunPolicy,
    summarizer: &Summarizer,
) -> (Trajectory, Option<String>) {
    if prompt_chars <= policy.summarize_when_prompt_exceeds || t.retained().len() < 2 {
        return (t, None);
    }
    match summarizer.summarize(&t.condensable_text()) {
        Ok(summary) => {
            let upto = t.steps.len() - 1;
            let next = Trajectory {
                summary: Some(summary),
                summarized_upto: upto,
                ..t
            };
            (next, None)
        }
        Err(e) => {
            let warning = format!("summarization skipped at step {}: {e}", t.steps.len());
            log::warn!("{warning}");
            (t, Some(warning))
        }
    }
}

pub struct AgentContext<'a> {
    pub problem: &'a Problem,
    pub registry: &'a ToolRegistry,
    pub manager: &'a ModelHandle,
    /// Condenses history when the prompt grows; works whether or not
    /// `summarize` is exposed to the model.
    pub summarizer: Option<&'a Summarizer>,
    pub policy: &'a RunPolicy,
    pub budget: &'a ExecBudget,
}

pub struct AgentRun {
    pub solution: Solution,
    pub transcript: Vec<TranscriptRecord>,
}

struct Recorder {
    run_id: String,
    started: Instant,
    records: Vec<TranscriptRecord>,
}

impl Recorder {
    fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn push(&mut self, step: usize, phase: Phase, payload: serde_json::Value, usage: Option<TokenUsage>) {
        let wallclock_ms = self.elapsed_ms();
        self.records.push(TranscriptRecord {
            run_id: self.run_id.clone(),
            step_index: step,
            phase,
            payload,
            token_usage: usage,
            wallclock_ms,
        });
    }
}

fn image_message(problem: &Problem) -> Result<ChatMessage, GatewayError> {
    let mut parts = vec![ContentPart::text("Problem images:")];
    for asset in &problem.assets {
        let bytes = asset
            .read_bytes()
            .map_err(|e| GatewayError::InvalidMessage(format!("cannot read asset `{}`: {e}", asset.id)))?;
        parts.push(ContentPart::text(format!("Image `{}`:", asset.id)));
        parts.push(ContentPart::image(&asset.id, bytes, asset.media_kind)?);
    }
    ChatMessage::user(parts)
}

fn standing_instruction(problem: &Problem, answers: &BTreeMap<String, String>, nudge: bool) -> String {
    let pending: Vec<&str> = problem
        .subpart_ids()
        .filter(|id| !answers.contains_key(*id))
        .collect();
    let mut s = format!(
        "Unanswered subparts: {}. Reply with your reasoning followed by one ```action block.",
        pending.join(", ")
    );
    if nudge {
        s.push('\n');
        s.push_str(NUDGE);
    }
    s
}

fn assemble(
    system: &str,
    images: Option<&ChatMessage>,
    t: &Trajectory,
    instruction: String,
) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(system)];
    if let Some(img) = images {
        messages.push(img.clone());
    }
    if let Some(summary) = t.summary() {
        messages.push(ChatMessage::user_text(format!(
            "Summary of progress so far (earlier steps were condensed):\n{summary}"
        )));
    }
    for step in t.retained() {
        messages.push(ChatMessage::assistant(step.assistant_text()));
        if let Some(obs) = &step.observation {
            if step.error_note.is_none() || !obs.is_empty() {
                messages.push(ChatMessage::user_text(format!("Observation:\n{obs}")));
            }
        }
    }
    messages.push(ChatMessage::user_text(instruction));
    messages
}

fn prompt_chars(messages: &[ChatMessage]) -> usize {
    messages.iter().map(|m| m.text().chars().count()).sum()
}

/// Outcome of applying one `final_answer` statement.
struct AnswerUpdate {
    notes: Vec<String>,
    accepted: usize,
}

fn apply_final(
    problem: &Problem,
    args: &BTreeMap<String, Value>,
    answers: &mut BTreeMap<String, String>,
) -> AnswerUpdate {
    let mut notes = Vec::new();
    for key in args.keys().filter(|k| k.as_str() != "answers") {
        notes.push(format!("final_answer: ignored unexpected argument `{key}`"));
    }
    let entries = match args.get("answers") {
        Some(Value::Map(entries)) => entries,
        Some(_) => {
            notes.push("final_answer: `answers` must be a map of subpart id to answer".into());
            return AnswerUpdate { notes, accepted: 0 };
        }
        None => {
            notes.push("final_answer: missing `answers={...}`".into());
            return AnswerUpdate { notes, accepted: 0 };
        }
    };
    if entries.is_empty() {
        notes.push("final_answer: received no answers".into());
    }
    let mut accepted = 0;
    for (id, value) in entries {
        if problem.subpart(id).is_some() {
            answers.insert(id.clone(), value.to_text());
            accepted += 1;
        } else {
            notes.push(format!("final_answer: unknown subpart id `{id}` ignored"));
        }
    }
    AnswerUpdate { notes, accepted }
}

fn join_obs(parts: &[String]) -> String {
    parts
        .iter()
        .filter(|p| !p.is_empty())
        .cloned()
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Run the manager loop until every subpart is answered, the step budget
/// runs out, or the model backend fails for good.
pub fn run_agent(ctx: &AgentContext<'_>) -> AgentRun {
    let problem = ctx.problem;
    let mut rec = Recorder {
        run_id: ctx.policy.seed_label.clone(),
        started: Instant::now(),
        records: Vec::new(),
    };
    let system = build_system_prompt(problem, ctx.registry);
    rec.push(0, Phase::System, system.clone().into(), None);

    let mut trajectory = Trajectory::new();
    let mut answers = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut error = None;
    let mut terminated_by = TerminatedBy::MaxSteps;
    let mut misses = 0usize;
    let mut last_missed = false;

    let images = if ctx.policy.inline_images && !problem.assets.is_empty() {
        match image_message(problem) {
            Ok(m) => Some(m),
            Err(e) => {
                error = Some(e.to_string());
                terminated_by = TerminatedBy::FatalError;
                None
            }
        }
    } else {
        None
    };

    let steps_allowed = if error.is_some() { 0 } else { ctx.policy.max_steps };
    for index in 0..steps_allowed {
        let step_start = Instant::now();
        let instruction = standing_instruction(problem, &answers, last_missed);
        let mut messages = assemble(&system, images.as_ref(), &trajectory, instruction.clone());
        if let Some(summarizer) = ctx.summarizer {
            let before = trajectory.summarized_upto();
            let (t, warning) =
                maybe_summarize(trajectory, prompt_chars(&messages), ctx.policy, summarizer);
            trajectory = t;
            warnings.extend(warning);
            if trajectory.summarized_upto() != before {
                messages = assemble(&system, images.as_ref(), &trajectory, instruction);
            }
        }

        let completion = match ctx.manager.backend.generate(&messages, &ctx.manager.config) {
            Ok(c) => c,
            Err(e) => {
                error = Some(e.to_string());
                terminated_by = TerminatedBy::FatalError;
                break;
            }
        };
        let output = completion.text;

        let (reasoning, action) = match split_reasoning_and_action(&output) {
            Ok(pair) => pair,
            Err(no_block) => {
                misses += 1;
                last_missed = true;
                let note = if misses >= 2 {
                    misses = 0;
                    format!("failed step: two consecutive replies without an action block ({no_block})")
                } else {
                    no_block.to_string()
                };
                rec.push(index, Phase::Reasoning, output.clone().into(), Some(completion.usage));
                rec.push(index, Phase::Observation, "".into(), None);
                trajectory.push(Step {
                    index,
                    reasoning: output,
                    action: String::new(),
                    observation: Some(String::new()),
                    error_note: Some(note),
                    token_usage: completion.usage,
                    wallclock_ms: step_start.elapsed().as_millis() as u64,
                });
                continue;
            }
        };
        misses = 0;
        last_missed = false;
        rec.push(index, Phase::Reasoning, reasoning.clone().into(), Some(completion.usage));
        rec.push(index, Phase::Action, action.clone().into(), None);

        let mut finished = false;
        let observation = match parse_script(&action) {
            Err(e) => Some(e.to_string()),
            Ok(script) => match execute(&script, ctx.registry, ctx.budget) {
                Err(e) => Some(e.to_string()),
                Ok(StepOutcome::Observation(obs)) => Some(obs),
                Ok(StepOutcome::Final { args, observation }) => {
                    let update = apply_final(problem, &args, &mut answers);
                    let all = problem.subpart_ids().all(|id| answers.contains_key(id));
                    finished = all && update.accepted > 0;
                    let mut parts = vec![observation];
                    parts.extend(update.notes);
                    if finished {
                        let text = join_obs(&parts);
                        (!text.is_empty()).then_some(text)
                    } else {
                        let pending: Vec<&str> = problem
                            .subpart_ids()
                            .filter(|id| !answers.contains_key(*id))
                            .collect();
                        parts.push(format!(
                            "Answers recorded for {} of {} subparts. Still unanswered: {}.",
                            answers.len(),
                            problem.subparts.len(),
                            pending.join(", ")
                        ));
                        Some(join_obs(&parts))
                    }
                }
            },
        };
        if let Some(obs) = &observation {
            rec.push(index, Phase::Observation, obs.clone().into(), None);
        }
        trajectory.push(Step {
            index,
            reasoning,
            action,
            observation,
            error_note: None,
            token_usage: completion.usage,
            wallclock_ms: step_start.elapsed().as_millis() as u64,
        });
        if finished {
            terminated_by = TerminatedBy::FinalAnswer;
            let payload = serde_json::to_value(&answers).expect("answers serialize");
            rec.push(index, Phase::Final, payload, None);
            break;
        }
    }

    AgentRun {
        solution: Solution {
            problem_id: problem.id.clone(),
            run_id: ctx.policy.seed_label.clone(),
            answers,
            terminated_by,
            error,
            warnings,
            trajectory,
        },
        transcript: rec.records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        let (r, a) =
            split_reasoning_and_action("I will measure the peak.\n```action\nx(a=1)\n```").unwrap();
        assert_eq!(r, "I will measure the peak.");
        assert_eq!(a, "x(a=1)");
        assert!(split_reasoning_and_action("no fence here").is_err());
    }

    #[test]
    fn assistant_text_roundtrips_split() {
        let step = Step {
            index: 0,
            reasoning: "think".into(),
            action: "f(a=1)".into(),
            observation: None,
            error_note: None,
            token_usage: TokenUsage::default(),
            wallclock_ms: 0,
        };
        let (r, a) = split_reasoning_and_action(&step.assistant_text()).unwrap();
        assert_eq!((r.as_str(), a.as_str()), ("think", "f(a=1)"));
    }
}
