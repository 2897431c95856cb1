use super::{GradeRecord, Grader};
use crate::agent::Solution;
use crate::gateway::{ChatMessage, GatewayError};
use crate::problem::{id_has_prefix, Rubric};
use crate::tools::ModelHandle;
use std::collections::{BTreeMap, BTreeSet};

pub const JUDGE_SYSTEM_PROMPT: &str = "You grade answers to physics olympiad problems against one \
official scoring point at a time. Reply YES if the answers satisfy the scoring point and NO otherwise.";

/// `Some(true)` for YES, `Some(false)` for NO, `None` when the reply is neither.
pub fn parse_verdict(reply: &str) -> Option<bool> {
    let word: String = reply
        .trim()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect();
    match word.to_ascii_uppercase().as_str() {
        "YES" => Some(true),
        "NO" => Some(false),
        _ => None,
    }
}

fn relevant_answers(solution: &Solution, part_id: &str) -> String {
    let mut picked: Vec<(&String, &String)> = solution
        .answers
        .iter()
        .filter(|(id, _)| id_has_prefix(id, part_id))
        .collect();
    if picked.is_empty() {
        picked = solution.answers.iter().collect();
    }
    if picked.is_empty() {
        return "(no answers were given)".into();
    }
    picked
        .iter()
        .map(|(id, a)| format!("{id}: {a}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Grade a solution point by point with a judge model. The record is tagged
/// as model-graded; replies other than YES/NO count as not addressed.
pub fn judge_grade(solution: &Solution, rubric: &Rubric, judge: &ModelHandle) -> Result<GradeRecord, GatewayError> {
    let mut addressed = BTreeSet::new();
    let mut notes = BTreeMap::new();
    for part in &rubric.parts {
        let answers = relevant_answers(solution, &part.id);
        for point in &part.points {
            let messages = [
                ChatMessage::system(JUDGE_SYSTEM_PROMPT),
                ChatMessage::user_text(format!(
                    "Scoring point {} ({} pt): {}\n\nAnswers:\n{answers}\n\nReply with a single word: YES or NO.",
                    point.id, point.value, point.description
                )),
            ];
            let reply = judge.backend.generate(&messages, &judge.config)?.text;
            match parse_verdict(&reply) {
                Some(true) => {
                    addressed.insert(point.id.clone());
                }
                Some(false) => {}
                None => {
                    let shown: String = reply.chars().take(80).collect();
                    log::warn!("malformed judge reply for {}: {shown:?}", point.id);
                    notes.insert(point.id.clone(), format!("malformed judge reply: {shown:?}"));
                }
            }
        }
    }
    Ok(GradeRecord {
        run_id: solution.run_id.clone(),
        problem_id: rubric.problem_id.clone(),
        grader: Grader::JudgeModel,
        addressed,
        notes,
    })
}
