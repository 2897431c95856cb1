//! The action language the manager model writes each turn.
//!
//! A script is a flat sequence of keyword-argument tool calls, optionally
//! bound with `let`, ending at most once in `final_answer(...)`. There is no
//! arithmetic, control flow, or nesting, and the only side effects are calls
//! to registered tools.
//!
//! ```text
//! script    := statement+ ;
//! statement := "let" IDENT "=" call | call | "final_answer" "(" args? ")" ;
//! call      := IDENT "(" args? ")" ;
//! args      := IDENT "=" expr ("," IDENT "=" expr)* ;
//! expr      := STRING | NUMBER | "true" | "false" | "null" | IDENT
//!            | "[" (expr ("," expr)*)? "]"
//!            | "{" (STRING ":" expr ("," STRING ":" expr)*)? "}" ;
//! ```
//!
//! Models emit scripts inside a fenced block tagged `action`.

mod ast;
mod exec;
mod parser;
mod value;

pub use ast::{is_identifier, ActionScript, Call, Statement, ValueExpr, KEYWORDS};
pub use exec::{execute, truncate_observation, ExecBudget, ExecError, StepOutcome, TRUNCATION_MARKER};
pub use parser::{parse_script, ParseError};
pub use value::{evaluate, ToolArgs, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("NoActionBlock: the reply contains no fenced ```action block")]
pub struct NoActionBlock;

/// A fenced block found in model output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FencedBlock<'a> {
    pub tag: &'a str,
    pub body: &'a str,
    /// Byte offset of the opening fence.
    pub start: usize,
}

/// All triple-backtick fenced blocks in order. An unterminated trailing fence
/// runs to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<FencedBlock<'_>> {
    let mut blocks = Vec::new();
    let mut search = 0;
    while let Some(rel) = text[search..].find("```") {
        let start = search + rel;
        let after_fence = start + 3;
        let line_end = text[after_fence..]
            .find('\n')
            .map_or(text.len(), |i| after_fence + i);
        let tag = text[after_fence..line_end].trim();
        let body_start = (line_end + 1).min(text.len());
        let (body_end, next) = match text[body_start..].find("```") {
            Some(i) => (body_start + i, body_start + i + 3),
            None => (text.len(), text.len()),
        };
        blocks.push(FencedBlock {
            tag,
            body: &text[body_start..body_end],
            start,
        });
        search = next;
        if search >= text.len() {
            break;
        }
    }
    blocks
}

/// The block a turn's action is taken from: the first `action`-tagged block,
/// otherwise the first block of any tag.
pub fn select_action_block(model_output: &str) -> Option<FencedBlock<'_>> {
    let blocks = fenced_blocks(model_output);
    blocks
        .iter()
        .find(|b| b.tag == "action")
        .or_else(|| blocks.first())
        .cloned()
}

pub fn extract_action_block(model_output: &str) -> Result<String, NoActionBlock> {
    select_action_block(model_output)
        .map(|b| b.body.trim_end_matches('\n').to_string())
        .ok_or(NoActionBlock)
}
