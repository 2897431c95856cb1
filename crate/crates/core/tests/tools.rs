mod common;

use common::{all_tools, deps, fixture, handle, names, recorded_wolfram, toy_problem};
use physagent_core::dsl::{ToolArgs, Value};
use physagent_core::gateway::{ContentPart, Role, ScriptedBackend};
use physagent_core::problem::MediaKind;
use physagent_core::tools::{
    parse_tool_names, problem_content, registry_build, AnswerReviewer, ImageAnalyzer, RegistryError, Summarizer,
    ToolError, IMG_SYSTEM_PROMPT, NEUTRAL_REVIEW_SYSTEM_PROMPT, REVIEW_SYSTEM_PROMPT,
};
use std::sync::Arc;

fn args(pairs: &[(&str, &str)]) -> ToolArgs {
    pairs.iter().map(|(k, v)| (k.to_string(), Value::Str(v.to_string()))).collect()
}

#[test]
fn image_analyzer_prompt_is_verbatim() {
    assert_eq!(IMG_SYSTEM_PROMPT, "You are an expert in dealing with image in Physics Olympiads.");
    let backend = Arc::new(ScriptedBackend::new(["peak at 1420.4 MHz"]));
    let problem = toy_problem();
    let tool = ImageAnalyzer::new(problem.clone(), handle(backend.clone()));
    assert_eq!(tool.analyze("fig1", "Where is the peak?").unwrap(), "peak at 1420.4 MHz");

    let calls = backend.calls();
    assert_eq!(calls.len(), 1);
    let [system, user] = calls[0].as_slice() else {
        panic!("expected two messages");
    };
    assert_eq!(system.role, Role::System);
    assert_eq!(system.text(), IMG_SYSTEM_PROMPT);
    assert_eq!(user.role, Role::User);
    let bytes = std::fs::read(fixture("problems/toy/fig1.png")).unwrap();
    match user.parts.as_slice() {
        [ContentPart::Image { asset_id, payload, media_kind }, ContentPart::Text(q)] => {
            assert_eq!(asset_id, "fig1");
            assert_eq!(&payload[..], &bytes[..]);
            assert_eq!(*media_kind, MediaKind::Png);
            assert_eq!(q, "Where is the peak?");
        }
        other => panic!("unexpected parts {other:?}"),
    }
}

#[test]
fn image_analyzer_rejects_unknown_asset() {
    let backend = Arc::new(ScriptedBackend::new(["unused"]));
    let tool = ImageAnalyzer::new(toy_problem(), handle(backend.clone()));
    let err = tool.analyze("fig9", "What is shown?").unwrap_err();
    assert_eq!(err.to_string(), "UnknownAsset: `fig9`");
    assert!(matches!(tool.analyze("fig1", "  "), Err(ToolError::InvalidArgument { .. })));
    assert_eq!(backend.call_count(), 0);
}

#[test]
fn reviewer_prompt_and_layout() {
    assert!(REVIEW_SYSTEM_PROMPT.starts_with(
        "You are an uncompromising Physics peer-reviewer. Your job is to find *every* logical, mathematical error \
         in the worker's answer. Check dimensional consistency"
    ));
    assert!(REVIEW_SYSTEM_PROMPT.ends_with("or the readings might be very inaccurate.\n"));

    let problem = toy_problem();
    let backend = Arc::new(ScriptedBackend::new(["Looks fine."]));
    let reviewer = AnswerReviewer::new(handle(backend.clone()), problem_content(&problem).unwrap(), false);
    assert_eq!(reviewer.review("E = 8.0478 keV", "check units").unwrap(), "Looks fine.");

    let calls = backend.calls();
    let [system, user] = calls[0].as_slice() else {
        panic!("expected two messages");
    };
    assert_eq!(system.text(), REVIEW_SYSTEM_PROMPT);
    let texts: Vec<Option<&str>> = user.parts.iter().map(|p| p.as_text()).collect();
    assert_eq!(texts.len(), 4);
    let instruction = texts[0].unwrap();
    assert!(instruction.starts_with("Please review the following solution:\n\nWORKER'S SOLUTION:\nE = 8.0478 keV\n\n"));
    assert!(instruction.contains("WORKER'S NOTE: check units"));
    assert_eq!(texts[1], Some(problem.render_markdown().as_str()));
    assert_eq!(texts[2], Some("Image `fig1`:"));
    assert!(texts[3].is_none());
}

#[test]
fn neutral_reviewer_variant() {
    let problem = toy_problem();
    let backend = Arc::new(ScriptedBackend::new(["ok"]));
    let reviewer = AnswerReviewer::new(handle(backend.clone()), problem_content(&problem).unwrap(), true);
    reviewer.review("x = 1 m", "").unwrap();
    assert_eq!(backend.calls()[0][0].text(), NEUTRAL_REVIEW_SYSTEM_PROMPT);
    assert!(reviewer.review(" ", "").is_err());
}

#[test]
fn summarizer_behaviour() {
    let backend = Arc::new(ScriptedBackend::new(["abcdefghij"]));
    let s = Summarizer::new(handle(backend.clone()), 4);
    assert_eq!(s.summarize("   ").unwrap(), "");
    assert_eq!(backend.call_count(), 0);
    assert_eq!(s.summarize("step 1: found E").unwrap(), "abcd");
    let sent = backend.calls()[0][1].text();
    assert!(sent.contains("at most 4 characters"));
    assert!(sent.ends_with("PROGRESS:\nstep 1: found E"));
}

#[test]
fn wolfram_from_recordings() {
    let w = recorded_wolfram();
    let answer = w.query("copper K-alpha1 X-ray energy in keV").unwrap();
    assert!(answer.contains("8.0478"), "{answer}");
    assert!(matches!(w.query("color of the number seven"), Err(ToolError::NoAnswer)));
    assert!(w.query("never recorded").is_err());
}

#[test]
fn registry_ablation_settings() {
    let problem = toy_problem();
    let backend = Arc::new(ScriptedBackend::new(Vec::<String>::new()));
    let d = deps(problem, backend);
    let settings = [
        all_tools(),
        names(&["answer_reviewer", "summarize", "wolfram_query"]),
        names(&["image_analyzer", "summarize", "wolfram_query"]),
        names(&[]),
    ];
    for enabled in settings {
        let reg = registry_build(&enabled, &d).unwrap();
        let got: std::collections::BTreeSet<String> = reg.enabled_names().into_iter().collect();
        assert_eq!(got, enabled);
        for name in physagent_core::tools::TOOL_NAMES {
            assert_eq!(reg.lookup(name).is_some(), enabled.contains(name), "{name}");
        }
        assert_eq!(reg.specs().len(), enabled.len());
    }
    let err = registry_build(&names(&["fly"]), &d).unwrap_err();
    assert!(matches!(err, RegistryError::UnknownToolName(ref n) if n == "fly"));
    assert!(parse_tool_names(["image_analyzer", "wolfram_query"]).is_ok());
}

#[test]
fn tools_reject_mistyped_calls() {
    let backend = Arc::new(ScriptedBackend::new(Vec::<String>::new()));
    let reg = registry_build(&all_tools(), &deps(toy_problem(), backend.clone())).unwrap();
    let image = reg.lookup("image_analyzer").unwrap();
    assert!(matches!(image.call(&args(&[("image", "fig1")])), Err(ToolError::MissingArgument(_))));
    assert!(matches!(
        image.call(&args(&[("image", "fig1"), ("question", "q"), ("zoom", "2")])),
        Err(ToolError::UnexpectedArgument(_))
    ));
    assert_eq!(backend.call_count(), 0);
}
