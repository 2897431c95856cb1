mod support;

use physagent_core::agent::strip_wallclock;
use physagent_core::problem::load_rubric;
use std::collections::BTreeSet;
use std::path::Path;
use support::{enabled_tools, files_containing, files_under, fixture, read_json, rubric_points, Workspace};

fn cassette(name: &str) -> String {
    fixture(&format!("cassettes/{name}")).display().to_string()
}

fn problem(name: &str) -> String {
    fixture(&format!("problems/{name}")).display().to_string()
}

fn solve(ws: &Workspace, problem_name: &str, cassette_name: &str, extra: &[&str]) -> support::Output {
    let (p, c) = (problem(problem_name), cassette(cassette_name));
    let mut args = vec!["solve", p.as_str(), "--replay", c.as_str()];
    args.extend_from_slice(extra);
    ws.run(&args)
}

/// Points from `rubric` whose values sum to exactly `centipoints`.
fn points_worth(rubric: &str, centipoints: i64) -> Vec<String> {
    let r = load_rubric(fixture(rubric)).unwrap();
    let mut left = centipoints;
    let mut picked = Vec::new();
    for p in r.parts.iter().flat_map(|p| &p.points) {
        if p.value.0 <= left {
            left -= p.value.0;
            picked.push(p.id.clone());
        }
    }
    assert_eq!(left, 0, "cannot reach {centipoints} centipoints");
    picked
}

fn file_text(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn five_replayed_runs_get_their_own_directories() {
    let ws = Workspace::new();
    let out = solve(&ws, "toy", "toy_three_turns.jsonl", &["--runs", "5"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    for i in 1..=5 {
        let dir = ws.run_dir("toy", &format!("run-0{i}"));
        for f in ["manifest.json", "transcript.jsonl", "solution.json", "cassette.jsonl"] {
            assert!(dir.join(f).is_file(), "{}", dir.join(f).display());
        }
        let solution = read_json(&dir.join("solution.json"));
        assert_eq!(solution["terminated_by"], "final_answer");
        assert_eq!(solution["run_id"], format!("run-0{i}"));
        assert_eq!(read_json(&dir.join("manifest.json"))["status"], "finished");
    }
    assert!(!ws.run_dir("toy", "run-06").exists());
    assert_eq!(out.stdout.lines().count(), 5);
}

#[test]
fn ablation_settings_reach_the_manifest() {
    let settings: [(&[&str], &str, &[&str]); 4] = [
        (&[], "toy_three_turns.jsonl", &["answer_reviewer", "image_analyzer", "summarize", "wolfram_query"]),
        (&["image_analyzer"], "toy_no_image.jsonl", &["answer_reviewer", "summarize", "wolfram_query"]),
        (&["answer_reviewer"], "toy_no_reviewer.jsonl", &["image_analyzer", "summarize", "wolfram_query"]),
        (
            &["image_analyzer", "answer_reviewer", "summarize", "wolfram_query"],
            "toy_direct_answer.jsonl",
            &[],
        ),
    ];
    for (disabled, cassette_name, expected) in settings {
        let ws = Workspace::new();
        let mut extra = Vec::new();
        for d in disabled {
            extra.extend(["--disable-tool", d]);
        }
        let out = solve(&ws, "toy", cassette_name, &extra);
        assert_eq!(out.code, 0, "{cassette_name}: {}", out.stderr);
        let dir = ws.run_dir("toy", "run-01");
        assert_eq!(enabled_tools(&dir), expected);
        assert_eq!(read_json(&dir.join("solution.json"))["terminated_by"], "final_answer", "{cassette_name}");
    }
}

#[test]
fn disabling_two_tools_leaves_summarize_and_wolfram() {
    let ws = Workspace::new();
    let out = solve(
        &ws,
        "toy",
        "toy_no_final.jsonl",
        &["--disable-tool", "image_analyzer", "--disable-tool", "answer_reviewer", "--max-steps", "2"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(enabled_tools(&ws.run_dir("toy", "run-01")), ["summarize", "wolfram_query"]);
}

#[test]
fn exhausting_steps_is_not_an_error() {
    let ws = Workspace::new();
    let out = solve(&ws, "toy", "toy_no_final.jsonl", &["--max-steps", "2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let dir = ws.run_dir("toy", "run-01");
    let solution = read_json(&dir.join("solution.json"));
    assert_eq!(solution["terminated_by"], "max_steps");
    assert_eq!(read_json(&dir.join("manifest.json"))["steps"], 2);
}

#[test]
fn exhausted_cassette_is_a_backend_failure() {
    let ws = Workspace::new();
    let out = solve(&ws, "toy", "toy_no_final.jsonl", &["--max-steps", "5"]);
    assert_eq!(out.code, 3, "{}", out.stdout);
    let solution = read_json(&ws.run_dir("toy", "run-01").join("solution.json"));
    assert_eq!(solution["terminated_by"], "fatal_error");
}

#[test]
fn usage_and_config_errors_exit_2() {
    let ws = Workspace::new();
    let p = problem("toy");
    let out = ws.run(&["solve", &p]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("AGENT_MODEL_API_KEY"), "{}", out.stderr);

    let c = cassette("toy_three_turns.jsonl");
    let out = ws.run(&["solve", &p, "--runs", "3", "--replay", &c, "--replay", &c]);
    assert_eq!(out.code, 2);
    let out = ws.run(&["solve", &p, "--replay", &c, "--disable-tool", "fly"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("fly"));
    assert_eq!(ws.run(&["solve", &p, "--replay", &c, "--runs", "0"]).code, 2);
    assert_eq!(ws.run(&["frobnicate"]).code, 2);
    assert_eq!(ws.run(&["--help"]).code, 0);

    let bad = Workspace::with_config("[manager]\napi_key = \"secret\"\n");
    let out = bad.run(&["solve", &p, "--replay", &c]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("api_key"), "{}", out.stderr);
}

fn t1_run(ws: &Workspace) -> std::path::PathBuf {
    let out = solve(ws, "t1_abc", "t1_direct_answer.jsonl", &[]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    ws.run_dir("T1", "run-01")
}

#[test]
fn grading_with_human_files() {
    let ws = Workspace::new();
    let run = t1_run(&ws);
    let run_s = run.display().to_string();
    let rubric = fixture("rubrics/theory1.toml").display().to_string();

    let full = ws.grade_file("full.toml", "run-01", "T1", &rubric_points("rubrics/theory1.toml", None));
    let out = ws.run(&["grade", &run_s, "--rubric", &rubric, "--grade-file", full.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("10.00 / 10.00"), "{}", out.stdout);
    let score = read_json(&run.join("score.json"));
    assert_eq!(score["official"], true);

    let empty = ws.grade_file("empty.toml", "run-01", "T1", &[]);
    let out = ws.run(&["grade", &run_s, "--rubric", &rubric, "--grade-file", empty.to_str().unwrap()]);
    assert!(out.stdout.contains("0.00 / 10.00"), "{}", out.stdout);

    let unknown = ws.grade_file("unknown.toml", "run-01", "T1", &["T1.Q.p77".into()]);
    let out = ws.run(&["grade", &run_s, "--rubric", &rubric, "--grade-file", unknown.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("T1.Q.p77"), "{}", out.stderr);

    let other_run = ws.grade_file("other.toml", "run-07", "T1", &[]);
    let out = ws.run(&["grade", &run_s, "--rubric", &rubric, "--grade-file", other_run.to_str().unwrap()]);
    assert_eq!(out.code, 2);

    let toy_rubric = fixture("rubrics/toy.toml").display().to_string();
    let out = ws.run(&["grade", &run_s, "--rubric", &toy_rubric, "--grade-file", empty.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("toy"), "{}", out.stderr);
}

#[test]
fn judge_grades_are_unofficial() {
    let ws = Workspace::new();
    assert_eq!(solve(&ws, "toy", "toy_three_turns.jsonl", &[]).code, 0);
    let run = ws.run_dir("toy", "run-01").display().to_string();
    let rubric = fixture("rubrics/toy.toml").display().to_string();
    let judge = cassette("judge_toy.jsonl");
    let out = ws.run(&["grade", &run, "--rubric", &rubric, "--judge", "--judge-replay", &judge]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("0.80 / 1.00"), "{}", out.stdout);
    assert!(out.stdout.contains("not official"));
    let run = Path::new(&run);
    assert_eq!(read_json(&run.join("score.json"))["official"], false);
    assert_eq!(read_json(&run.join("grade.json"))["grader"], "judge-model");

    let out = ws.run(&["grade", run.to_str().unwrap(), "--rubric", &rubric]);
    assert_eq!(out.code, 2);
}

fn scored_t1_runs(ws: &Workspace, centipoints: &[i64]) {
    let c = cassette("t1_direct_answer.jsonl");
    let runs = centipoints.len().to_string();
    let p = problem("t1_abc");
    assert_eq!(ws.run(&["solve", &p, "--replay", &c, "--runs", &runs]).code, 0);
    let rubric = fixture("rubrics/theory1.toml").display().to_string();
    for (i, cp) in centipoints.iter().enumerate() {
        let id = format!("run-{:02}", i + 1);
        let g = ws.grade_file(&format!("{id}.toml"), &id, "T1", &points_worth("rubrics/theory1.toml", *cp));
        let run = ws.run_dir("T1", &id).display().to_string();
        let out = ws.run(&["grade", &run, "--rubric", &rubric, "--grade-file", g.to_str().unwrap()]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
}

#[test]
fn report_of_constant_scores() {
    let ws = Workspace::new();
    scored_t1_runs(&ws, &[900; 5]);
    let out = ws.run(&["report"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let total = out.stdout.lines().find(|l| l.starts_with("Total")).unwrap();
    assert!(total.contains("9.00 ± 0.00"), "{}", out.stdout);
    let export = read_json(&ws.runs_root().join("report.json"));
    assert_eq!(export[0]["runs"].as_array().unwrap().len(), 5);
}

#[test]
fn report_of_two_runs_uses_sample_std() {
    let ws = Workspace::new();
    scored_t1_runs(&ws, &[890, 910]);
    let out = ws.run(&["report", "--problem", "T1"]);
    assert!(out.stdout.contains("9.00 ± 0.14"), "{}", out.stdout);
    // 0.2 / sqrt(2) by hand.
    let std = read_json(&ws.runs_root().join("report.json"))[0]["total"]["stats"]["std"].as_f64().unwrap();
    assert!((std - 0.141_421_356).abs() < 1e-6, "{std}");
}

#[test]
fn report_groups_problems() {
    let ws = Workspace::new();
    scored_t1_runs(&ws, &[1000]);
    assert_eq!(solve(&ws, "toy", "toy_three_turns.jsonl", &[]).code, 0);
    let toy_run = ws.run_dir("toy", "run-01").display().to_string();
    let g = ws.grade_file("toy.toml", "run-01", "toy", &rubric_points("rubrics/toy.toml", Some(&["toy.A"])));
    let rubric = fixture("rubrics/toy.toml").display().to_string();
    assert_eq!(ws.run(&["grade", &toy_run, "--rubric", &rubric, "--grade-file", g.to_str().unwrap()]).code, 0);

    let export = ws.dir.path().join("all.json");
    let out = ws.run(&["report", "--export", export.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let sections = read_json(&export);
    let ids: Vec<&str> = sections.as_array().unwrap().iter().map(|s| s["problem_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["T1", "toy"]);
    assert!(out.stdout.contains("T1") && out.stdout.contains("toy"));

    let out = ws.run(&["report", "--problem", "toy"]);
    assert!(!out.stdout.contains("T1"), "{}", out.stdout);
    assert_eq!(ws.run(&["report", "--problem", "T9"]).code, 2);
}

#[test]
fn report_without_scores_fails() {
    let ws = Workspace::new();
    assert_eq!(ws.run(&["report"]).code, 2);
    assert_eq!(solve(&ws, "toy", "toy_three_turns.jsonl", &[]).code, 0);
    assert_eq!(ws.run(&["report"]).code, 2);
}

#[test]
fn rank_against_thresholds() {
    let ws = Workspace::new();
    let dist = fixture("distribution_ipho2025.toml").display().to_string();
    for (score, class) in [("23.5", "above gold median"), ("21.4", "gold range"), ("15.0", "below gold min")] {
        let out = ws.run(&["rank", score, "--dist", &dist]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert!(out.stdout.contains(&format!("medal class: {class}")), "{}", out.stdout);
        assert!(out.stdout.contains("rank: unavailable"));
    }
    let with_scores = ws.write("d.toml", "label = \"toy\"\nscores = [\"30\", \"20\", \"10\"]\n");
    let out = ws.run(&["rank", "25", "--dist", with_scores.to_str().unwrap()]);
    assert!(out.stdout.contains("rank: 2 of 4"), "{}", out.stdout);
    assert!(out.stdout.contains("medal class: unavailable"));

    let bad = ws.write("bad.toml", "label = 3\n");
    assert_eq!(ws.run(&["rank", "20", "--dist", bad.to_str().unwrap()]).code, 2);
    assert_eq!(ws.run(&["rank", "twenty", "--dist", &dist]).code, 2);
}

#[test]
fn digit_accuracy_counts() {
    let ws = Workspace::new();
    let qa = fixture("expert_qa.toml").display().to_string();
    let out = ws.run(&["digit-acc", &qa, "--n", "3"]);
    assert!(out.stdout.contains("without-tool: 3/10, with-tool: 9/10"), "{}", out.stdout);
    let out = ws.run(&["digit-acc", &qa, "--n", "4"]);
    assert!(out.stdout.contains("without-tool: 2/10, with-tool: 6/10"), "{}", out.stdout);
    assert_eq!(ws.run(&["digit-acc", &qa, "--n", "6"]).code, 2);
    let bad = ws.write("qa.toml", "[[records]]\nid = \"x\"\n");
    assert_eq!(ws.run(&["digit-acc", bad.to_str().unwrap()]).code, 2);
}

#[test]
fn image_benchmark() {
    let ws = Workspace::new();
    let exact = ws.write("exact.txt", "225.45\n225.45\n");
    let out = ws.run(&["bench-image", exact.to_str().unwrap(), "--gt", "225.45"]);
    assert!(out.stdout.contains("MAE: 0\n"), "{}", out.stdout);
    assert!(out.stdout.contains("0-based): none"));

    // Offsets in hundredths: +1, -2, 0, +3, -1; mean absolute 7/5 hundredths.
    let readings = [22546i64, 22543, 22545, 22548, 22544];
    let text: String = readings.iter().map(|r| format!("{}.{:02}\n", r / 100, r % 100)).collect();
    let five = ws.write("five.txt", &text);
    let out = ws.run(&["bench-image", five.to_str().unwrap(), "--gt", "225.45", "--tol", "0.01"]);
    let oracle: i64 = readings.iter().map(|r| (r - 22545).abs()).sum();
    assert_eq!(oracle, 7);
    assert!(out.stdout.contains("MAE: 0.014\n"), "{}", out.stdout);
    assert!(out.stdout.contains("0-based): 1, 3\n"), "{}", out.stdout);

    let off = ws.write("off.txt", "225.45\n225.47\n");
    let out = ws.run(&["bench-image", off.to_str().unwrap(), "--gt", "225.45", "--tol", "0.01"]);
    assert!(out.stdout.contains("0-based): 1\n"), "{}", out.stdout);

    let empty = ws.write("empty.txt", "\n");
    assert_eq!(ws.run(&["bench-image", empty.to_str().unwrap(), "--gt", "1"]).code, 2);
}

#[test]
fn concurrent_runs_stay_isolated() {
    let ws = Workspace::new();
    let out = solve(&ws, "toy", "toy_three_turns.jsonl", &["--runs", "4", "--jobs", "4"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let mut normalized = BTreeSet::new();
    for i in 1..=4 {
        let id = format!("run-0{i}");
        let dir = ws.run_dir("toy", &id);
        let names: Vec<String> = files_under(&dir)
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["cassette.jsonl", "manifest.json", "solution.json", "transcript.jsonl"]);
        for line in file_text(&dir.join("transcript.jsonl")).lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["run_id"], id.as_str());
        }
        let mut manifest = read_json(&dir.join("manifest.json"));
        assert_eq!(manifest["run_id"], id.as_str());
        assert_eq!(manifest["policy"]["seed_label"], id.as_str());
        manifest["run_id"] = "".into();
        manifest["policy"]["seed_label"] = "".into();
        normalized.insert(manifest.to_string());
    }
    assert_eq!(normalized.len(), 1, "manifests differ beyond their run ids");
}

#[test]
fn identical_inputs_reproduce_transcripts() {
    let (a, b) = (Workspace::new(), Workspace::new());
    assert_eq!(solve(&a, "toy", "toy_three_turns.jsonl", &[]).code, 0);
    assert_eq!(solve(&b, "toy", "toy_three_turns.jsonl", &[]).code, 0);
    let ta = file_text(&a.run_dir("toy", "run-01").join("transcript.jsonl"));
    let tb = file_text(&b.run_dir("toy", "run-01").join("transcript.jsonl"));
    assert_eq!(strip_wallclock(&ta), strip_wallclock(&tb));
    assert!(ta.contains("wallclock_ms"));
}

#[test]
fn recorded_cassette_replays_strictly() {
    let ws = Workspace::new();
    assert_eq!(solve(&ws, "toy", "toy_three_turns.jsonl", &[]).code, 0);
    let first = ws.run_dir("toy", "run-01");
    let recorded = first.join("cassette.jsonl").display().to_string();
    let p = problem("toy");
    let out = ws.run(&["solve", &p, "--replay", &recorded, "--strict-replay"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let second = ws.run_dir("toy", "run-02");
    let strip = |dir: &Path| strip_wallclock(&file_text(&dir.join("transcript.jsonl")).replace("run-02", "run-01"));
    assert_eq!(strip(&first), strip(&second));

    // A different tool set changes the system prompt, so the digests no longer match.
    let out = ws.run(&["solve", &p, "--replay", &recorded, "--strict-replay", "--disable-tool", "summarize"]);
    assert_eq!(out.code, 3);
    assert!(out.stdout.contains("cassette mismatch"), "{}", out.stdout);
}

#[test]
fn replay_command_reproduces_observations() {
    let ws = Workspace::new();
    assert_eq!(solve(&ws, "toy", "toy_three_turns.jsonl", &[]).code, 0);
    let run = ws.run_dir("toy", "run-01").display().to_string();
    let out = ws.run(&["replay", &run]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("3 of 3 action steps reproduce"), "{}", out.stdout);
    assert!(!out.stdout.contains("differs"));
}

#[test]
fn credentials_never_reach_artifacts() {
    let ws = Workspace::new();
    let (p, c) = (problem("toy"), cassette("toy_three_turns.jsonl"));
    let key = "sk-sentinel-7f1c2d";
    let app = "WA-SENTINEL-93be";
    let env = [("AGENT_MODEL_API_KEY", key), ("WOLFRAM_APP_ID", app)];
    let out = ws.run_env(&["solve", &p, "--replay", &c, "--runs", "2"], &env);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let run = ws.run_dir("toy", "run-01").display().to_string();
    let rubric = fixture("rubrics/toy.toml").display().to_string();
    let judge = cassette("judge_toy.jsonl");
    let out = ws.run_env(&["grade", &run, "--rubric", &rubric, "--judge", "--judge-replay", &judge], &env);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(ws.run_env(&["report"], &env).code, 0);
    assert!(files_under(ws.dir.path()).len() > 8);
    for secret in [key, app] {
        assert!(files_containing(ws.dir.path(), secret).is_empty(), "{secret} persisted");
        assert!(!out.stdout.contains(secret));
    }
}
