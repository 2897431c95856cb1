#![allow(dead_code)]

use serde_json::Value;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use tempfile::TempDir;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Scratch directory with a config whose runs root and knowledge-engine
/// recordings point inside the fixtures.
pub struct Workspace {
    pub dir: TempDir,
    pub config: PathBuf,
}

impl Workspace {
    pub fn new() -> Self {
        Self::with_config("")
    }

    pub fn with_config(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("harness.toml");
        let text = format!(
            "[paths]\nruns_root = \"runs\"\n\n[wolfram]\nrecordings = {:?}\n\n{extra}",
            fixture("wolfram/recordings.jsonl").display().to_string()
        );
        std::fs::write(&config, text).unwrap();
        Workspace { dir, config }
    }

    pub fn runs_root(&self) -> PathBuf {
        self.dir.path().join("runs")
    }

    pub fn run_dir(&self, problem: &str, run: &str) -> PathBuf {
        self.runs_root().join(problem).join(run)
    }

    pub fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, &[])
    }

    pub fn run_env(&self, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_physagent"));
        cmd.arg("--config").arg(&self.config).args(args).current_dir(self.dir.path());
        cmd.env_remove("AGENT_MODEL_API_KEY").env_remove("WOLFRAM_APP_ID");
        for (k, v) in env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        Output {
            code: out.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        }
    }

    pub fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    /// Human grade file for `run_id` addressing `points`.
    pub fn grade_file(&self, name: &str, run_id: &str, problem_id: &str, points: &[String]) -> PathBuf {
        let list = points.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(", ");
        self.write(
            name,
            &format!("run_id = \"{run_id}\"\nproblem_id = \"{problem_id}\"\ngrader = \"human-file\"\naddressed = [{list}]\n"),
        )
    }
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn enabled_tools(run_dir: &Path) -> Vec<String> {
    read_json(&run_dir.join("manifest.json"))["enabled_tools"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}

/// Every point id in a rubric file, optionally restricted to parts whose id
/// is in `parts`.
pub fn rubric_points(rubric: &str, parts: Option<&[&str]>) -> Vec<String> {
    let r = physagent_core::problem::load_rubric(fixture(rubric)).unwrap();
    r.parts
        .iter()
        .filter(|p| parts.is_none_or(|keep| keep.contains(&p.id.as_str())))
        .flat_map(|p| p.points.iter().map(|pt| pt.id.clone()))
        .collect()
}

/// All regular files below `root`.
pub fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}

/// Files below `root` whose bytes contain `needle`.
pub fn files_containing(root: &Path, needle: &str) -> Vec<PathBuf> {
    files_under(root)
        .into_iter()
        .filter(|p| {
            let bytes = std::fs::read(p).unwrap();
            bytes.windows(needle.len()).any(|w| w == needle.as_bytes())
        })
        .collect()
}

/// Minimal chat-completions server. The manager asks the image tool once,
/// then answers every subpart of the problem it was given.
pub struct FakeChat {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    pub rejected: Arc<AtomicUsize>,
}

impl FakeChat {
    pub fn start(expected_key: &str, answers: &'static [(&'static str, &'static str)]) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let rejected = Arc::new(AtomicUsize::new(0));
        let auth = format!("Bearer {expected_key}");
        let (req, rej) = (requests.clone(), rejected.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (auth, req, rej) = (auth.clone(), req.clone(), rej.clone());
                std::thread::spawn(move || {
                    let _ = serve(stream, &auth, answers, &req, &rej);
                });
            }
        });
        FakeChat { url, requests, rejected }
    }
}

fn serve(
    stream: std::net::TcpStream,
    auth: &str,
    answers: &[(&str, &str)],
    requests: &AtomicUsize,
    rejected: &AtomicUsize,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    let mut authorized = false;
    let mut line = String::new();
    reader.read_line(&mut line)?;
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let header = line.trim_end();
        if header.is_empty() {
            break;
        }
        let (name, value) = header.split_once(':').unwrap_or((header, ""));
        match name.to_ascii_lowercase().as_str() {
            "content-length" => length = value.trim().parse().unwrap_or(0),
            "authorization" => authorized = value.trim() == auth,
            _ => {}
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    requests.fetch_add(1, Ordering::SeqCst);

    let (status, reply) = if authorized {
        let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        (200, completion(&respond(&request, answers)))
    } else {
        rejected.fetch_add(1, Ordering::SeqCst);
        (401, "{\"error\":\"unauthorized\"}".to_string())
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    )?;
    stream.flush()
}

fn respond(request: &Value, answers: &[(&str, &str)]) -> String {
    let messages = request["messages"].as_array().cloned().unwrap_or_default();
    let system = messages.first().and_then(|m| m["content"].as_str()).unwrap_or("");
    if system.starts_with("You are an expert in dealing with image") {
        return "The strongest line sits at 656.3 nm.".into();
    }
    if system.contains("peer-reviewer") {
        return "No errors found.".into();
    }
    if !system.contains("final_answer") {
        return "Progress so far: one image reading.".into();
    }
    let seen_observation = messages
        .iter()
        .any(|m| m["content"].as_str().is_some_and(|c| c.starts_with("Observation:")));
    if seen_observation {
        let map = answers
            .iter()
            .map(|(id, a)| format!("{id:?}: {a:?}"))
            .collect::<Vec<_>>()
            .join(", ");
        format!("The reading settles part C.\n```action\nfinal_answer(answers={{{map}}})\n```")
    } else {
        "I need the line position from the figure.\n```action\nlet r = image_analyzer(image=\"fig_c1\", question=\"Where is the strongest line?\")\n```".into()
    }
}

fn completion(text: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 5}
    })
    .to_string()
}
