use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const REQUIREMENT: &str = "Add a todo item with a priority and delete it by swiping it away";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn logidroid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logidroid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build_db(dir: &Path) -> PathBuf {
    let db = dir.join("db");
    let out = logidroid(&[
        "build-db",
        "--cases",
        s(&fixtures().join("corpus")),
        "--out",
        s(&db),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    db
}

fn generate(db: &Path, run_dir: &Path, transcript: &Path, app_model: &Path, out: &Path) -> Output {
    logidroid(&[
        "--run-dir",
        s(run_dir),
        "generate",
        "--db",
        s(db),
        "--category",
        "To-Do",
        "--requirement",
        REQUIREMENT,
        "--app-model",
        s(app_model),
        "--llm",
        &format!("scripted:{}", s(transcript)),
        "--out",
        s(out),
        "--exclude-app",
        "simple-todo",
    ])
}

#[test]
fn perfect_run_exits_zero_and_evaluates() {
    let tmp = tempfile::tempdir().unwrap();
    let db = build_db(tmp.path());
    let case = tmp.path().join("case.json");
    let out = generate(
        &db,
        &tmp.path().join("run"),
        &fixtures().join("todo/golden_transcript.json"),
        &fixtures().join("todo/app.json"),
        &case,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report = tmp.path().join("report.json");
    let out = logidroid(&[
        "eval",
        "--generated",
        s(&case),
        "--ground-truth",
        s(&fixtures().join("todo/ground_truth.json")),
        "--out",
        s(&report),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report["perfect_rate"], 1.0);

    let out = logidroid(&["replay", s(&tmp.path().join("run"))]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn skipped_steps_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let db = build_db(tmp.path());
    // Fusion answers with the six-step logic whose third step never applies.
    let logic: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(fixtures().join("todo/trace_logic.json")).unwrap(),
    )
    .unwrap();
    let rendered: Vec<String> = logic["steps"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, st)| format!("Step {}: {}", i + 1, st["phrase"].as_str().unwrap()))
        .collect();
    let mut script: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(fixtures().join("todo/trace_transcript.json")).unwrap(),
    )
    .unwrap();
    script.insert(
        0,
        serde_json::json!({"match": {"role": "knowledge_fusion"}, "reply": rendered.join("\n")}),
    );
    let transcript = tmp.path().join("transcript.json");
    std::fs::write(&transcript, serde_json::to_string(&script).unwrap()).unwrap();

    let run_dir = tmp.path().join("run");
    let out = generate(
        &db,
        &run_dir,
        &transcript,
        &fixtures().join("todo/app.json"),
        &tmp.path().join("case.json"),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = std::fs::read_to_string(run_dir.join("trace.jsonl")).unwrap();
    let expected = std::fs::read_to_string(fixtures().join("todo/trace_expected.jsonl")).unwrap();
    assert_eq!(trace, expected);
}

#[test]
fn unreachable_backend_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let db = build_db(tmp.path());
    let run_dir = tmp.path().join("run");
    let out = generate(
        &db,
        &run_dir,
        &fixtures().join("todo/golden_transcript.json"),
        &tmp.path().join("no-such-app.json"),
        &tmp.path().join("case.json"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("perception"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("run.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["status"], "aborted");
}

#[test]
fn bad_arguments_are_rejected() {
    let out = logidroid(&[
        "generate",
        "--requirement",
        "x",
        "--category",
        "y",
        "--llm",
        "bogus",
        "--out",
        "z",
    ]);
    assert!(!out.status.success());
    let out = logidroid(&["query", "--category", "To-Do", "--requirement", "add"]);
    assert_eq!(out.status.code(), Some(1));
}
