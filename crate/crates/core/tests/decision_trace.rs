mod common;

use std::sync::Arc;

use common::fixture;
use logidroid_core::decision::{run_decision_loop, DecisionConfig, StepOutcome};
use logidroid_core::device::{DeviceSession, SimulatedApp, SimulatorBackend};
use logidroid_core::llm::{LlmSession, PromptRole, ScriptedProvider, ScriptedTranscript};
use logidroid_core::model::BusinessLogic;

const REQUIREMENT: &str = "Add an item and remove it";

fn simulator() -> DeviceSession {
    let app = SimulatedApp::load(&fixture("todo/app.json")).unwrap();
    DeviceSession::new(Box::new(SimulatorBackend::new(app)))
}

#[test]
fn trace_matches_hand_derived_lines() {
    let logic = BusinessLogic::load(&fixture("todo/trace_logic.json")).unwrap();
    let script = ScriptedTranscript::load(&fixture("todo/trace_transcript.json")).unwrap();
    let provider = Arc::new(ScriptedProvider::new(script));
    let mut llm = LlmSession::new("decision", provider.clone());
    let mut device = simulator();
    let tmp = tempfile::tempdir().unwrap();
    let trace_path = tmp.path().join("trace.jsonl");
    let config = DecisionConfig {
        trace_path: Some(trace_path.clone()),
        ..DecisionConfig::default()
    };

    let run = run_decision_loop(REQUIREMENT, &logic, &mut device, &mut llm, &config).unwrap();

    let actual = std::fs::read_to_string(&trace_path).unwrap();
    let expected = std::fs::read_to_string(fixture("todo/trace_expected.jsonl")).unwrap();
    let actual: Vec<&str> = actual.lines().collect();
    let expected: Vec<&str> = expected.lines().collect();
    assert_eq!(actual.len(), expected.len());
    for (i, (a, e)) in actual.iter().zip(&expected).enumerate() {
        assert_eq!(a, e, "trace line {}", i + 1);
    }

    use StepOutcome::*;
    assert_eq!(
        run.report.outcomes,
        vec![Completed, Completed, Unmatched, Completed, Skipped, Completed]
    );
    assert_eq!(run.report.provider_calls, 20);
    assert_eq!(provider.remaining(), 0);
    // The sentinel step never reaches instruction generation.
    assert!(run
        .trace
        .iter()
        .all(|r| r.step != Some(2) || r.instruction.is_none()));
    // Exactly attempt_limit judgments for the step that never completes.
    let judged_step4 = llm
        .records()
        .iter()
        .filter(|r| {
            r.role == PromptRole::CompletionJudgment
                && r.prompt.contains("sample todo\" in the state")
        })
        .count();
    assert_eq!(judged_step4, 3);
}

#[test]
fn trace_records_stream_while_running() {
    // A provider that runs dry mid-session still leaves every finished
    // iteration on disk.
    let logic = BusinessLogic::load(&fixture("todo/trace_logic.json")).unwrap();
    let mut script = ScriptedTranscript::load(&fixture("todo/trace_transcript.json")).unwrap();
    script.entries.truncate(7);
    let mut llm = LlmSession::new("decision", Arc::new(ScriptedProvider::new(script)));
    let mut device = simulator();
    let tmp = tempfile::tempdir().unwrap();
    let trace_path = tmp.path().join("trace.jsonl");
    let config = DecisionConfig {
        trace_path: Some(trace_path.clone()),
        ..DecisionConfig::default()
    };
    let err = run_decision_loop(REQUIREMENT, &logic, &mut device, &mut llm, &config).unwrap_err();
    let logidroid_core::decision::DecisionError::SessionAborted { partial, .. } = err else {
        panic!("expected an abort, got {err}");
    };
    let written = std::fs::read_to_string(&trace_path).unwrap();
    assert_eq!(written.lines().count(), 3);
    assert_eq!(partial.trace.len(), 3);
    assert_eq!(
        partial.report.outcomes[..3],
        [
            StepOutcome::Completed,
            StepOutcome::Completed,
            StepOutcome::Unmatched
        ]
    );
}
