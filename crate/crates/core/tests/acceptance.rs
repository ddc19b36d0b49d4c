//! One line per acceptance criterion: `criterion N <name>: PASS|FAIL`.
//! Each check is self-contained; a failing check reports its reason and the
//! target fails after every line has been printed.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use common::{fixture, fixture_store, CATEGORY, REQUIREMENT};
use logidroid_core::decision::{
    generate_instruction, run_decision_loop, BudgetedSession, DecisionConfig, DecisionError,
    StepOutcome,
};
use logidroid_core::device::{
    describe_state, replay_case, synthesize_case, BackendSpec, DeviceBackend, DeviceError,
    DeviceSession, Gesture, HierarchyDump, SessionHistory, SimulatedApp, SimulatorBackend,
};
use logidroid_core::eval::{essential_coverage, evaluate_corpus, perfect_match, CasePair};
use logidroid_core::fusion::{
    fuse, relevance_vocabulary, FusionError, LogicValidator, ViolationCode,
};
use logidroid_core::knowledge::{HashingEmbedder, KnowledgeEntry, KnowledgeStore};
use logidroid_core::llm::{
    ChatRequest, LlmError, LlmProvider, LlmSession, PromptRole, ProviderSpec, ScriptMatch,
    ScriptedProvider, ScriptedTranscript,
};
use logidroid_core::model::{
    steps_equal, ActionKind, Bounds, BusinessLogic, Instruction, LogicStep, StepKind, TestCase,
    TestStep, WidgetAttrs, WidgetDescriptor,
};
use logidroid_core::pipeline::{run_pipeline, RunConfig, RunStatus, HISTORY_FILE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn simulator() -> Box<SimulatorBackend> {
    Box::new(SimulatorBackend::new(
        SimulatedApp::load(&fixture("todo/app.json")).unwrap(),
    ))
}

/// Golden pipeline run; shared by the end-to-end and replay checks.
fn golden_run(dir: &std::path::Path) -> Result<(TestCase, SessionHistory), String> {
    fixture_store(&dir.join("db"));
    let mut config = RunConfig::new(
        REQUIREMENT,
        CATEGORY,
        ProviderSpec::Scripted(fixture("todo/golden_transcript.json")),
        BackendSpec::Simulator(fixture("todo/app.json")),
        dir.join("run"),
    );
    config.store_dir = Some(dir.join("db"));
    config.exclude_app = Some("simple-todo".into());
    let outcome = run_pipeline(&config).map_err(|e| e.to_string())?;
    ensure!(
        outcome.status == RunStatus::Perfect,
        "status {:?}",
        outcome.status
    );
    let history =
        std::fs::read_to_string(dir.join("run").join(HISTORY_FILE)).map_err(|e| e.to_string())?;
    let history = serde_json::from_str(&history).map_err(|e| e.to_string())?;
    Ok((outcome.case, history))
}

/// The six-step trace scenario; shared by the trace and replay checks.
fn trace_run(
    trace_path: Option<std::path::PathBuf>,
) -> Result<logidroid_core::decision::DecisionRun, String> {
    let logic =
        BusinessLogic::load(&fixture("todo/trace_logic.json")).map_err(|e| e.to_string())?;
    let script = ScriptedTranscript::load(&fixture("todo/trace_transcript.json"))
        .map_err(|e| e.to_string())?;
    let mut llm = LlmSession::new("decision", Arc::new(ScriptedProvider::new(script)));
    let mut device = DeviceSession::new(simulator());
    let config = DecisionConfig {
        trace_path,
        ..DecisionConfig::default()
    };
    run_decision_loop(
        "Add an item and remove it",
        &logic,
        &mut device,
        &mut llm,
        &config,
    )
    .map_err(|e| e.to_string())
}

fn end_to_end_golden_run() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let (case, _) = golden_run(tmp.path())?;
    let elapsed = started.elapsed();
    let truth = TestCase::load(&fixture("todo/ground_truth.json")).map_err(|e| e.to_string())?;
    ensure!(case.event_count() == 4, "{} events", case.event_count());
    ensure!(
        case.assertion_count() == 2,
        "{} assertions",
        case.assertion_count()
    );
    ensure!(
        perfect_match(&case, &truth).matched,
        "case differs:\n{}",
        case.render_steps()
    );
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(())
}

const WORDS: [&str; 24] = [
    "add", "delete", "task", "note", "search", "bookmark", "settings", "theme", "login", "account",
    "share", "photo", "play", "song", "alarm", "timer", "weather", "recipe", "cart", "message",
    "filter", "title", "list", "item",
];

fn words(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn retrieval_oracle_equivalence() -> Check {
    let cats = ["To-Do", "Browser", "Music"];
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut store = KnowledgeStore::in_memory(Arc::new(HashingEmbedder::default()))
        .map_err(|e| e.to_string())?;
    for c in cats {
        store.register_category(c).unwrap();
    }
    for i in 0..300 {
        let summary = words(&mut rng, 4, 10);
        let app_id = format!("app{}", rng.gen_range(0..25));
        let category = cats[i % 3].to_string();
        let embedding = store.embed(&summary).unwrap();
        let case = TestCase::new(
            &app_id,
            &category,
            vec![TestStep::click(WidgetAttrs::text("x"))],
        );
        store
            .insert(KnowledgeEntry {
                category,
                summary,
                embedding,
                app_id,
                case,
            })
            .map_err(|e| e.to_string())?;
    }
    for trial in 0..100 {
        let req = words(&mut rng, 2, 8);
        let cat = cats[rng.gen_range(0..3)];
        let exclude = format!("app{}", rng.gen_range(0..25));
        let q = store.embed(&req).unwrap();
        let mut brute: Vec<(usize, f64)> = store
            .entries()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.category == cat && e.app_id != exclude)
            .map(|(i, e)| {
                let dot: f64 = e.embedding.iter().zip(&q).map(|(a, b)| a * b).sum();
                let na: f64 = e.embedding.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nb: f64 = q.iter().map(|b| b * b).sum::<f64>().sqrt();
                (i, dot / (na * nb))
            })
            .collect();
        brute.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for k in 1..=3 {
            let started = Instant::now();
            let got = store
                .retrieve(&req, cat, Some(&exclude), k)
                .map_err(|e| e.to_string())?;
            ensure!(started.elapsed() < Duration::from_secs(1), "query too slow");
            ensure!(
                got.len() == k.min(brute.len()),
                "trial {trial}: {} results",
                got.len()
            );
            for (g, (i, _)) in got.iter().zip(&brute) {
                ensure!(
                    g.entry == store.entries()[*i],
                    "trial {trial}, top {k}: ranking differs"
                );
            }
            ensure!(
                got.iter().all(|r| r.entry.app_id != exclude),
                "excluded app returned"
            );
        }
    }
    Ok(())
}

fn fusion_validator_suite() -> Check {
    let req = "Add a todo item with a title";
    let related = vec![TestCase::new(
        "other",
        "To-Do",
        vec![TestStep::click(WidgetAttrs::content_desc("Save"))],
    )];
    let validator =
        LogicValidator::default().with_relevance(relevance_vocabulary(req, "To-Do", &related));
    let add = "Step 1: (Event) Click a widget \"add\"";
    let title = "Step 2: (Event) Edit a widget \"title\" with \"milk\"";
    let shown = "Step 3: (Assertion) Identify a widget \"todo item\" in the state";
    let j = |ls: &[&str]| ls.join("\n");
    let twenty = (1..=20)
        .map(|i| format!("Step {i}: (Event) Click a widget \"add\""))
        .collect::<Vec<_>>()
        .join("\n");
    let cases: Vec<(String, ViolationCode)> = vec![
        (
            j(&[
                add,
                "Step 2: driver.findElement(By.id(\"t\")).click();",
                shown,
            ]),
            ViolationCode::ContainsCode,
        ),
        (
            j(&["```", add, title, shown, "```"]),
            ViolationCode::ContainsCode,
        ),
        (
            j(&[
                add,
                "Step 2: (Event) Click a widget //android.widget.Button[@text='Save']",
                shown,
            ]),
            ViolationCode::ContainsCode,
        ),
        (add.to_string(), ViolationCode::TooShort),
        (twenty, ViolationCode::TooLong),
        (
            j(&[add, "Step 2: Click the save button", shown]),
            ViolationCode::Format,
        ),
        (
            j(&[
                add,
                title,
                "Step 3: (Assertion) Identify a widget \"todo item\"",
            ]),
            ViolationCode::Format,
        ),
        (
            j(&[add, "Step 2: (Event) Hover a widget \"title\"", shown]),
            ViolationCode::UnknownAction,
        ),
        (
            j(&[add, "Step 2: (Event) Long press a widget \"item\"", shown]),
            ViolationCode::UnknownAction,
        ),
        (
            j(&[
                add,
                "Step 2: (Event) Click a widget \"weather forecast\"",
                shown,
            ]),
            ViolationCode::IrrelevantStep,
        ),
    ];
    for (i, (raw, code)) in cases.iter().enumerate() {
        let v = validator
            .check(raw)
            .err()
            .ok_or(format!("output {i} accepted"))?;
        ensure!(
            v.iter().all(|x| x.code == *code),
            "output {i}: got {v:?}, want {code:?}"
        );
    }

    let script = |replies: Vec<String>| {
        let mut t = ScriptedTranscript::default();
        for r in replies {
            t.push(ScriptMatch::role(PromptRole::KnowledgeFusion), r);
        }
        LlmSession::new("fusion", Arc::new(ScriptedProvider::new(t)))
    };
    let mut llm = script(vec![cases[9].0.clone(), j(&[add, title, shown])]);
    fuse(req, &related, "To-Do", &mut llm).map_err(|e| e.to_string())?;
    ensure!(
        llm.calls() == 2,
        "invalid-then-valid took {} calls",
        llm.calls()
    );

    let mut llm = script(cases.iter().map(|c| c.0.clone()).collect());
    let r = fuse(req, &related, "To-Do", &mut llm);
    ensure!(
        matches!(r, Err(FusionError::Rejected { .. })),
        "never-valid output accepted"
    );
    ensure!(
        llm.calls() == 3,
        "never-valid output took {} calls",
        llm.calls()
    );
    Ok(())
}

fn trace_conformance() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("trace.jsonl");
    let run = trace_run(Some(path.clone()))?;
    let got = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let want =
        std::fs::read_to_string(fixture("todo/trace_expected.jsonl")).map_err(|e| e.to_string())?;
    let (got, want): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    ensure!(
        got.len() == want.len(),
        "{} trace lines, expected {}",
        got.len(),
        want.len()
    );
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        ensure!(g == w, "line {} differs:\n  got  {g}\n  want {w}", i + 1);
    }
    ensure!(
        run.report.outcomes[2] == StepOutcome::Unmatched,
        "step 3 not slid past"
    );
    ensure!(
        run.report.outcomes[4] == StepOutcome::Skipped,
        "step 5 not skipped"
    );
    Ok(())
}

fn backtracking_assertion() -> Check {
    let mut s = DeviceSession::new(simulator());
    s.perceive().map_err(|e| e.to_string())?;
    for (id, action, value) in [
        (1, ActionKind::Click, None),
        (2, ActionKind::Edit, Some("Sample todo")),
        (3, ActionKind::Click, None),
        (1, ActionKind::SwipeRight, None),
    ] {
        let source_state_id = s.latest().unwrap().state_id;
        let i = Instruction::Event {
            widget_id: id,
            action,
            value: value.map(String::from),
            source_state_id,
        };
        s.execute(&i, None).map_err(|e| e.to_string())?;
        s.perceive().map_err(|e| e.to_string())?;
    }
    let latest = s.latest().unwrap().clone();
    let step = |p: &str| LogicStep {
        kind: StepKind::Assertion,
        phrase: format!("(Assertion) Identify a widget \"{p}\" not in the state"),
    };
    let mut empty = LlmSession::new(
        "d",
        Arc::new(ScriptedProvider::new(ScriptedTranscript::default())),
    );
    let instruction = generate_instruction(
        "x",
        &step("sample todo"),
        &latest,
        &[],
        s.history(),
        &mut BudgetedSession::unlimited(&mut empty),
    )
    .map_err(|e| e.to_string())?;
    let Instruction::Assertion {
        widget_id,
        source_state_id,
        ..
    } = instruction
    else {
        return Err("not an assertion".into());
    };
    ensure!(
        source_state_id < latest.state_id,
        "resolved to the latest state"
    );
    let d = s
        .history()
        .resolve(source_state_id, widget_id)
        .map_err(|e| e.to_string())?;
    ensure!(
        d.attrs.resource_id == "todo_title",
        "resolved to {:?}",
        d.attrs
    );
    ensure!(
        s.check_assertion(&instruction, None)
            .map_err(|e| e.to_string())?,
        "assertion failed"
    );
    let unseen = generate_instruction(
        "x",
        &step("grocery basket"),
        &latest,
        &[],
        s.history(),
        &mut BudgetedSession::unlimited(&mut empty),
    );
    ensure!(
        matches!(
            unseen,
            Err(DecisionError::Device(
                DeviceError::AssertionTargetUnresolved(_)
            ))
        ),
        "unseen target: {unseen:?}"
    );
    Ok(())
}

/// Picks the first candidate, always emits a plausible instruction, and
/// answers judgments at random (or always "No").
struct Hostile {
    rng: Mutex<ChaCha8Rng>,
    always_no: bool,
}

impl LlmProvider for Hostile {
    fn id(&self) -> &str {
        "hostile"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let mut rng = self.rng.lock().unwrap();
        let first_click = req
            .rendered_prompt
            .lines()
            .filter_map(|l| l.strip_prefix("widget "))
            .find(|l| l.contains("ops=[click"))
            .and_then(|l| l.split(':').next()?.parse::<usize>().ok())
            .unwrap_or(0);
        Ok(match req.role {
            PromptRole::StepSelection => ["0", "1", "(-1)", "9", "?"]
                .choose(&mut *rng)
                .unwrap()
                .to_string(),
            PromptRole::InstructionGeneration => {
                let id = if rng.gen_bool(0.8) {
                    first_click
                } else {
                    rng.gen_range(0..10)
                };
                format!("{{\"widget_id\": {id}, \"action\": \"click\"}}")
            }
            _ if self.always_no => "No".into(),
            _ => ["No", "Yes", "unsure"]
                .choose(&mut *rng)
                .unwrap()
                .to_string(),
        })
    }
}

fn attempt_limit_termination() -> Check {
    let click = |n: &str| LogicStep {
        kind: StepKind::Event,
        phrase: format!("(Event) Click a widget \"{n}\""),
    };
    let logic = BusinessLogic {
        functionality: "f".into(),
        steps: vec![click("add")],
    };
    let provider = Hostile {
        rng: Mutex::new(ChaCha8Rng::seed_from_u64(0)),
        always_no: true,
    };
    // Selection "0" must come first for the count to be about this one step.
    let mut script = ScriptedTranscript::default();
    script.push(ScriptMatch::role(PromptRole::StepSelection), "0");
    let mut llm = LlmSession::new(
        "d",
        Arc::new(Chain(ScriptedProvider::new(script), provider)),
    );
    let run = run_decision_loop(
        "Add",
        &logic,
        &mut DeviceSession::new(simulator()),
        &mut llm,
        &DecisionConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let judgments = llm
        .records()
        .iter()
        .filter(|r| r.role == PromptRole::CompletionJudgment)
        .count();
    ensure!(judgments == 3, "{judgments} judgments before the skip");
    ensure!(
        run.report.outcomes == [StepOutcome::Skipped],
        "outcomes {:?}",
        run.report.outcomes
    );

    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=8);
        let names = ["add", "finish", "title", "sample todo"];
        let logic = BusinessLogic {
            functionality: "f".into(),
            steps: (0..n)
                .map(|_| click(names.choose(&mut rng).unwrap()))
                .collect(),
        };
        let provider = Hostile {
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed + 1000)),
            always_no: rng.gen_bool(0.3),
        };
        let mut llm = LlmSession::new("d", Arc::new(provider));
        let r = run_decision_loop(
            "Add",
            &logic,
            &mut DeviceSession::new(simulator()),
            &mut llm,
            &DecisionConfig::default(),
        );
        ensure!(
            matches!(r, Ok(_) | Err(DecisionError::SessionAborted { .. })),
            "seed {seed}: {:?}",
            r.err()
        );
        ensure!(
            llm.calls() <= 10 * n,
            "seed {seed}: {} calls for {n} steps",
            llm.calls()
        );
    }
    Ok(())
}

/// Answers from the first provider until it runs dry, then from the second.
struct Chain<A, B>(A, B);

impl<A: LlmProvider, B: LlmProvider> LlmProvider for Chain<A, B> {
    fn id(&self) -> &str {
        "chain"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        self.0.complete(req).or_else(|_| self.1.complete(req))
    }
}

fn metric_exactness() -> Check {
    let gt = TestCase::new(
        "a",
        "c",
        vec![
            TestStep::click(WidgetAttrs::text("Add")),
            TestStep::exists(WidgetAttrs::text("Item")),
        ],
    );
    let pairs: Vec<CasePair> = (0..10)
        .map(|i| CasePair {
            case_id: format!("{i}"),
            generated: Some(if i < 4 {
                gt.clone()
            } else {
                TestCase::new("a", "c", vec![TestStep::click(WidgetAttrs::text("Other"))])
            }),
            ground_truth: gt.clone(),
            essential: None,
        })
        .collect();
    let r = evaluate_corpus(&pairs).map_err(|e| e.to_string())?;
    ensure!(r.perfect_rate == 0.40, "perfect rate {}", r.perfect_rate);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let names = ["Add", "Save", "Title"];
    let step = |rng: &mut ChaCha8Rng| {
        let w = WidgetAttrs::text(*names.choose(rng).unwrap());
        match rng.gen_range(0..3) {
            0 => TestStep::click(w),
            1 => TestStep::exists(w),
            _ => TestStep::edit(w, "v"),
        }
    };
    let mut perfect = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(1..6);
        let gt = TestCase::new("a", "c", (0..n).map(|_| step(&mut rng)).collect());
        let mut g = gt.clone();
        if rng.gen_bool(0.5) {
            let at = rng.gen_range(0..=g.steps.len());
            g.steps.insert(at, step(&mut rng));
        }
        let essential: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
        let essential = if essential.is_empty() {
            vec![0]
        } else {
            essential
        };
        let m = perfect_match(&g, &gt);
        let same = g.steps.len() == gt.steps.len()
            && g.steps
                .iter()
                .zip(&gt.steps)
                .all(|(a, b)| steps_equal(a, b));
        ensure!(
            m.matched == same,
            "trial {trial}: perfect_match disagrees with pairwise equality"
        );
        if m.matched {
            perfect += 1;
            ensure!(
                essential_coverage(&g, &gt, &essential).map_err(|e| e.to_string())?,
                "trial {trial}: perfect but not essential"
            );
        }
    }
    ensure!(perfect > 0, "no perfect pairs generated");
    Ok(())
}

struct Fixed(Vec<WidgetDescriptor>);

impl DeviceBackend for Fixed {
    fn dump_hierarchy(&mut self) -> Result<HierarchyDump, DeviceError> {
        Ok(HierarchyDump {
            widgets: self.0.clone(),
            raw: String::new(),
        })
    }
    fn screenshot(&mut self) -> Result<Option<Vec<u8>>, DeviceError> {
        Ok(None)
    }
    fn perform(&mut self, _: &Gesture) -> Result<(), DeviceError> {
        Ok(())
    }
    fn current_app(&mut self) -> Result<String, DeviceError> {
        Ok("fixed".into())
    }
}

fn perception_ordering() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for trial in 0..1000 {
        let layout: Vec<WidgetDescriptor> = (0..rng.gen_range(1..20))
            .map(|i| {
                let (l, t) = (rng.gen_range(0..5) * 200, rng.gen_range(0..6) * 150);
                let b = Bounds::new(l, t, l + rng.gen_range(1..4) * 60, t + 100);
                WidgetDescriptor::new(WidgetAttrs::text(format!("w{i}")), [ActionKind::Click], b)
            })
            .collect();
        // Oracle: stable sort on (top, left), then right, then dump order.
        let mut idx: Vec<usize> = (0..layout.len()).collect();
        idx.sort_by_key(|&i| {
            (
                layout[i].bounds.top,
                layout[i].bounds.left,
                layout[i].bounds.right,
                i,
            )
        });
        let want: Vec<&str> = idx.iter().map(|&i| layout[i].attrs.text.as_str()).collect();
        let mut s = DeviceSession::new(Box::new(Fixed(layout.clone())));
        let st = s.perceive().map_err(|e| e.to_string())?.clone();
        let got: Vec<&str> = st.widgets.iter().map(|w| w.attrs.text.as_str()).collect();
        ensure!(got == want, "trial {trial}: order {got:?}, want {want:?}");
        let again = s.perceive().map_err(|e| e.to_string())?.clone();
        ensure!(
            again.description == st.description,
            "trial {trial}: description changed"
        );
        ensure!(
            describe_state(&st) == st.description,
            "trial {trial}: rendering not deterministic"
        );
    }
    Ok(())
}

fn replay_soundness() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let (golden, golden_history) = golden_run(tmp.path())?;
    let trace = trace_run(None)?;
    let trace_case =
        synthesize_case(&trace.history, "simple-todo", "To-Do").map_err(|e| e.to_string())?;
    for (name, case, history) in [
        ("golden", &golden, &golden_history),
        ("trace", &trace_case, &trace.history),
    ] {
        let replayed = replay_case(case, simulator()).map_err(|e| format!("{name}: {e}"))?;
        let got: Vec<bool> = replayed.iter().filter_map(|r| r.verdict).collect();
        let want: Vec<bool> = history
            .actions()
            .filter(|a| {
                matches!(a.instruction, Instruction::Assertion { .. }) && a.verdict == Some(true)
            })
            .filter_map(|a| a.verdict)
            .collect();
        ensure!(!want.is_empty(), "{name}: no assertions to replay");
        ensure!(got == want, "{name}: verdicts {got:?}, recorded {want:?}");
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("end-to-end golden run", end_to_end_golden_run),
        ("retrieval oracle equivalence", retrieval_oracle_equivalence),
        ("fusion validator suite", fusion_validator_suite),
        ("decision trace conformance", trace_conformance),
        ("backtracking assertion", backtracking_assertion),
        (
            "attempt-limit termination and budget",
            attempt_limit_termination,
        ),
        ("metric exactness", metric_exactness),
        ("perception ordering", perception_ordering),
        ("replay soundness", replay_soundness),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(()) => println!("criterion {} {name}: PASS", i + 1),
            Err(reason) => {
                println!("criterion {} {name}: FAIL ({reason})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
