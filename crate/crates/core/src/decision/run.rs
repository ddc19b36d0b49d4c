use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use super::agent::{
    generate_instruction, judge_completion, render_executed, select_step, BudgetedSession,
    Selection,
};
use super::DecisionError;
use crate::device::{DeviceError, DeviceSession, SessionHistory};
use crate::llm::LlmSession;
use crate::model::{BusinessLogic, Instruction};

pub const DEFAULT_STEP_NUM: usize = 2;
pub const DEFAULT_ATTEMPT_LIMIT: usize = 3;
pub const DEFAULT_BUDGET_MULTIPLIER: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionConfig {
    /// Window size.
    pub step_num: usize,
    /// Failed attempts on one step before it is skipped.
    pub attempt_limit: usize,
    /// Provider calls allowed per logic step, summed over the session.
    pub budget_multiplier: usize,
    /// Where to stream one JSON record per iteration.
    pub trace_path: Option<PathBuf>,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self {
            step_num: DEFAULT_STEP_NUM,
            attempt_limit: DEFAULT_ATTEMPT_LIMIT,
            budget_multiplier: DEFAULT_BUDGET_MULTIPLIER,
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Pending,
    Completed,
    Skipped,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub outcomes: Vec<StepOutcome>,
    pub provider_calls: usize,
    pub budget: usize,
    pub iterations: usize,
}

impl DecisionReport {
    pub fn all_completed(&self) -> bool {
        self.outcomes.iter().all(|o| *o == StepOutcome::Completed)
    }

    pub fn count(&self, outcome: StepOutcome) -> usize {
        self.outcomes.iter().filter(|o| **o == outcome).count()
    }
}

/// One loop iteration. `selection` is present only when the iteration
/// started by choosing a step: the window offset, or `no_match`.
/// `attempts` is the step's failed-attempt count at the end of the
/// iteration, before any reset caused by a skip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub state_id: u64,
    pub window: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<Instruction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<StepOutcome>,
}

#[derive(Debug, Clone)]
pub struct DecisionRun {
    pub history: SessionHistory,
    pub report: DecisionReport,
    pub trace: Vec<TraceRecord>,
}

struct TraceWriter {
    out: Option<BufWriter<File>>,
    path: Option<PathBuf>,
    records: Vec<TraceRecord>,
}

impl TraceWriter {
    fn open(path: Option<&PathBuf>) -> Result<Self, DecisionError> {
        let out = match path {
            Some(p) => Some(BufWriter::new(
                File::create(p).map_err(|e| DeviceError::Io(p.clone(), e))?,
            )),
            None => None,
        };
        Ok(Self {
            out,
            path: path.cloned(),
            records: Vec::new(),
        })
    }

    fn emit(&mut self, rec: TraceRecord) -> Result<(), DecisionError> {
        if let (Some(out), Some(path)) = (&mut self.out, &self.path) {
            let io = |e| DeviceError::Io(path.clone(), e);
            let line = serde_json::to_string(&rec).expect("trace records serialize");
            writeln!(out, "{line}").map_err(io)?;
            out.flush().map_err(io)?;
        }
        self.records.push(rec);
        Ok(())
    }
}

/// Drives `device` through `logic`.
///
/// The window always starts at the first logic step that is neither
/// completed, skipped nor unmatched. Choosing offset `k` marks the `k`
/// window steps before it unmatched; a no-match reply (or an unparseable
/// one) marks the first window step unmatched and slides the window by one.
/// Each attempt generates an instruction, executes or checks it,
/// re-perceives and asks for a verdict; a step is skipped once its failed
/// attempts reach the limit. The session ends when every step is consumed.
pub fn run_decision_loop(
    requirement: &str,
    logic: &BusinessLogic,
    device: &mut DeviceSession,
    llm: &mut LlmSession,
    config: &DecisionConfig,
) -> Result<DecisionRun, DecisionError> {
    if config.step_num == 0 || config.attempt_limit == 0 {
        return Err(DecisionError::InvalidConfig(
            "step_num and attempt_limit must be at least 1".into(),
        ));
    }
    let n = logic.len();
    let budget = config.budget_multiplier * n;
    let start_calls = llm.calls();
    let mut provider = BudgetedSession::new(llm, start_calls + budget);
    let mut outcomes = vec![StepOutcome::Pending; n];
    let mut trace = TraceWriter::open(config.trace_path.as_ref())?;
    let mut window_start = 0;
    let mut current: Option<usize> = None;
    let mut attempts = 0;
    let mut step_cmds: Vec<String> = Vec::new();
    let mut all_cmds: Vec<String> = Vec::new();
    let mut iteration = 0;

    macro_rules! abort {
        ($reason:expr) => {{
            let reason: String = $reason;
            warn!(%reason, "decision session aborted");
            return Err(DecisionError::SessionAborted {
                reason,
                partial: Box::new(DecisionRun {
                    history: device.history().clone(),
                    report: DecisionReport {
                        outcomes,
                        provider_calls: provider.calls() - start_calls,
                        budget,
                        iterations: iteration,
                    },
                    trace: trace.records,
                }),
            });
        }};
    }

    if device.history().is_empty() {
        if let Err(e) = device.perceive_with_retry() {
            abort!(format!("perception: {e}"));
        }
    }

    loop {
        while window_start < n && outcomes[window_start] != StepOutcome::Pending {
            window_start += 1;
        }
        if window_start >= n {
            break;
        }
        iteration += 1;
        let window_end = (window_start + config.step_num).min(n);
        let state = device.latest()?.clone();
        let mut rec = TraceRecord {
            iteration,
            state_id: state.state_id,
            window: [window_start, window_end],
            selection: None,
            step: None,
            instruction: None,
            verdict: None,
            judgment: None,
            error: None,
            attempts,
            outcome: None,
        };

        let step_idx = match current {
            Some(i) => i,
            None => {
                let window = &logic.steps[window_start..window_end];
                match select_step(requirement, &state.description, window, &mut provider) {
                    Ok(Selection::Step(k)) => {
                        for o in &mut outcomes[window_start..window_start + k] {
                            *o = StepOutcome::Unmatched;
                        }
                        rec.selection = Some(k.to_string());
                        attempts = 0;
                        step_cmds.clear();
                        current = Some(window_start + k);
                        window_start + k
                    }
                    Ok(Selection::NoMatch) | Err(DecisionError::UnparseableReply { .. }) => {
                        info!(step = window_start, "no applicable step, sliding window");
                        outcomes[window_start] = StepOutcome::Unmatched;
                        rec.selection = Some("no_match".into());
                        rec.step = Some(window_start);
                        rec.outcome = Some(StepOutcome::Unmatched);
                        trace.emit(rec)?;
                        window_start += 1;
                        continue;
                    }
                    Err(e) => abort!(format!("step selection: {e}")),
                }
            }
        };
        rec.step = Some(step_idx);
        let step = &logic.steps[step_idx];

        match generate_instruction(
            requirement,
            step,
            &state,
            &all_cmds,
            device.history(),
            &mut provider,
        ) {
            Ok(instruction) => {
                rec.instruction = Some(instruction.clone());
                let acted = match &instruction {
                    Instruction::Event { .. } => {
                        device.execute(&instruction, Some(step_idx)).map(|_| None)
                    }
                    _ => device
                        .check_assertion(&instruction, Some(step_idx))
                        .map(Some),
                };
                match acted {
                    Ok(verdict) => rec.verdict = verdict,
                    Err(e) => abort!(format!("interaction: {e}")),
                }
                let line =
                    render_executed(device.history().actions().last().expect("just recorded"));
                step_cmds.push(line.clone());
                all_cmds.push(line);
                if let Err(e) = device.perceive_with_retry() {
                    abort!(format!("perception: {e}"));
                }
                let latest = device.latest()?.clone();
                match judge_completion(requirement, step, &step_cmds, &latest, &mut provider) {
                    Ok(true) => {
                        rec.judgment = Some(true);
                        rec.attempts = attempts;
                        outcomes[step_idx] = StepOutcome::Completed;
                        rec.outcome = Some(StepOutcome::Completed);
                        current = None;
                        attempts = 0;
                    }
                    Ok(false) => {
                        rec.judgment = Some(false);
                        attempts += 1;
                        rec.attempts = attempts;
                    }
                    Err(e) => abort!(format!("completion judgment: {e}")),
                }
            }
            Err(DecisionError::StepFailed(reason))
            | Err(DecisionError::Device(DeviceError::AssertionTargetUnresolved(reason))) => {
                warn!(step = step_idx, %reason, "attempt failed");
                rec.error = Some(reason);
                attempts += 1;
                rec.attempts = attempts;
            }
            Err(e) => abort!(format!("instruction generation: {e}")),
        }

        if current.is_some() && attempts >= config.attempt_limit {
            info!(
                step = step_idx,
                attempts, "attempt limit reached, skipping step"
            );
            outcomes[step_idx] = StepOutcome::Skipped;
            rec.outcome = Some(StepOutcome::Skipped);
            current = None;
            attempts = 0;
        }
        trace.emit(rec)?;
    }

    let report = DecisionReport {
        outcomes,
        provider_calls: provider.calls() - start_calls,
        budget,
        iterations: iteration,
    };
    info!(
        completed = report.count(StepOutcome::Completed),
        skipped = report.count(StepOutcome::Skipped),
        unmatched = report.count(StepOutcome::Unmatched),
        calls = report.provider_calls,
        "task complete"
    );
    Ok(DecisionRun {
        history: device.history().clone(),
        report,
        trace: trace.records,
    })
}
