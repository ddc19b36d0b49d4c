use serde::Serialize;

use super::backend::DeviceBackend;
use super::session::DeviceSession;
use super::DeviceError;
use crate::model::{Condition, Instruction, TestCase, TestStep};

/// Outcome of one replayed step. Events carry no verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayStep {
    pub step: usize,
    pub state_id: u64,
    pub verdict: Option<bool>,
}

/// Runs `case` step by step on a fresh backend: each event goes to the
/// first widget of the current state that matches the step's widget and
/// supports its action; each assertion is checked against the current
/// state.
pub fn replay_case(
    case: &TestCase,
    backend: Box<dyn DeviceBackend>,
) -> Result<Vec<ReplayStep>, DeviceError> {
    let mut session = DeviceSession::new(backend);
    let mut out = Vec::with_capacity(case.steps.len());
    for (i, step) in case.steps.iter().enumerate() {
        let state = session.perceive_with_retry()?.clone();
        match step {
            TestStep::Event {
                action,
                widget,
                value,
            } => {
                let widget_id = state
                    .widgets
                    .iter()
                    .position(|w| w.attrs.matches(widget) && w.supports(*action))
                    .ok_or_else(|| DeviceError::ReplayDiverged {
                        step: i,
                        widget: widget.display_name(),
                        action: *action,
                    })?;
                session.execute(
                    &Instruction::Event {
                        widget_id,
                        action: *action,
                        value: value.clone(),
                        source_state_id: state.state_id,
                    },
                    Some(i),
                )?;
                out.push(ReplayStep {
                    step: i,
                    state_id: state.state_id,
                    verdict: None,
                });
            }
            TestStep::Assertion { condition, widget } => {
                let present = state.widgets.iter().any(|w| w.attrs.matches(widget));
                let verdict = match condition {
                    Condition::Exists => present,
                    Condition::NotExists => !present,
                };
                out.push(ReplayStep {
                    step: i,
                    state_id: state.state_id,
                    verdict: Some(verdict),
                });
            }
        }
    }
    Ok(out)
}
