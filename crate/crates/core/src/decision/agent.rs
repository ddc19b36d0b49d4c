//! The three provider-backed decisions: which step, which instruction, done yet.

use std::sync::LazyLock;

use regex::Regex;
use serde_json::Value;
use tracing::debug;

use super::DecisionError;
use crate::device::{backtrack_widget, BacktrackTarget, ExecutedAction, SessionHistory};
use crate::fusion::parse_logic_step;
use crate::llm::{
    render_prompt, with_feedback, InstructionTarget, LlmSession, PromptContext, PromptRole,
};
use crate::model::{
    ActionKind, Condition, GuiState, Instruction, LogicStep, StepKind, WidgetAttrs,
};

/// An [`LlmSession`] with an optional cap on the total number of calls.
pub struct BudgetedSession<'a> {
    session: &'a mut LlmSession,
    limit: Option<usize>,
}

impl<'a> BudgetedSession<'a> {
    pub fn new(session: &'a mut LlmSession, limit: usize) -> Self {
        Self {
            session,
            limit: Some(limit),
        }
    }

    pub fn unlimited(session: &'a mut LlmSession) -> Self {
        Self {
            session,
            limit: None,
        }
    }

    pub fn calls(&self) -> usize {
        self.session.calls()
    }

    pub fn ask(&mut self, role: PromptRole, prompt: String) -> Result<String, DecisionError> {
        if let Some(limit) = self.limit {
            if self.session.calls() >= limit {
                return Err(DecisionError::BudgetExceeded { limit });
            }
        }
        Ok(self.session.complete(role, prompt)?.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Offset into the window.
    Step(usize),
    NoMatch,
}

static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+").expect("valid regex"));

/// Reads a selection reply: the first integer, `-1` meaning no match.
pub fn parse_selection(reply: &str, window_len: usize) -> Option<Selection> {
    let n: i64 = INTEGER.find(reply)?.as_str().parse().ok()?;
    match n {
        -1 => Some(Selection::NoMatch),
        n if n >= 0 && (n as usize) < window_len => Some(Selection::Step(n as usize)),
        _ => None,
    }
}

/// Asks which window step applies to the current state. An unusable reply
/// gets one feedback round before [`DecisionError::UnparseableReply`].
pub fn select_step(
    requirement: &str,
    state_description: &str,
    window: &[LogicStep],
    provider: &mut BudgetedSession<'_>,
) -> Result<Selection, DecisionError> {
    let base = render_prompt(
        PromptRole::StepSelection,
        &PromptContext::StepSelection {
            requirement,
            candidates: window,
            state_description,
        },
    )?;
    let reply = provider.ask(PromptRole::StepSelection, base.clone())?;
    if let Some(sel) = parse_selection(&reply, window.len()) {
        return Ok(sel);
    }
    let problem = format!(
        "answer with a candidate number between 0 and {}, or (-1) if none applies",
        window.len() - 1
    );
    let retry = provider.ask(
        PromptRole::StepSelection,
        with_feedback(&base, &reply, &[problem]),
    )?;
    parse_selection(&retry, window.len()).ok_or(DecisionError::UnparseableReply {
        role: PromptRole::StepSelection,
        reply: retry,
    })
}

fn json_object(reply: &str) -> Option<serde_json::Map<String, Value>> {
    let start = reply.find('{')?;
    let end = reply.rfind('}')?;
    match serde_json::from_str(reply.get(start..=end)?).ok()? {
        Value::Object(m) => Some(m),
        _ => None,
    }
}

/// Parses and checks an instruction reply against `state`, returning the
/// problems to feed back when it is unusable.
fn parse_instruction(
    reply: &str,
    target: InstructionTarget,
    state: &GuiState,
) -> Result<Instruction, String> {
    let obj = json_object(reply).ok_or("answer with one JSON object")?;
    let widget_id =
        obj.get("widget_id")
            .and_then(|v| {
                v.as_u64()
                    .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
            })
            .ok_or("widget_id must be a widget number from the current state")? as usize;
    let widget = state.widget(widget_id).ok_or_else(|| {
        format!(
            "widget {widget_id} does not exist; the current state has widgets 0 to {}",
            state.widgets.len().saturating_sub(1)
        )
    })?;
    if target == InstructionTarget::ExistenceAssertion {
        return Ok(Instruction::Assertion {
            widget_id,
            condition: Condition::Exists,
            source_state_id: state.state_id,
        });
    }
    let action: ActionKind = obj
        .get("action")
        .and_then(Value::as_str)
        .ok_or("action is missing")?
        .parse()
        .map_err(|_| {
            "action must be one of click, edit, swipe_left, swipe_right, swipe_up, swipe_down"
                .to_string()
        })?;
    if !widget.supports(action) {
        return Err(format!("widget {widget_id} does not support {action}"));
    }
    let value = obj
        .get("value")
        .and_then(Value::as_str)
        .map(str::to_string)
        .filter(|v| !v.is_empty());
    let value = match (action.requires_value(), value) {
        (true, None) => return Err("edit needs a non-empty value".into()),
        (true, v) => v,
        (false, _) => None,
    };
    Ok(Instruction::Event {
        widget_id,
        action,
        value,
        source_state_id: state.state_id,
    })
}

/// Turns a logic step into a concrete instruction on `state`.
///
/// Events and existence assertions are asked of the provider, with one
/// corrective round for invalid replies. Disappearance assertions are
/// resolved by backtracking through `history` with no provider call.
pub fn generate_instruction(
    requirement: &str,
    step: &LogicStep,
    state: &GuiState,
    executed: &[String],
    history: &SessionHistory,
    provider: &mut BudgetedSession<'_>,
) -> Result<Instruction, DecisionError> {
    let parsed = parse_logic_step(step)
        .map_err(|e| DecisionError::StepFailed(format!("unparseable logic step: {e:?}")))?;
    if parsed.kind == StepKind::Assertion && parsed.condition == Some(Condition::NotExists) {
        let (source_state_id, widget_id, _) =
            backtrack_widget(&BacktrackTarget::Phrases(parsed.widget_names), history)?;
        return Ok(Instruction::Assertion {
            widget_id,
            condition: Condition::NotExists,
            source_state_id,
        });
    }
    let target = match parsed.kind {
        StepKind::Event => InstructionTarget::Event,
        StepKind::Assertion => InstructionTarget::ExistenceAssertion,
    };
    let base = render_prompt(
        PromptRole::InstructionGeneration,
        &PromptContext::Instruction {
            requirement,
            step,
            target,
            executed,
            state_description: &state.description,
        },
    )?;
    let reply = provider.ask(PromptRole::InstructionGeneration, base.clone())?;
    let problem = match parse_instruction(&reply, target, state) {
        Ok(i) => return Ok(i),
        Err(p) => p,
    };
    debug!(%problem, "instruction rejected, asking again");
    let retry = provider.ask(
        PromptRole::InstructionGeneration,
        with_feedback(&base, &reply, &[problem]),
    )?;
    parse_instruction(&retry, target, state).map_err(DecisionError::StepFailed)
}

/// Reads a verdict: the first word, case-insensitively.
pub fn parse_judgment(reply: &str) -> Option<bool> {
    let word: String = reply
        .split_whitespace()
        .next()?
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Asks whether `step` is done. An unusable reply gets one feedback round
/// and is then taken as "no".
pub fn judge_completion(
    requirement: &str,
    step: &LogicStep,
    executed_for_step: &[String],
    latest: &GuiState,
    provider: &mut BudgetedSession<'_>,
) -> Result<bool, DecisionError> {
    let base = render_prompt(
        PromptRole::CompletionJudgment,
        &PromptContext::Completion {
            requirement,
            step,
            executed: executed_for_step,
            state_description: &latest.description,
        },
    )?;
    let reply = provider.ask(PromptRole::CompletionJudgment, base.clone())?;
    if let Some(v) = parse_judgment(&reply) {
        return Ok(v);
    }
    let retry = provider.ask(
        PromptRole::CompletionJudgment,
        with_feedback(&base, &reply, &["answer with Yes or No only".to_string()]),
    )?;
    Ok(parse_judgment(&retry).unwrap_or(false))
}

fn name_attr(a: &WidgetAttrs) -> String {
    if !a.text.trim().is_empty() {
        format!("text='{}'", a.text)
    } else if !a.content_desc.trim().is_empty() {
        format!("content-desc='{}'", a.content_desc)
    } else {
        format!("resource-id='{}'", a.resource_id)
    }
}

/// One-line rendering of an executed instruction for later prompts.
pub fn render_executed(a: &ExecutedAction) -> String {
    let name = name_attr(&a.target.attrs);
    match &a.instruction {
        Instruction::Event {
            widget_id,
            action,
            value,
            source_state_id,
        } => match value {
            Some(v) => format!(
                "{action} widget {widget_id} ({name}) with '{v}' in state {source_state_id}"
            ),
            None => format!("{action} widget {widget_id} ({name}) in state {source_state_id}"),
        },
        Instruction::Assertion { condition, .. } => {
            let verdict = match a.verdict {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "unchecked",
            };
            format!("assert widget ({name}) {} -> {verdict}", condition.as_str())
        }
        Instruction::NoMatch => "no_match".into(),
        Instruction::TaskComplete => "task_complete".into(),
    }
}
