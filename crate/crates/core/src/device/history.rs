use serde::{Deserialize, Serialize};

use super::hierarchy::strip_id_prefix;
use super::DeviceError;
use crate::model::{
    phrase_key, ActionKind, Condition, GuiState, Instruction, TestCase, TestStep, WidgetAttrs,
    WidgetDescriptor,
};

/// An instruction carried out in a state, with the widget it resolved to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutedAction {
    pub instruction: Instruction,
    pub target: WidgetDescriptor,
    /// Logic step the instruction was generated for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logic_step: Option<usize>,
    /// Assertion outcome; `None` for events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub state: GuiState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ExecutedAction>,
}

/// Append-only record of perceived states, each with the instruction that
/// was executed in it (if any).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHistory {
    entries: Vec<HistoryEntry>,
}

impl SessionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn latest(&self) -> Option<&GuiState> {
        self.entries.last().map(|e| &e.state)
    }

    pub fn state(&self, state_id: u64) -> Option<&GuiState> {
        self.entries
            .iter()
            .map(|e| &e.state)
            .find(|s| s.state_id == state_id)
    }

    pub fn states(&self) -> impl DoubleEndedIterator<Item = &GuiState> {
        self.entries.iter().map(|e| &e.state)
    }

    pub fn actions(&self) -> impl Iterator<Item = &ExecutedAction> {
        self.entries.iter().filter_map(|e| e.action.as_ref())
    }

    /// Appends a state; ids must strictly increase.
    pub fn push_state(&mut self, state: GuiState) {
        if let Some(last) = self.latest() {
            assert!(
                state.state_id > last.state_id,
                "state ids must strictly increase"
            );
        }
        self.entries.push(HistoryEntry {
            state,
            action: None,
        });
    }

    /// Records the instruction executed in the latest state.
    pub fn record(&mut self, action: ExecutedAction) -> Result<(), DeviceError> {
        let last = self.entries.last_mut().ok_or(DeviceError::NoState)?;
        if last.action.is_some() {
            return Err(DeviceError::StateAlreadyActed(last.state.state_id));
        }
        last.action = Some(action);
        Ok(())
    }

    /// Widget `widget_id` of state `state_id`.
    pub fn resolve(
        &self,
        state_id: u64,
        widget_id: usize,
    ) -> Result<&WidgetDescriptor, DeviceError> {
        self.state(state_id)
            .and_then(|s| s.widget(widget_id))
            .ok_or(DeviceError::InvalidWidgetId {
                state_id,
                widget_id,
            })
    }
}

/// What a disappearance check is looking for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BacktrackTarget {
    /// Free phrases from a logic step, any of which may name the widget.
    Phrases(Vec<String>),
    Descriptor(WidgetAttrs),
}

impl BacktrackTarget {
    pub fn phrase(p: impl Into<String>) -> Self {
        BacktrackTarget::Phrases(vec![p.into()])
    }

    fn label(&self) -> String {
        match self {
            BacktrackTarget::Phrases(p) => p.join(" / "),
            BacktrackTarget::Descriptor(a) => a.display_name(),
        }
    }
}

fn attr_keys(attrs: &WidgetAttrs) -> [String; 3] {
    [
        phrase_key(&attrs.text),
        phrase_key(&attrs.content_desc),
        phrase_key(strip_id_prefix(&attrs.resource_id)),
    ]
}

/// Scans every state before the latest one, newest first, for a widget
/// named by `target`. Phrases match exactly on alphanumeric keys first; if
/// no state has an exact match, a second pass accepts attributes containing
/// the phrase key (keys of three or more characters only).
pub fn backtrack_widget(
    target: &BacktrackTarget,
    history: &SessionHistory,
) -> Result<(u64, usize, WidgetDescriptor), DeviceError> {
    let unresolved = || DeviceError::AssertionTargetUnresolved(target.label());
    let n = history.len();
    if n == 0 {
        return Err(unresolved());
    }
    let earlier: Vec<&GuiState> = history.states().take(n - 1).collect();
    let find = |pred: &dyn Fn(&WidgetDescriptor) -> bool| {
        earlier.iter().rev().find_map(|s| {
            s.widgets
                .iter()
                .position(pred)
                .map(|i| (s.state_id, i, s.widgets[i].clone()))
        })
    };
    match target {
        BacktrackTarget::Descriptor(attrs) => {
            find(&|w| w.attrs.matches(attrs)).ok_or_else(unresolved)
        }
        BacktrackTarget::Phrases(phrases) => {
            let keys: Vec<String> = phrases
                .iter()
                .map(|p| phrase_key(p))
                .filter(|k| !k.is_empty())
                .collect();
            let exact = |w: &WidgetDescriptor| {
                attr_keys(&w.attrs)
                    .iter()
                    .any(|a| !a.is_empty() && keys.contains(a))
            };
            let loose = |w: &WidgetDescriptor| {
                attr_keys(&w.attrs)
                    .iter()
                    .any(|a| keys.iter().any(|k| k.len() >= 3 && a.contains(k.as_str())))
            };
            find(&exact).or_else(|| find(&loose)).ok_or_else(unresolved)
        }
    }
}

/// Builds the test case from executed events and passed assertions, in
/// execution order. `back` events are recovery moves and are left out, as
/// are assertions that failed.
pub fn synthesize_case(
    history: &SessionHistory,
    app_id: &str,
    category: &str,
) -> Result<TestCase, DeviceError> {
    let mut steps = Vec::new();
    for a in history.actions() {
        match &a.instruction {
            Instruction::Event { action, value, .. } if *action != ActionKind::Back => {
                let widget = a.target.attrs.clone();
                steps.push(match action {
                    ActionKind::Edit => {
                        TestStep::edit(widget, value.clone().ok_or(DeviceError::MissingValue)?)
                    }
                    _ => TestStep::event(*action, widget),
                });
            }
            Instruction::Assertion { condition, .. } if a.verdict == Some(true) => {
                let widget = a.target.attrs.clone();
                steps.push(match condition {
                    Condition::Exists => TestStep::exists(widget),
                    Condition::NotExists => TestStep::not_exists(widget),
                });
            }
            _ => {}
        }
    }
    if steps.is_empty() {
        return Err(DeviceError::EmptySession);
    }
    Ok(TestCase::new(app_id, category, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{describe_widgets, Bounds};

    fn state(id: u64, names: &[&str]) -> GuiState {
        let widgets: Vec<WidgetDescriptor> = names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                WidgetDescriptor::new(
                    WidgetAttrs::text(*n),
                    [ActionKind::Click],
                    Bounds::new(0, i as i32 * 10, 10, i as i32 * 10 + 10),
                )
            })
            .collect();
        GuiState {
            state_id: id,
            description: describe_widgets(&widgets),
            widgets,
            screenshot_ref: None,
        }
    }

    fn history(states: &[&[&str]]) -> SessionHistory {
        let mut h = SessionHistory::new();
        for (i, s) in states.iter().enumerate() {
            h.push_state(state(i as u64, s));
        }
        h
    }

    #[test]
    fn backtracking_finds_the_newest_earlier_occurrence() {
        let h = history(&[&["Add", "Sample todo"], &["Sample todo", "x"], &["Add"]]);
        let (sid, wid, w) = backtrack_widget(&BacktrackTarget::phrase("sample to do"), &h).unwrap();
        assert_eq!((sid, wid), (1, 0));
        assert_eq!(w.attrs.text, "Sample todo");
    }

    #[test]
    fn backtracking_skips_the_current_state() {
        let h = history(&[&["Add"], &["Sample todo"]]);
        assert!(matches!(
            backtrack_widget(&BacktrackTarget::phrase("sample todo"), &h),
            Err(DeviceError::AssertionTargetUnresolved(_))
        ));
        assert!(backtrack_widget(&BacktrackTarget::phrase("x"), &SessionHistory::new()).is_err());
    }

    #[test]
    fn containment_is_a_fallback_only() {
        let h = history(&[&["Sample todo item"], &["Sample todo"], &["now"]]);
        let (sid, ..) = backtrack_widget(&BacktrackTarget::phrase("sample todo"), &h).unwrap();
        assert_eq!(sid, 1);
        let h = history(&[&["Sample todo item"], &["other"], &["now"]]);
        let (sid, ..) = backtrack_widget(&BacktrackTarget::phrase("sample todo"), &h).unwrap();
        assert_eq!(sid, 0);
    }

    #[test]
    fn back_only_session_is_empty() {
        let mut h = history(&[&["a"]]);
        h.record(ExecutedAction {
            instruction: Instruction::Event {
                widget_id: 0,
                action: ActionKind::Back,
                value: None,
                source_state_id: 0,
            },
            target: h.latest().unwrap().widgets[0].clone(),
            logic_step: None,
            verdict: None,
        })
        .unwrap();
        assert!(matches!(
            synthesize_case(&h, "a", "b"),
            Err(DeviceError::EmptySession)
        ));
    }
}
