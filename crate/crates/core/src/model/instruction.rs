use serde::{Deserialize, Serialize};

use super::step::Condition;
use super::widget::ActionKind;

/// A concrete decision: an event or assertion bound to a widget id of a
/// specific perceived state, or one of the two control signals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instruction {
    Event {
        widget_id: usize,
        action: ActionKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<String>,
        source_state_id: u64,
    },
    /// `source_state_id` is the state `widget_id` indexes into; for
    /// disappearance checks that is the historical state found by backtracking.
    Assertion {
        widget_id: usize,
        condition: Condition,
        source_state_id: u64,
    },
    NoMatch,
    TaskComplete,
}

impl Instruction {
    pub fn source_state_id(&self) -> Option<u64> {
        match self {
            Instruction::Event {
                source_state_id, ..
            }
            | Instruction::Assertion {
                source_state_id, ..
            } => Some(*source_state_id),
            _ => None,
        }
    }

    pub fn widget_id(&self) -> Option<usize> {
        match self {
            Instruction::Event { widget_id, .. } | Instruction::Assertion { widget_id, .. } => {
                Some(*widget_id)
            }
            _ => None,
        }
    }
}
