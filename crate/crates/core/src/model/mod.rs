//! Shared domain vocabulary: widgets, steps, test cases, states, business
//! logic and instructions, with their canonical JSON forms.

mod instruction;
mod logic;
mod state;
mod step;
mod widget;

use std::path::PathBuf;

pub use instruction::Instruction;
pub use logic::{BusinessLogic, LogicStep};
pub use state::{describe_widgets, spatial_order, GuiState};
pub use step::{canonicalize_step, steps_equal, Condition, StepKind, TestCase, TestStep};
pub use widget::{canonical_text, phrase_key, ActionKind, Bounds, WidgetAttrs, WidgetDescriptor};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("test case has no steps")]
    EmptyCase,
    #[error("widget has no text, content-desc or resource-id")]
    UndescribableWidget,
    #[error("invalid bounds {0:?}")]
    InvalidBounds(Bounds),
    #[error("edit event requires a value")]
    MissingValue,
    #[error("{0} event must not carry a value")]
    UnexpectedValue(ActionKind),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("malformed step: {0}")]
    MalformedStep(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}
