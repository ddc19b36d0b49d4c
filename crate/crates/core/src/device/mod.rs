//! Perception and interaction: pluggable backends, state capture,
//! instruction execution, assertion checking, history and case synthesis.

mod adb;
mod backend;
pub mod hierarchy;
mod history;
mod replay;
mod session;
mod simulator;

use std::path::PathBuf;
use std::str::FromStr;

pub use adb::{escape_input_text, parse_focus_package, AdbBackend};
pub use backend::{
    gesture_for, swipe_direction, DeviceBackend, Gesture, HierarchyDump, SWIPE_DURATION_MS,
};
pub use history::{
    backtrack_widget, synthesize_case, BacktrackTarget, ExecutedAction, HistoryEntry,
    SessionHistory,
};
pub use replay::{replay_case, ReplayStep};
pub use session::{describe_state, DeviceSession, STATES_DIR};
pub use simulator::{
    Effects, Selector, SimulatedApp, SimulatorBackend, Transition, Trigger, WidgetSpec,
};

use crate::model::ActionKind;

#[derive(Debug, thiserror::Error)]
pub enum DeviceError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("screen has no describable widgets")]
    EmptyScreen,
    #[error("instruction targets state {source_state} but the latest state is {latest}")]
    StaleWidget { source_state: u64, latest: u64 },
    #[error("widget {widget_id} does not support {action}")]
    ActionUnsupported {
        action: ActionKind,
        widget_id: usize,
    },
    #[error("state {state_id} has no widget {widget_id}")]
    InvalidWidgetId { state_id: u64, widget_id: usize },
    #[error("assertion target `{0}` not found in any earlier state")]
    AssertionTargetUnresolved(String),
    #[error("session recorded no events or checked assertions")]
    EmptySession,
    #[error("expected an event instruction")]
    NotAnEvent,
    #[error("expected an assertion instruction")]
    NotAnAssertion,
    #[error("no state has been perceived yet")]
    NoState,
    #[error("state {0} already has an executed instruction")]
    StateAlreadyActed(u64),
    #[error("edit requires a value")]
    MissingValue,
    #[error("gesture rejected: {0}")]
    Rejected(String),
    #[error("malformed hierarchy dump: {0}")]
    MalformedDump(String),
    #[error("invalid app model: {0}")]
    InvalidAppModel(String),
    #[error("invalid backend spec `{0}`: expected sim:<app-model.json> or adb:<serial>")]
    InvalidSpec(String),
    #[error("replay step {step}: no widget matching {widget} supports {action}")]
    ReplayDiverged {
        step: usize,
        widget: String,
        action: ActionKind,
    },
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

/// Backend selector: `sim:<app-model.json>` or `adb:<serial>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Simulator(PathBuf),
    Adb(String),
}

impl FromStr for BackendSpec {
    type Err = DeviceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("sim", path)) if !path.is_empty() => {
                Ok(BackendSpec::Simulator(PathBuf::from(path)))
            }
            Some(("adb", serial)) if !serial.is_empty() => Ok(BackendSpec::Adb(serial.to_string())),
            _ => Err(DeviceError::InvalidSpec(s.to_string())),
        }
    }
}

impl std::fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendSpec::Simulator(p) => write!(f, "sim:{}", p.display()),
            BackendSpec::Adb(s) => write!(f, "adb:{s}"),
        }
    }
}

impl BackendSpec {
    pub fn connect(&self) -> Result<Box<dyn DeviceBackend>, DeviceError> {
        Ok(match self {
            BackendSpec::Simulator(path) => {
                Box::new(SimulatorBackend::new(SimulatedApp::load(path)?))
            }
            BackendSpec::Adb(serial) => Box::new(AdbBackend::new(serial.clone())),
        })
    }
}
