use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use tracing::{debug, info, warn};

use super::backend::{gesture_for, DeviceBackend};
use super::history::{ExecutedAction, SessionHistory};
use super::DeviceError;
use crate::model::{
    describe_widgets, spatial_order, Condition, GuiState, Instruction, WidgetDescriptor,
};

pub const STATES_DIR: &str = "states";

/// The structured text description of a state.
pub fn describe_state(state: &GuiState) -> String {
    describe_widgets(&state.widgets)
}

/// One backend plus the history of everything perceived and done on it.
pub struct DeviceSession {
    backend: Box<dyn DeviceBackend>,
    history: SessionHistory,
    artifacts: Option<PathBuf>,
    next_id: u64,
}

impl std::fmt::Debug for DeviceSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeviceSession")
            .field("states", &self.history.len())
            .field("artifacts", &self.artifacts)
            .finish()
    }
}

impl DeviceSession {
    pub fn new(backend: Box<dyn DeviceBackend>) -> Self {
        Self {
            backend,
            history: SessionHistory::new(),
            artifacts: None,
            next_id: 0,
        }
    }

    /// Store screenshots and raw dumps under `<run_dir>/states/`.
    pub fn with_artifacts(mut self, run_dir: &Path) -> Result<Self, DeviceError> {
        let dir = run_dir.join(STATES_DIR);
        fs::create_dir_all(&dir).map_err(|e| DeviceError::Io(dir.clone(), e))?;
        self.artifacts = Some(dir);
        Ok(self)
    }

    pub fn history(&self) -> &SessionHistory {
        &self.history
    }

    pub fn into_history(self) -> SessionHistory {
        self.history
    }

    pub fn latest(&self) -> Result<&GuiState, DeviceError> {
        self.history.latest().ok_or(DeviceError::NoState)
    }

    pub fn current_app(&mut self) -> Result<String, DeviceError> {
        self.backend.current_app()
    }

    /// Captures the current screen as a new state and appends it to history.
    pub fn perceive(&mut self) -> Result<&GuiState, DeviceError> {
        let dump = self.backend.dump_hierarchy()?;
        let widgets: Vec<WidgetDescriptor> = dump
            .widgets
            .into_iter()
            .filter(|w| w.attrs.is_describable() && w.bounds.is_valid())
            .collect();
        if widgets.is_empty() {
            return Err(DeviceError::EmptyScreen);
        }
        let widgets = spatial_order(widgets);
        let state_id = self.next_id;
        self.next_id += 1;
        let mut screenshot_ref = None;
        if let Some(dir) = &self.artifacts {
            let xml = dir.join(format!("{state_id}.xml"));
            fs::write(&xml, &dump.raw).map_err(|e| DeviceError::Io(xml.clone(), e))?;
            if let Some(png) = self.backend.screenshot()? {
                let path = dir.join(format!("{state_id}.png"));
                fs::write(&path, png).map_err(|e| DeviceError::Io(path.clone(), e))?;
                screenshot_ref = Some(PathBuf::from(STATES_DIR).join(format!("{state_id}.png")));
            }
        }
        let description = describe_widgets(&widgets);
        debug!(state_id, widgets = widgets.len(), "perceived");
        self.history.push_state(GuiState {
            state_id,
            widgets,
            description,
            screenshot_ref,
        });
        self.latest()
    }

    /// [`perceive`](Self::perceive), retrying once after the backend's
    /// settle delay when the screen is empty.
    pub fn perceive_with_retry(&mut self) -> Result<&GuiState, DeviceError> {
        match self.perceive() {
            Err(DeviceError::EmptyScreen) => {
                warn!("empty screen, retrying once");
                thread::sleep(self.backend.empty_retry_delay());
                self.perceive()
            }
            Err(e) => Err(e),
            Ok(_) => self.latest(),
        }
    }

    /// Performs an event instruction against the latest state. The caller
    /// re-perceives afterwards.
    pub fn execute(
        &mut self,
        instruction: &Instruction,
        logic_step: Option<usize>,
    ) -> Result<(), DeviceError> {
        let Instruction::Event {
            widget_id,
            action,
            value,
            source_state_id,
        } = instruction
        else {
            return Err(DeviceError::NotAnEvent);
        };
        let latest = self.latest()?.state_id;
        if *source_state_id != latest {
            return Err(DeviceError::StaleWidget {
                source_state: *source_state_id,
                latest,
            });
        }
        let target = self.history.resolve(latest, *widget_id)?.clone();
        if !target.supports(*action) {
            return Err(DeviceError::ActionUnsupported {
                action: *action,
                widget_id: *widget_id,
            });
        }
        let gesture = gesture_for(*action, &target.bounds, value.as_deref())?;
        info!(state = latest, widget = *widget_id, %action, name = %target.attrs.display_name(), "execute");
        self.backend.perform(&gesture)?;
        thread::sleep(self.backend.settle_delay());
        self.history.record(ExecutedAction {
            instruction: instruction.clone(),
            target,
            logic_step,
            verdict: None,
        })
    }

    /// Checks an assertion against the latest state and records the verdict.
    /// The target is the widget the instruction indexes in its source state,
    /// which for disappearance checks is an earlier state found by
    /// backtracking.
    pub fn check_assertion(
        &mut self,
        instruction: &Instruction,
        logic_step: Option<usize>,
    ) -> Result<bool, DeviceError> {
        let Instruction::Assertion {
            widget_id,
            condition,
            source_state_id,
        } = instruction
        else {
            return Err(DeviceError::NotAnAssertion);
        };
        let target = self
            .history
            .resolve(*source_state_id, *widget_id)
            .map_err(|_| {
                DeviceError::AssertionTargetUnresolved(format!(
                    "widget {widget_id} of state {source_state_id}"
                ))
            })?
            .clone();
        let current = self.latest()?;
        let present = current
            .widgets
            .iter()
            .any(|w| w.attrs.matches(&target.attrs));
        let verdict = match condition {
            Condition::Exists => present,
            Condition::NotExists => !present,
        };
        info!(state = current.state_id, condition = condition.as_str(), name = %target.attrs.display_name(), verdict, "assert");
        self.history.record(ExecutedAction {
            instruction: instruction.clone(),
            target,
            logic_step,
            verdict: Some(verdict),
        })?;
        Ok(verdict)
    }
}
