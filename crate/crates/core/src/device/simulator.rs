//! A deterministic app model driven by a transition table, used as the
//! default backend and as the test substrate.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::debug;

use super::backend::{swipe_direction, DeviceBackend, Gesture, HierarchyDump};
use super::hierarchy::render_hierarchy;
use super::DeviceError;
use crate::model::{canonical_text, ActionKind, Bounds, WidgetAttrs, WidgetDescriptor};

/// A widget as written in an app model file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetSpec {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub content_desc: String,
    #[serde(default)]
    pub resource_id: String,
    pub bounds: Bounds,
    #[serde(default)]
    pub ops: BTreeSet<ActionKind>,
}

impl WidgetSpec {
    pub fn attrs(&self) -> WidgetAttrs {
        WidgetAttrs::new(&self.text, &self.content_desc, &self.resource_id)
    }

    pub fn descriptor(&self) -> WidgetDescriptor {
        WidgetDescriptor::new(self.attrs(), self.ops.iter().copied(), self.bounds)
    }
}

/// Matches a widget when every non-empty field equals the widget's
/// attribute after canonicalization.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub text: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub content_desc: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub resource_id: String,
}

impl Selector {
    pub fn is_empty(&self) -> bool {
        [&self.text, &self.content_desc, &self.resource_id]
            .iter()
            .all(|s| s.trim().is_empty())
    }

    pub fn matches(&self, attrs: &WidgetAttrs) -> bool {
        let field = |want: &str, have: &str| {
            want.trim().is_empty() || canonical_text(want) == canonical_text(have)
        };
        !self.is_empty()
            && field(&self.text, &attrs.text)
            && field(&self.content_desc, &attrs.content_desc)
            && field(&self.resource_id, &attrs.resource_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    /// Ignored for `back`.
    #[serde(default)]
    pub selector: Selector,
    pub action: ActionKind,
    /// For edits: the typed text must equal this after canonicalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effects {
    #[serde(default)]
    pub add: Vec<WidgetSpec>,
    #[serde(default)]
    pub remove: Vec<Selector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub on: Trigger,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effects: Option<Effects>,
}

/// Screens, a transition table and an initial screen. Effects mutate the
/// widget list of the destination screen and persist for the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulatedApp {
    pub app_id: String,
    pub initial: String,
    pub states: BTreeMap<String, Vec<WidgetSpec>>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
}

impl SimulatedApp {
    pub fn from_json(text: &str) -> Result<Self, DeviceError> {
        let app: SimulatedApp =
            serde_json::from_str(text).map_err(|e| DeviceError::InvalidAppModel(e.to_string()))?;
        app.validate()?;
        Ok(app)
    }

    pub fn load(path: &Path) -> Result<Self, DeviceError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| DeviceError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text).map_err(|e| match e {
            DeviceError::InvalidAppModel(m) => {
                DeviceError::InvalidAppModel(format!("{}: {m}", path.display()))
            }
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = |m: String| Err(DeviceError::InvalidAppModel(m));
        if !self.states.contains_key(&self.initial) {
            return bad(format!("initial state `{}` is not defined", self.initial));
        }
        for (name, widgets) in &self.states {
            for w in widgets {
                if !w.bounds.is_valid() {
                    return bad(format!(
                        "state `{name}`: widget {:?} has invalid bounds",
                        w.attrs().display_name()
                    ));
                }
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            for end in [&t.from, &t.to] {
                if !self.states.contains_key(end) {
                    return bad(format!("transition {i}: state `{end}` is not defined"));
                }
            }
            if t.on.action != ActionKind::Back
                && !self.states[&t.from]
                    .iter()
                    .any(|w| t.on.selector.matches(&w.attrs()))
            {
                return bad(format!(
                    "transition {i}: selector matches no widget in `{}`",
                    t.from
                ));
            }
        }
        Ok(())
    }
}

/// Runs a [`SimulatedApp`]. Gestures are hit-tested against the current
/// screen; the smallest widget under the point that supports the action
/// receives it. A gesture that hits nothing is rejected. An action with no
/// matching transition leaves the screen unchanged.
#[derive(Debug, Clone)]
pub struct SimulatorBackend {
    app: SimulatedApp,
    screens: BTreeMap<String, Vec<WidgetSpec>>,
    current: String,
}

impl SimulatorBackend {
    pub fn new(app: SimulatedApp) -> Self {
        Self {
            screens: app.states.clone(),
            current: app.initial.clone(),
            app,
        }
    }

    pub fn current_screen(&self) -> &str {
        &self.current
    }

    fn widgets(&self) -> &[WidgetSpec] {
        &self.screens[&self.current]
    }

    fn hit(&self, x: i32, y: i32, action: ActionKind) -> Result<WidgetSpec, DeviceError> {
        self.widgets()
            .iter()
            .filter(|w| w.bounds.contains(x, y) && w.ops.contains(&action))
            .min_by_key(|w| i64::from(w.bounds.width()) * i64::from(w.bounds.height()))
            .cloned()
            .ok_or_else(|| {
                DeviceError::Rejected(format!("no widget supporting {action} at ({x}, {y})"))
            })
    }

    fn fire(&mut self, target: &WidgetSpec, action: ActionKind, value: Option<&str>) {
        let attrs = target.attrs();
        let found = self.app.transitions.iter().find(|t| {
            t.from == self.current
                && t.on.action == action
                && t.on.selector.matches(&attrs)
                && t.on.value.as_ref().is_none_or(|want| {
                    value.is_some_and(|v| canonical_text(v) == canonical_text(want))
                })
        });
        let Some(t) = found.cloned() else {
            debug!(screen = %self.current, %action, widget = %attrs.display_name(), "no transition");
            return;
        };
        debug!(from = %t.from, to = %t.to, %action, "transition");
        if let Some(effects) = &t.effects {
            let screen = self.screens.get_mut(&t.to).expect("validated");
            screen.retain(|w| !effects.remove.iter().any(|s| s.matches(&w.attrs())));
            screen.extend(effects.add.iter().cloned());
        }
        self.current = t.to;
    }
}

impl DeviceBackend for SimulatorBackend {
    fn dump_hierarchy(&mut self) -> Result<HierarchyDump, DeviceError> {
        let widgets: Vec<WidgetDescriptor> =
            self.widgets().iter().map(WidgetSpec::descriptor).collect();
        let raw = render_hierarchy(&self.app.app_id, &widgets);
        Ok(HierarchyDump { widgets, raw })
    }

    fn screenshot(&mut self) -> Result<Option<Vec<u8>>, DeviceError> {
        Ok(None)
    }

    fn perform(&mut self, gesture: &Gesture) -> Result<(), DeviceError> {
        match gesture {
            Gesture::Tap { x, y } => {
                let w = self.hit(*x, *y, ActionKind::Click)?;
                self.fire(&w, ActionKind::Click, None);
            }
            Gesture::Input { x, y, text } => {
                let w = self.hit(*x, *y, ActionKind::Edit)?;
                self.fire(&w, ActionKind::Edit, Some(text));
            }
            Gesture::Swipe { from, to, .. } => {
                let action = swipe_direction(*from, *to);
                let w = self.hit(from.0, from.1, action)?;
                self.fire(&w, action, None);
            }
            Gesture::Back => {
                if let Some(t) = self
                    .app
                    .transitions
                    .iter()
                    .find(|t| t.from == self.current && t.on.action == ActionKind::Back)
                {
                    self.current = t.to.clone();
                }
            }
        }
        Ok(())
    }

    fn current_app(&mut self) -> Result<String, DeviceError> {
        Ok(self.app.app_id.clone())
    }
}
