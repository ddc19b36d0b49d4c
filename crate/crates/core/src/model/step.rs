use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::widget::{canonical_text, ActionKind, WidgetAttrs};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Exists,
    NotExists,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Exists => "exists",
            Condition::NotExists => "not_exists",
        }
    }

    /// Trailing phrase used in "Identify a widget ... <phrase>".
    pub fn phrase(self) -> &'static str {
        match self {
            Condition::Exists => "in the state",
            Condition::NotExists => "not in the state",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Event,
    Assertion,
}

impl StepKind {
    pub fn label(self) -> &'static str {
        match self {
            StepKind::Event => "Event",
            StepKind::Assertion => "Assertion",
        }
    }
}

/// One step of a functional test case.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStep", into = "RawStep")]
pub enum TestStep {
    Event {
        action: ActionKind,
        widget: WidgetAttrs,
        value: Option<String>,
    },
    Assertion {
        condition: Condition,
        widget: WidgetAttrs,
    },
}

impl TestStep {
    pub fn click(widget: WidgetAttrs) -> Self {
        TestStep::Event {
            action: ActionKind::Click,
            widget,
            value: None,
        }
    }

    pub fn event(action: ActionKind, widget: WidgetAttrs) -> Self {
        TestStep::Event {
            action,
            widget,
            value: None,
        }
    }

    pub fn edit(widget: WidgetAttrs, value: impl Into<String>) -> Self {
        TestStep::Event {
            action: ActionKind::Edit,
            widget,
            value: Some(value.into()),
        }
    }

    pub fn exists(widget: WidgetAttrs) -> Self {
        TestStep::Assertion {
            condition: Condition::Exists,
            widget,
        }
    }

    pub fn not_exists(widget: WidgetAttrs) -> Self {
        TestStep::Assertion {
            condition: Condition::NotExists,
            widget,
        }
    }

    pub fn kind(&self) -> StepKind {
        match self {
            TestStep::Event { .. } => StepKind::Event,
            TestStep::Assertion { .. } => StepKind::Assertion,
        }
    }

    pub fn widget(&self) -> &WidgetAttrs {
        match self {
            TestStep::Event { widget, .. } | TestStep::Assertion { widget, .. } => widget,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            TestStep::Event {
                action,
                widget,
                value,
            } => {
                if action.requires_value() && value.is_none() {
                    return Err(ModelError::MissingValue);
                }
                if !action.requires_value() && value.is_some() {
                    return Err(ModelError::UnexpectedValue(*action));
                }
                if *action != ActionKind::Back && !widget.is_describable() {
                    return Err(ModelError::UndescribableWidget);
                }
            }
            TestStep::Assertion { widget, .. } => {
                if !widget.is_describable() {
                    return Err(ModelError::UndescribableWidget);
                }
            }
        }
        Ok(())
    }

    /// Natural-language rendering used in prompts:
    /// `(Event) Edit a widget "title" with "sample todo"`.
    pub fn render(&self) -> String {
        match self {
            TestStep::Event {
                action: ActionKind::Back,
                ..
            } => "(Event) Press back".to_string(),
            TestStep::Event {
                action,
                widget,
                value,
            } => {
                let mut line = format!(
                    "(Event) {} a widget \"{}\"",
                    action.verb(),
                    widget.display_name()
                );
                if let Some(v) = value {
                    line.push_str(&format!(" with \"{v}\""));
                }
                line
            }
            TestStep::Assertion { condition, widget } => format!(
                "(Assertion) Identify a widget \"{}\" {}",
                widget.display_name(),
                condition.phrase()
            ),
        }
    }
}

impl fmt::Display for TestStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Trim and case-fold every text field; blank attributes become absent.
pub fn canonicalize_step(step: &TestStep) -> TestStep {
    match step {
        TestStep::Event {
            action,
            widget,
            value,
        } => TestStep::Event {
            action: *action,
            widget: widget.canonical(),
            value: value.as_deref().map(canonical_text),
        },
        TestStep::Assertion { condition, widget } => TestStep::Assertion {
            condition: *condition,
            widget: widget.canonical(),
        },
    }
}

/// Step equivalence: same kind, same action/value/condition after
/// canonicalization, and widgets sharing one equal non-empty attribute.
pub fn steps_equal(a: &TestStep, b: &TestStep) -> bool {
    match (canonicalize_step(a), canonicalize_step(b)) {
        (
            TestStep::Event {
                action: aa,
                widget: wa,
                value: va,
            },
            TestStep::Event {
                action: ab,
                widget: wb,
                value: vb,
            },
        ) => aa == ab && va == vb && (aa == ActionKind::Back || wa.matches(&wb)),
        (
            TestStep::Assertion {
                condition: ca,
                widget: wa,
            },
            TestStep::Assertion {
                condition: cb,
                widget: wb,
            },
        ) => ca == cb && wa.matches(&wb),
        _ => false,
    }
}

/// Wire form of a step; absent optional fields are omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    kind: StepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action: Option<ActionKind>,
    #[serde(default)]
    widget: WidgetAttrs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<Condition>,
}

impl TryFrom<RawStep> for TestStep {
    type Error = ModelError;

    fn try_from(raw: RawStep) -> Result<Self, Self::Error> {
        let step = match raw.kind {
            StepKind::Event => {
                if raw.condition.is_some() {
                    return Err(ModelError::MalformedStep(
                        "event carries a condition".into(),
                    ));
                }
                let action = raw
                    .action
                    .ok_or_else(|| ModelError::MalformedStep("event without action".into()))?;
                TestStep::Event {
                    action,
                    widget: raw.widget,
                    value: raw.value,
                }
            }
            StepKind::Assertion => {
                if raw.action.is_some() {
                    return Err(ModelError::MalformedStep(
                        "assertion carries an action".into(),
                    ));
                }
                if raw.value.is_some() {
                    return Err(ModelError::MalformedStep(
                        "assertion carries a value".into(),
                    ));
                }
                let condition = raw.condition.ok_or_else(|| {
                    ModelError::MalformedStep("assertion without condition".into())
                })?;
                TestStep::Assertion {
                    condition,
                    widget: raw.widget,
                }
            }
        };
        step.validate()?;
        Ok(step)
    }
}

impl From<TestStep> for RawStep {
    fn from(step: TestStep) -> Self {
        match step {
            TestStep::Event {
                action,
                widget,
                value,
            } => RawStep {
                kind: StepKind::Event,
                action: Some(action),
                widget,
                value,
                condition: None,
            },
            TestStep::Assertion { condition, widget } => RawStep {
                kind: StepKind::Assertion,
                action: None,
                widget,
                value: None,
                condition: Some(condition),
            },
        }
    }
}

/// An ordered functional test case for one app functionality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    #[serde(rename = "app")]
    pub app_id: String,
    pub category: String,
    pub steps: Vec<TestStep>,
}

impl TestCase {
    pub fn new(
        app_id: impl Into<String>,
        category: impl Into<String>,
        steps: Vec<TestStep>,
    ) -> Self {
        Self {
            app_id: app_id.into(),
            category: category.into(),
            steps,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.steps.is_empty() {
            return Err(ModelError::EmptyCase);
        }
        self.steps.iter().try_for_each(TestStep::validate)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let case: TestCase = serde_json::from_str(text)?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("test case serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ModelError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json_pretty() + "\n")
            .map_err(|e| ModelError::Io(path.to_path_buf(), e))
    }

    pub fn event_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.kind() == StepKind::Event)
            .count()
    }

    pub fn assertion_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.kind() == StepKind::Assertion)
            .count()
    }

    /// "Step k: (Event) ..." lines, 1-based.
    pub fn render_steps(&self) -> String {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| format!("Step {}: {}", i + 1, s.render()))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
