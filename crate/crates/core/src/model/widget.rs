use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Operations a widget can receive or a test event can perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Click,
    Edit,
    SwipeLeft,
    SwipeRight,
    SwipeUp,
    SwipeDown,
    /// System back key; not bound to a widget.
    Back,
}

impl ActionKind {
    pub const ALL: [ActionKind; 7] = [
        ActionKind::Click,
        ActionKind::Edit,
        ActionKind::SwipeLeft,
        ActionKind::SwipeRight,
        ActionKind::SwipeUp,
        ActionKind::SwipeDown,
        ActionKind::Back,
    ];

    pub const SWIPES: [ActionKind; 4] = [
        ActionKind::SwipeLeft,
        ActionKind::SwipeRight,
        ActionKind::SwipeUp,
        ActionKind::SwipeDown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Click => "click",
            ActionKind::Edit => "edit",
            ActionKind::SwipeLeft => "swipe_left",
            ActionKind::SwipeRight => "swipe_right",
            ActionKind::SwipeUp => "swipe_up",
            ActionKind::SwipeDown => "swipe_down",
            ActionKind::Back => "back",
        }
    }

    /// Verb used when a step is rendered as natural language ("Swipe right a widget ...").
    pub fn verb(self) -> &'static str {
        match self {
            ActionKind::Click => "Click",
            ActionKind::Edit => "Edit",
            ActionKind::SwipeLeft => "Swipe left",
            ActionKind::SwipeRight => "Swipe right",
            ActionKind::SwipeUp => "Swipe up",
            ActionKind::SwipeDown => "Swipe down",
            ActionKind::Back => "Press back",
        }
    }

    pub fn requires_value(self) -> bool {
        self == ActionKind::Edit
    }

    pub fn is_swipe(self) -> bool {
        Self::SWIPES.contains(&self)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        ActionKind::ALL
            .into_iter()
            .find(|a| a.as_str() == key)
            .ok_or_else(|| ModelError::UnknownAction(s.to_string()))
    }
}

/// Screen rectangle in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct Bounds {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Bounds {
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        Self {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.left <= self.right && self.top <= self.bottom
    }

    pub fn width(&self) -> i32 {
        self.right - self.left
    }

    pub fn height(&self) -> i32 {
        self.bottom - self.top
    }

    pub fn center(&self) -> (i32, i32) {
        (self.left + self.width() / 2, self.top + self.height() / 2)
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.left && x <= self.right && y >= self.top && y <= self.bottom
    }
}

impl From<[i32; 4]> for Bounds {
    fn from(v: [i32; 4]) -> Self {
        Bounds::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Bounds> for [i32; 4] {
    fn from(b: Bounds) -> Self {
        [b.left, b.top, b.right, b.bottom]
    }
}

/// The three semantic attributes that name a widget. An empty string means
/// the attribute is absent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WidgetAttrs {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub resource_id: String,
    #[serde(default)]
    pub content_desc: String,
}

impl WidgetAttrs {
    pub fn new(
        text: impl Into<String>,
        content_desc: impl Into<String>,
        resource_id: impl Into<String>,
    ) -> Self {
        Self {
            text: text.into(),
            content_desc: content_desc.into(),
            resource_id: resource_id.into(),
        }
    }

    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            ..Self::default()
        }
    }

    pub fn resource_id(rid: impl Into<String>) -> Self {
        Self {
            resource_id: rid.into(),
            ..Self::default()
        }
    }

    pub fn content_desc(cd: impl Into<String>) -> Self {
        Self {
            content_desc: cd.into(),
            ..Self::default()
        }
    }

    /// True when at least one attribute carries a non-blank value.
    pub fn is_describable(&self) -> bool {
        self.values().any(|v| !v.trim().is_empty())
    }

    /// Attribute values in (text, content_desc, resource_id) order.
    pub fn values(&self) -> impl Iterator<Item = &str> {
        [
            self.text.as_str(),
            self.content_desc.as_str(),
            self.resource_id.as_str(),
        ]
        .into_iter()
    }

    pub fn canonical(&self) -> WidgetAttrs {
        WidgetAttrs {
            text: canonical_text(&self.text),
            content_desc: canonical_text(&self.content_desc),
            resource_id: canonical_text(&self.resource_id),
        }
    }

    /// Widget identity rule: the two widgets share at least one equal,
    /// non-empty canonical attribute (attribute-for-attribute).
    pub fn matches(&self, other: &WidgetAttrs) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        (!a.text.is_empty() && a.text == b.text)
            || (!a.content_desc.is_empty() && a.content_desc == b.content_desc)
            || (!a.resource_id.is_empty() && a.resource_id == b.resource_id)
    }

    /// Human-facing name: text, else content-desc, else the resource-id with
    /// underscores turned into spaces.
    pub fn display_name(&self) -> String {
        if !self.text.trim().is_empty() {
            self.text.trim().to_string()
        } else if !self.content_desc.trim().is_empty() {
            self.content_desc.trim().to_string()
        } else {
            self.resource_id.trim().replace('_', " ")
        }
    }
}

/// Trim, collapse interior whitespace runs and lowercase.
pub fn canonical_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Alphanumeric-only lowercase key, used to match free-form phrases such as
/// "sample to do" or "todo title" against widget attributes.
pub fn phrase_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// A perceived widget: its semantic attributes, supported operations and layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetDescriptor {
    #[serde(flatten)]
    pub attrs: WidgetAttrs,
    #[serde(default)]
    pub supported_ops: BTreeSet<ActionKind>,
    pub bounds: Bounds,
}

impl WidgetDescriptor {
    pub fn new(
        attrs: WidgetAttrs,
        ops: impl IntoIterator<Item = ActionKind>,
        bounds: Bounds,
    ) -> Self {
        Self {
            attrs,
            supported_ops: ops.into_iter().collect(),
            bounds,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.attrs.is_describable() {
            return Err(ModelError::UndescribableWidget);
        }
        if !self.bounds.is_valid() {
            return Err(ModelError::InvalidBounds(self.bounds));
        }
        Ok(())
    }

    pub fn supports(&self, action: ActionKind) -> bool {
        action == ActionKind::Back || self.supported_ops.contains(&action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_parse_accepts_spacing_variants() {
        assert_eq!(
            "swipe right".parse::<ActionKind>().unwrap(),
            ActionKind::SwipeRight
        );
        assert_eq!(
            "Swipe-Left".parse::<ActionKind>().unwrap(),
            ActionKind::SwipeLeft
        );
        assert_eq!("EDIT".parse::<ActionKind>().unwrap(), ActionKind::Edit);
        assert!("hover".parse::<ActionKind>().is_err());
    }

    #[test]
    fn matches_needs_one_shared_nonempty_attribute() {
        let a = WidgetAttrs::new("Add", "", "fab");
        assert!(a.matches(&WidgetAttrs::text(" add ")));
        assert!(a.matches(&WidgetAttrs::resource_id("FAB")));
        assert!(!a.matches(&WidgetAttrs::content_desc("add")));
        assert!(!WidgetAttrs::default().matches(&WidgetAttrs::default()));
    }

    #[test]
    fn display_name_falls_back_to_resource_id() {
        assert_eq!(
            WidgetAttrs::resource_id("add_todo_item_button").display_name(),
            "add todo item button"
        );
        assert_eq!(
            WidgetAttrs::new("", "Finish", "fab").display_name(),
            "Finish"
        );
    }

    #[test]
    fn phrase_key_ignores_spacing_and_punctuation() {
        assert_eq!(phrase_key("Sample to-do"), phrase_key("sample todo"));
        assert_eq!(phrase_key("todo_title"), "todotitle");
    }

    #[test]
    fn descriptor_validation() {
        let d = WidgetDescriptor::new(WidgetAttrs::default(), [], Bounds::new(0, 0, 1, 1));
        assert!(matches!(d.validate(), Err(ModelError::UndescribableWidget)));
        let d = WidgetDescriptor::new(WidgetAttrs::text("x"), [], Bounds::new(5, 0, 1, 1));
        assert!(matches!(d.validate(), Err(ModelError::InvalidBounds(_))));
    }
}
