use std::time::Duration;

use crate::model::{ActionKind, Bounds, WidgetDescriptor};

use super::DeviceError;

/// Raw output of a hierarchy dump: the widgets in traversal order plus the
/// backend's verbatim text, kept for audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyDump {
    pub widgets: Vec<WidgetDescriptor>,
    pub raw: String,
}

/// A low-level input gesture in screen coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gesture {
    Tap {
        x: i32,
        y: i32,
    },
    /// Focus the field at (x, y), then type `text`.
    Input {
        x: i32,
        y: i32,
        text: String,
    },
    Swipe {
        from: (i32, i32),
        to: (i32, i32),
        duration_ms: u32,
    },
    Back,
}

pub const SWIPE_DURATION_MS: u32 = 300;

/// Translates an action on a widget into a gesture. Clicks tap the centre,
/// edits focus the centre and type, swipes travel from 20% to 80% of the
/// widget along the axis through its centre.
pub fn gesture_for(
    action: ActionKind,
    bounds: &Bounds,
    value: Option<&str>,
) -> Result<Gesture, DeviceError> {
    let (cx, cy) = bounds.center();
    let x20 = bounds.left + bounds.width() / 5;
    let x80 = bounds.left + bounds.width() * 4 / 5;
    let y20 = bounds.top + bounds.height() / 5;
    let y80 = bounds.top + bounds.height() * 4 / 5;
    let swipe = |from, to| Gesture::Swipe {
        from,
        to,
        duration_ms: SWIPE_DURATION_MS,
    };
    Ok(match action {
        ActionKind::Click => Gesture::Tap { x: cx, y: cy },
        ActionKind::Edit => Gesture::Input {
            x: cx,
            y: cy,
            text: value.ok_or(DeviceError::MissingValue)?.to_string(),
        },
        ActionKind::SwipeRight => swipe((x20, cy), (x80, cy)),
        ActionKind::SwipeLeft => swipe((x80, cy), (x20, cy)),
        ActionKind::SwipeDown => swipe((cx, y20), (cx, y80)),
        ActionKind::SwipeUp => swipe((cx, y80), (cx, y20)),
        ActionKind::Back => Gesture::Back,
    })
}

/// Direction of a swipe gesture, if it is one.
pub fn swipe_direction(from: (i32, i32), to: (i32, i32)) -> ActionKind {
    let dx = to.0 - from.0;
    let dy = to.1 - from.1;
    if dx.abs() >= dy.abs() {
        if dx >= 0 {
            ActionKind::SwipeRight
        } else {
            ActionKind::SwipeLeft
        }
    } else if dy >= 0 {
        ActionKind::SwipeDown
    } else {
        ActionKind::SwipeUp
    }
}

/// The device driver behind a session.
pub trait DeviceBackend: Send {
    fn dump_hierarchy(&mut self) -> Result<HierarchyDump, DeviceError>;

    /// PNG bytes of the current screen, when the backend can capture one.
    fn screenshot(&mut self) -> Result<Option<Vec<u8>>, DeviceError>;

    fn perform(&mut self, gesture: &Gesture) -> Result<(), DeviceError>;

    fn current_app(&mut self) -> Result<String, DeviceError>;

    /// Wait after an action before perceiving again.
    fn settle_delay(&self) -> Duration {
        Duration::ZERO
    }

    /// Wait before retrying a perception that saw an empty screen.
    fn empty_retry_delay(&self) -> Duration {
        Duration::ZERO
    }
}
