use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::widget::WidgetDescriptor;

/// One perceived screen. `widgets[i]` carries widget id `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuiState {
    pub state_id: u64,
    pub widgets: Vec<WidgetDescriptor>,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screenshot_ref: Option<PathBuf>,
}

impl GuiState {
    pub fn widget(&self, widget_id: usize) -> Option<&WidgetDescriptor> {
        self.widgets.get(widget_id)
    }
}

/// Sorts widgets top-left to bottom-right: by top, then left, then right,
/// then original traversal position (the sort is stable).
pub fn spatial_order(mut widgets: Vec<WidgetDescriptor>) -> Vec<WidgetDescriptor> {
    widgets.sort_by_key(|w| (w.bounds.top, w.bounds.left, w.bounds.right));
    widgets
}

/// Renders the structured state description, one line per widget in id order.
pub fn describe_widgets(widgets: &[WidgetDescriptor]) -> String {
    widgets
        .iter()
        .enumerate()
        .map(|(id, w)| {
            let ops: Vec<&str> = w.supported_ops.iter().map(|a| a.as_str()).collect();
            format!(
                "widget {id}: text='{}' content-desc='{}' resource-id='{}' ops=[{}]",
                w.attrs.text,
                w.attrs.content_desc,
                w.attrs.resource_id,
                ops.join(", ")
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}
