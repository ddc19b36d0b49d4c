//! uiautomator hierarchy dumps: parsing into widget descriptors and
//! rendering simulator screens in the same format.

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::DeviceError;
use crate::model::{ActionKind, Bounds, WidgetAttrs, WidgetDescriptor};

/// Parses `[l,t][r,b]`.
pub fn parse_bounds(s: &str) -> Option<Bounds> {
    let nums: Vec<i32> = s
        .split(|c: char| !(c.is_ascii_digit() || c == '-'))
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()
        .ok()?;
    match nums[..] {
        [l, t, r, b] => Some(Bounds::new(l, t, r, b)),
        _ => None,
    }
}

/// Drops the `package:id/` prefix Android puts on resource ids.
pub fn strip_id_prefix(rid: &str) -> &str {
    rid.split_once(":id/").map_or(rid, |(_, name)| name)
}

struct NodeAttrs {
    text: String,
    content_desc: String,
    resource_id: String,
    class: String,
    bounds: Option<Bounds>,
    clickable: bool,
    scrollable: bool,
}

fn read_node(e: &BytesStart<'_>) -> Result<NodeAttrs, DeviceError> {
    let mut n = NodeAttrs {
        text: String::new(),
        content_desc: String::new(),
        resource_id: String::new(),
        class: String::new(),
        bounds: None,
        clickable: false,
        scrollable: false,
    };
    for attr in e.attributes() {
        let attr = attr.map_err(|e| DeviceError::MalformedDump(e.to_string()))?;
        let value = attr
            .unescape_value()
            .map_err(|e| DeviceError::MalformedDump(e.to_string()))?
            .into_owned();
        match attr.key.as_ref() {
            b"text" => n.text = value,
            b"content-desc" => n.content_desc = value,
            b"resource-id" => n.resource_id = strip_id_prefix(&value).to_string(),
            b"class" => n.class = value,
            b"bounds" => n.bounds = parse_bounds(&value),
            b"clickable" | b"long-clickable" => n.clickable |= value == "true",
            b"scrollable" => n.scrollable = value == "true",
            _ => {}
        }
    }
    Ok(n)
}

fn node_widget(node: NodeAttrs, inherited_scroll: bool) -> Option<WidgetDescriptor> {
    let mut ops = Vec::new();
    if node.clickable {
        ops.push(ActionKind::Click);
    }
    if node.class.ends_with("EditText") {
        ops.extend([ActionKind::Click, ActionKind::Edit]);
    }
    if node.scrollable || inherited_scroll {
        ops.extend(ActionKind::SWIPES);
    }
    let bounds = node.bounds?;
    Some(WidgetDescriptor::new(
        WidgetAttrs::new(node.text, node.content_desc, node.resource_id),
        ops,
        bounds,
    ))
}

/// Parses a `uiautomator dump` document into descriptors in traversal order.
///
/// Operations are inferred from node flags: clickable nodes support click,
/// `EditText` nodes support edit, and scrollable nodes and their
/// descendants support the four swipes (list rows are usually swiped
/// through their scrollable container). Nodes without bounds are dropped.
pub fn parse_hierarchy(xml: &str) -> Result<Vec<WidgetDescriptor>, DeviceError> {
    let mut reader = Reader::from_str(xml);
    let mut scroll_stack: Vec<bool> = Vec::new();
    let mut out = Vec::new();
    loop {
        let event = reader.read_event().map_err(|e| {
            DeviceError::MalformedDump(format!("at byte {}: {e}", reader.buffer_position()))
        })?;
        let inherited = scroll_stack.iter().any(|s| *s);
        match event {
            Event::Start(e) if e.name().as_ref() == b"node" => {
                let node = read_node(&e)?;
                scroll_stack.push(node.scrollable);
                out.extend(node_widget(node, inherited));
            }
            Event::Empty(e) if e.name().as_ref() == b"node" => {
                out.extend(node_widget(read_node(&e)?, inherited));
            }
            Event::End(e) if e.name().as_ref() == b"node" => {
                scroll_stack.pop();
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

fn class_for(w: &WidgetDescriptor) -> &'static str {
    if w.supports(ActionKind::Edit) {
        "android.widget.EditText"
    } else if w.supports(ActionKind::Click) {
        "android.widget.Button"
    } else {
        "android.widget.TextView"
    }
}

/// Renders widgets as a flat uiautomator-style document. Used by the
/// simulator so that every backend leaves the same kind of audit trail.
pub fn render_hierarchy(package: &str, widgets: &[WidgetDescriptor]) -> String {
    let mut xml = String::from(
        "<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>\n<hierarchy rotation=\"0\">\n",
    );
    for (i, w) in widgets.iter().enumerate() {
        let rid = if w.attrs.resource_id.is_empty() {
            String::new()
        } else {
            format!("{package}:id/{}", w.attrs.resource_id)
        };
        let b = &w.bounds;
        xml.push_str(&format!(
            "  <node index=\"{i}\" text=\"{}\" resource-id=\"{}\" class=\"{}\" package=\"{}\" content-desc=\"{}\" \
             clickable=\"{}\" scrollable=\"{}\" bounds=\"[{},{}][{},{}]\" />\n",
            escape(w.attrs.text.as_str()),
            escape(rid.as_str()),
            class_for(w),
            escape(package),
            escape(w.attrs.content_desc.as_str()),
            w.supports(ActionKind::Click),
            w.supported_ops.iter().any(|a| a.is_swipe()),
            b.left,
            b.top,
            b.right,
            b.bottom
        ));
    }
    xml.push_str("</hierarchy>\n");
    xml
}
