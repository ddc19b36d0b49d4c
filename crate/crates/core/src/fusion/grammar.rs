//! Line grammar for business logic steps:
//!
//! ```text
//! (Event) <Action> a widget <Widget> [with <Value>]
//! (Assertion) Identify a widget <Widget> (in the state | not in the state)
//! ```
//!
//! A leading `Step k:` is optional. The phrasing decides the kind: an
//! "Identify a widget ..." line is an assertion whatever its tag says.

use std::sync::LazyLock;

use regex::Regex;

use crate::model::{ActionKind, Condition, LogicStep, StepKind};

static STEP_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:step\s*\d+\s*[:.)\-]|\d+\s*[.)])\s*").unwrap());
static TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\((event|assertion)\)\s*").unwrap());
static A_WIDGET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\ba widget\b\s*").unwrap());
static XPATH_EXPR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?:^|[\s("])//[\w*@]"#).unwrap());
static FILE_PATH: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:^|[\s(])(?:/[\w.\-]+){2,}|\b[\w\-]+\.(?:java|kt|py|js|ts|xml|rs|json|sh|apk)\b|\b[a-z]:\\").unwrap()
});

/// Why a single line failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineError {
    Format(String),
    UnknownAction(String),
    ContainsCode(String),
}

/// A logic step decomposed into its grammar slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedStep {
    pub kind: StepKind,
    pub action: Option<ActionKind>,
    pub condition: Option<Condition>,
    /// Full `<Widget>` slot, e.g. `"search" or "url" in the search bar`.
    pub widget: String,
    /// Quoted names inside the widget slot, or the whole slot when unquoted.
    pub widget_names: Vec<String>,
    pub value: Option<String>,
    /// Normalized step text with the tag matching the phrasing.
    pub phrase: String,
}

impl ParsedStep {
    pub fn to_logic_step(&self) -> LogicStep {
        LogicStep {
            kind: self.kind,
            phrase: self.phrase.clone(),
        }
    }
}

/// Maps an action phrase to an [`ActionKind`] via the synonym table.
pub fn action_synonym(words: &str) -> Option<ActionKind> {
    let w = words
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    Some(match w.as_str() {
        "click" | "tap" => ActionKind::Click,
        "edit" | "enter" | "type" => ActionKind::Edit,
        "swipe left" => ActionKind::SwipeLeft,
        "swipe right" => ActionKind::SwipeRight,
        "swipe up" => ActionKind::SwipeUp,
        "swipe down" => ActionKind::SwipeDown,
        _ => return None,
    })
}

fn normalize_quotes(s: &str) -> String {
    s.replace("``", "\"")
        .replace("''", "\"")
        .replace(['\u{201c}', '\u{201d}'], "\"")
}

/// Detects code, XPath, driver calls and file paths.
pub fn code_marker(line: &str) -> Option<String> {
    let lower = line.to_lowercase();
    for marker in ["```", "xpath", "driver."] {
        if lower.contains(marker) {
            return Some(marker.to_string());
        }
    }
    XPATH_EXPR
        .find(line)
        .or_else(|| FILE_PATH.find(line))
        .map(|m| m.as_str().trim().to_string())
}

fn starts_with_ci(s: &str, prefix: &str) -> bool {
    s.get(..prefix.len())
        .is_some_and(|p| p.eq_ignore_ascii_case(prefix))
}

fn ends_with_ci(s: &str, suffix: &str) -> bool {
    s.len() >= suffix.len()
        && s.get(s.len() - suffix.len()..)
            .is_some_and(|p| p.eq_ignore_ascii_case(suffix))
}

/// Byte offsets of `needle` (ASCII, case-insensitive) outside double quotes.
fn unquoted_matches(hay: &str, needle: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut in_quote = false;
    for (i, c) in hay.char_indices() {
        if c == '"' {
            in_quote = !in_quote;
        } else if !in_quote && starts_with_ci(&hay[i..], needle) {
            out.push(i);
        }
    }
    out
}

fn quoted_names(widget: &str) -> Vec<String> {
    let names: Vec<String> = widget
        .split('"')
        .enumerate()
        .filter(|(i, s)| i % 2 == 1 && !s.trim().is_empty())
        .map(|(_, s)| s.trim().to_string())
        .collect();
    if names.is_empty() {
        vec![widget.trim().to_string()]
    } else {
        names
    }
}

fn unquote(s: &str) -> String {
    let t = s.trim();
    t.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(t)
        .trim()
        .to_string()
}

/// Parses one logic line.
pub fn parse_line(line: &str) -> Result<ParsedStep, LineError> {
    if let Some(marker) = code_marker(line) {
        return Err(LineError::ContainsCode(marker));
    }
    let line = normalize_quotes(line.trim());
    let rest = STEP_PREFIX.replace(&line, "");
    let Some(tag) = TAG.find(&rest) else {
        return Err(LineError::Format(
            "missing (Event) or (Assertion) tag".into(),
        ));
    };
    let body = rest[tag.end()..]
        .trim()
        .trim_end_matches('.')
        .trim()
        .to_string();

    if starts_with_ci(&body, "identify a widget") {
        let slot = body["identify a widget".len()..].trim();
        let (condition, cut) = if ends_with_ci(slot, "not in the state") {
            (Condition::NotExists, "not in the state".len())
        } else if ends_with_ci(slot, "in the state") {
            (Condition::Exists, "in the state".len())
        } else {
            return Err(LineError::Format(
                "assertion must end with \"in the state\" or \"not in the state\"".into(),
            ));
        };
        let widget = slot[..slot.len() - cut].trim().to_string();
        if widget.is_empty() {
            return Err(LineError::Format("assertion names no widget".into()));
        }
        return Ok(ParsedStep {
            kind: StepKind::Assertion,
            action: None,
            condition: Some(condition),
            widget_names: quoted_names(&widget),
            phrase: format!(
                "(Assertion) Identify a widget {widget} {}",
                condition.phrase()
            ),
            widget,
            value: None,
        });
    }

    let Some(aw) = A_WIDGET.find(&body) else {
        return Err(LineError::Format(
            "expected \"<Action> a widget <Widget>\"".into(),
        ));
    };
    let verb = body[..aw.start()].trim();
    if verb.is_empty() {
        return Err(LineError::Format("event names no action".into()));
    }
    let action = action_synonym(verb).ok_or_else(|| LineError::UnknownAction(verb.to_string()))?;
    let slot = body[aw.end()..].trim();
    let (widget, value) = match unquoted_matches(slot, " with ").last() {
        Some(&at) => (
            slot[..at].trim().to_string(),
            Some(unquote(&slot[at + " with ".len()..])),
        ),
        None => (slot.to_string(), None),
    };
    if widget.is_empty() {
        return Err(LineError::Format("event names no widget".into()));
    }
    if matches!(&value, Some(v) if v.is_empty()) {
        return Err(LineError::Format("empty value after \"with\"".into()));
    }
    if action.requires_value() && value.is_none() {
        return Err(LineError::Format("edit step needs \"with <Value>\"".into()));
    }
    let phrase = match &value {
        Some(v) => format!("(Event) {verb} a widget {widget} with \"{v}\""),
        None => format!("(Event) {verb} a widget {widget}"),
    };
    Ok(ParsedStep {
        kind: StepKind::Event,
        action: Some(action),
        condition: None,
        widget_names: quoted_names(&widget),
        widget,
        value,
        phrase,
    })
}

/// Parses a stored logic step back into its slots.
pub fn parse_logic_step(step: &LogicStep) -> Result<ParsedStep, LineError> {
    parse_line(&step.phrase)
}
