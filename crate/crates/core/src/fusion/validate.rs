use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::grammar::{parse_line, LineError, ParsedStep};
use crate::knowledge::tokenize;
use crate::model::{BusinessLogic, TestCase, TestStep};

pub const MIN_LOGIC_STEPS: usize = 3;
pub const MAX_LOGIC_STEPS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    Format,
    TooShort,
    TooLong,
    ContainsCode,
    IrrelevantStep,
    UnknownAction,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::Format => "format",
            ViolationCode::TooShort => "too_short",
            ViolationCode::TooLong => "too_long",
            ViolationCode::ContainsCode => "contains_code",
            ViolationCode::IrrelevantStep => "irrelevant_step",
            ViolationCode::UnknownAction => "unknown_action",
        }
    }
}

/// A rule the fused output broke. `line_no` is 1-based; 0 marks a
/// whole-output violation such as the step count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub line_no: usize,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, line_no: usize, message: impl Into<String>) -> Self {
        Self {
            code,
            line_no,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line_no == 0 {
            write!(f, "{}: {}", self.code.as_str(), self.message)
        } else {
            write!(
                f,
                "line {}: {}: {}",
                self.line_no,
                self.code.as_str(),
                self.message
            )
        }
    }
}

const STOPWORDS: [&str; 31] = [
    "a", "an", "the", "of", "to", "in", "on", "for", "and", "or", "with", "widget", "button", "is",
    "it", "at", "by", "from", "as", "be", "this", "that", "its", "into", "state", "screen", "page",
    "app", "any", "some", "bar",
];

fn stem(word: &str) -> String {
    if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        word[..word.len() - 1].to_string()
    } else {
        word.to_string()
    }
}

/// Lowercase, non-stopword tokens of length two or more, with a trailing
/// plural `s` stripped.
pub fn content_words(text: &str) -> HashSet<String> {
    tokenize(text)
        .filter(|w| w.len() >= 2 && !STOPWORDS.contains(&w.as_str()))
        .map(|w| stem(&w))
        .collect()
}

/// Words a fused step may legitimately draw on.
pub fn relevance_vocabulary(
    requirement: &str,
    category: &str,
    cases: &[TestCase],
) -> HashSet<String> {
    let mut vocab = content_words(requirement);
    vocab.extend(content_words(category));
    for step in cases.iter().flat_map(|c| &c.steps) {
        for attr in step.widget().values() {
            vocab.extend(content_words(attr));
        }
        if let TestStep::Event { value: Some(v), .. } = step {
            vocab.extend(content_words(v));
        }
    }
    vocab
}

/// Structural and relevance checks on raw fusion output.
#[derive(Debug, Clone)]
pub struct LogicValidator {
    pub min_steps: usize,
    pub max_steps: usize,
    vocabulary: Option<HashSet<String>>,
}

impl Default for LogicValidator {
    fn default() -> Self {
        Self {
            min_steps: MIN_LOGIC_STEPS,
            max_steps: MAX_LOGIC_STEPS,
            vocabulary: None,
        }
    }
}

fn is_header(line: &str) -> bool {
    let l = line.trim_start().to_lowercase();
    l.starts_with("test knowledge for the functionality")
        || l.starts_with("example: test knowledge")
}

impl LogicValidator {
    /// Adds the lexical relevance rule: every step's widget and value slots
    /// must share a content word with `vocabulary`.
    pub fn with_relevance(mut self, vocabulary: HashSet<String>) -> Self {
        self.vocabulary = Some(vocabulary);
        self
    }

    /// Parses every line and reports all violations found.
    pub fn check(&self, raw: &str) -> Result<Vec<ParsedStep>, Vec<Violation>> {
        let mut steps = Vec::new();
        let mut violations = Vec::new();
        // Values typed by earlier steps may be checked by later ones.
        let mut typed = HashSet::new();
        for (i, line) in raw.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || is_header(line) {
                continue;
            }
            match parse_line(line) {
                Ok(step) => {
                    if let Some(vocab) = &self.vocabulary {
                        let mut words = content_words(&step.widget);
                        if let Some(v) = &step.value {
                            words.extend(content_words(v));
                        }
                        if words.is_disjoint(vocab) && words.is_disjoint(&typed) {
                            violations.push(Violation::new(
                                ViolationCode::IrrelevantStep,
                                line_no,
                                format!(
                                    "widget {} shares no words with the functionality or the related test cases",
                                    step.widget
                                ),
                            ));
                        }
                    }
                    if let Some(v) = &step.value {
                        typed.extend(content_words(v));
                    }
                    steps.push(step);
                }
                Err(LineError::Format(msg)) => {
                    violations.push(Violation::new(ViolationCode::Format, line_no, msg))
                }
                Err(LineError::UnknownAction(verb)) => violations.push(Violation::new(
                    ViolationCode::UnknownAction,
                    line_no,
                    format!("unknown action `{verb}`; use Click, Edit or Swipe left/right/up/down"),
                )),
                Err(LineError::ContainsCode(marker)) => violations.push(Violation::new(
                    ViolationCode::ContainsCode,
                    line_no,
                    format!("contains code or paths (`{marker}`)"),
                )),
            }
        }
        let counted = raw
            .lines()
            .filter(|l| !l.trim().is_empty() && !is_header(l))
            .count();
        if counted < self.min_steps {
            violations.push(Violation::new(
                ViolationCode::TooShort,
                0,
                format!("{counted} steps, at least {} required", self.min_steps),
            ));
        }
        if counted > self.max_steps {
            violations.push(Violation::new(
                ViolationCode::TooLong,
                0,
                format!("{counted} steps, at most {} allowed", self.max_steps),
            ));
        }
        if violations.is_empty() {
            Ok(steps)
        } else {
            Err(violations)
        }
    }

    pub fn validate(
        &self,
        functionality: &str,
        raw: &str,
    ) -> Result<BusinessLogic, Vec<Violation>> {
        let steps = self.check(raw)?;
        Ok(BusinessLogic {
            functionality: functionality.to_string(),
            steps: steps.iter().map(ParsedStep::to_logic_step).collect(),
        })
    }
}

/// Structural validation with the default step bounds and no relevance rule.
pub fn validate_logic(raw: &str) -> Result<Vec<ParsedStep>, Vec<Violation>> {
    LogicValidator::default().check(raw)
}
