//! Functional summaries: the one-sentence retrieval key of every stored case.

use std::collections::HashMap;
use std::fmt;

use super::KnowledgeError;
use crate::llm::{
    render_prompt, with_feedback, ChatRequest, LlmError, LlmProvider, LlmSession, PromptContext,
    PromptRole,
};
use crate::model::TestCase;

pub const MAX_SUMMARY_WORDS: usize = 20;
pub const SUMMARY_ROUNDS: usize = 3;

const TECHNICAL_TERMS: [&str; 8] = [
    "```",
    "xpath",
    "//",
    "resource-id",
    "resource_id",
    "content-desc",
    "content_desc",
    "driver.",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SummaryViolation {
    Empty,
    MultiSentence,
    TooLong { words: usize },
    TechnicalTerm(String),
}

impl fmt::Display for SummaryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummaryViolation::Empty => write!(f, "empty: the summary is empty"),
            SummaryViolation::MultiSentence => write!(f, "multi-sentence: answer with exactly one sentence"),
            SummaryViolation::TooLong { words } => write!(
                f,
                "too long: {words} words, keep it to at most {MAX_SUMMARY_WORDS} (subject, verb and object)"
            ),
            SummaryViolation::TechnicalTerm(t) => {
                write!(f, "technical terms: `{t}` is not natural English, describe the functionality instead")
            }
        }
    }
}

/// Number of non-empty sentences. A sentence ends at a run of `.`, `!` or
/// `?` that is followed by whitespace or the end of text, or at a line break.
fn sentence_count(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut open = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i;
            while j < chars.len() && matches!(chars[j], '.' | '!' | '?') {
                j += 1;
            }
            if j == chars.len() || chars[j].is_whitespace() {
                count += usize::from(open);
                open = false;
            } else {
                open = true;
            }
            i = j;
            continue;
        }
        if c == '\n' {
            count += usize::from(open);
            open = false;
        } else if !c.is_whitespace() {
            open = true;
        }
        i += 1;
    }
    count + usize::from(open)
}

/// Checks a candidate summary; `Ok` means it is acceptable.
pub fn summary_valid(summary: &str) -> Result<(), Vec<SummaryViolation>> {
    let text = summary.trim();
    if text.is_empty() {
        return Err(vec![SummaryViolation::Empty]);
    }
    let mut violations = Vec::new();
    if sentence_count(text) > 1 {
        violations.push(SummaryViolation::MultiSentence);
    }
    let words = text.split_whitespace().count();
    if words > MAX_SUMMARY_WORDS {
        violations.push(SummaryViolation::TooLong { words });
    }
    let lower = text.to_lowercase();
    if let Some(term) = TECHNICAL_TERMS.iter().find(|t| lower.contains(*t)) {
        violations.push(SummaryViolation::TechnicalTerm(term.to_string()));
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Strips decoration a model commonly wraps around the sentence.
fn clean_reply(reply: &str) -> String {
    let mut s = reply.trim();
    if let Some(rest) = s.strip_prefix("Functional summary:") {
        s = rest.trim();
    }
    s.trim_matches(|c| c == '"' || c == '\'').trim().to_string()
}

/// Asks the provider for a one-sentence summary of `case`, feeding
/// validation failures back for at most [`SUMMARY_ROUNDS`] calls in total.
pub fn generate_functional_summary(
    case: &TestCase,
    category: &str,
    session: &mut LlmSession,
) -> Result<String, KnowledgeError> {
    case.validate()?;
    let base = render_prompt(
        PromptRole::SummaryGeneration,
        &PromptContext::Summary { case, category },
    )?;
    let mut prompt = base.clone();
    let mut last = Vec::new();
    for _ in 0..SUMMARY_ROUNDS {
        let reply = session
            .complete(PromptRole::SummaryGeneration, prompt)?
            .text;
        let summary = clean_reply(&reply);
        match summary_valid(&summary) {
            Ok(()) => return Ok(summary),
            Err(violations) => {
                let problems: Vec<String> = violations.iter().map(ToString::to_string).collect();
                prompt = with_feedback(&base, &reply, &problems);
                last = violations;
            }
        }
    }
    Err(KnowledgeError::SummaryRejected(last))
}

const STOPWORDS: [&str; 22] = [
    "a", "an", "the", "of", "to", "in", "on", "for", "and", "or", "with", "widget", "button",
    "text", "edit", "view", "is", "it", "at", "by", "from", "item",
];

/// Offline summarizer used when no model is configured: names the
/// functionality after the most frequent content words in the step widgets.
#[derive(Debug, Default, Clone)]
pub struct HeuristicSummarizer;

impl HeuristicSummarizer {
    pub fn summarize_prompt(prompt: &str) -> String {
        let input = prompt
            .split("## Input Object")
            .nth(1)
            .and_then(|s| s.split("\n## ").next())
            .unwrap_or("");
        let mut freq: HashMap<String, (usize, usize)> = HashMap::new();
        let mut order = 0;
        for line in input
            .lines()
            .filter(|l| l.trim_start().starts_with("Step "))
        {
            for (i, quoted) in line.split('"').enumerate() {
                if i % 2 == 0 {
                    continue;
                }
                for w in super::embed::tokenize(quoted) {
                    if w.len() < 2
                        || STOPWORDS.contains(&w.as_str())
                        || w.chars().all(|c| c.is_ascii_digit())
                    {
                        continue;
                    }
                    let slot = freq.entry(w).or_insert((0, order));
                    slot.0 += 1;
                    order += 1;
                }
            }
        }
        let mut words: Vec<(String, (usize, usize))> = freq.into_iter().collect();
        words.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
        let mut top: Vec<(String, usize)> = words
            .into_iter()
            .take(3)
            .map(|(w, (_, first))| (w, first))
            .collect();
        top.sort_by_key(|(_, first)| *first);
        if top.is_empty() {
            "Test the main functionality".to_string()
        } else {
            let names: Vec<String> = top.into_iter().map(|(w, _)| w).collect();
            format!("Test the {} functionality", names.join(" "))
        }
    }
}

impl LlmProvider for HeuristicSummarizer {
    fn id(&self) -> &str {
        "heuristic"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        if request.role != PromptRole::SummaryGeneration {
            return Err(LlmError::ProviderUnavailable(format!(
                "heuristic provider only answers summary_generation, not {}",
                request.role
            )));
        }
        Ok(Self::summarize_prompt(&request.rendered_prompt))
    }
}
