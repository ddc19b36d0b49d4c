//! Every model interaction goes through this module: prompt rendering,
//! providers (remote HTTP and scripted), and per-session transcripts.

mod http;
mod prompt;
mod scripted;
mod session;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use http::{HttpProvider, TOKEN_ENV};
pub use prompt::{render_prompt, with_feedback, InstructionTarget, PromptContext};
pub use scripted::{ScriptEntry, ScriptMatch, ScriptedProvider, ScriptedTranscript};
pub use session::{LlmSession, TranscriptRecord, TranscriptSink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptRole {
    SummaryGeneration,
    KnowledgeFusion,
    StepSelection,
    InstructionGeneration,
    CompletionJudgment,
}

impl PromptRole {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptRole::SummaryGeneration => "summary_generation",
            PromptRole::KnowledgeFusion => "knowledge_fusion",
            PromptRole::StepSelection => "step_selection",
            PromptRole::InstructionGeneration => "instruction_generation",
            PromptRole::CompletionJudgment => "completion_judgment",
        }
    }
}

impl fmt::Display for PromptRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role: PromptRole,
    pub rendered_prompt: String,
    pub session_id: String,
    pub turn: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub provider_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("prompt context is missing `{0}`")]
    MissingContextField(&'static str),
    #[error("{role} prompt rendered with a {context} context")]
    ContextRoleMismatch {
        role: PromptRole,
        context: PromptRole,
    },
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error(
        "scripted transcript has no entry for role {role} at turn {turn} (session {session_id})"
    )]
    ScriptExhausted {
        role: PromptRole,
        turn: u64,
        session_id: String,
    },
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("invalid provider spec `{0}`")]
    InvalidSpec(String),
    #[error("transcript: {0}")]
    Transcript(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

/// A chat-completion backend. Implementations are shared across sessions.
pub trait LlmProvider: Send + Sync {
    fn id(&self) -> &str;

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// `scripted:<transcript.json>` or `http:<url>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Scripted(PathBuf),
    Http(String),
}

impl FromStr for ProviderSpec {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("scripted:") {
            Ok(ProviderSpec::Scripted(PathBuf::from(path)))
        } else if let Some(url) = s.strip_prefix("http:") {
            // `http:https://host/...` and `http://host/...` both name the endpoint.
            let url = if url.starts_with("//") {
                format!("http:{url}")
            } else {
                url.to_string()
            };
            Ok(ProviderSpec::Http(url))
        } else {
            Err(LlmError::InvalidSpec(s.to_string()))
        }
    }
}

impl fmt::Display for ProviderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProviderSpec::Scripted(p) => write!(f, "scripted:{}", p.display()),
            ProviderSpec::Http(url) => write!(f, "http:{url}"),
        }
    }
}

impl ProviderSpec {
    pub fn connect(&self) -> Result<Arc<dyn LlmProvider>, LlmError> {
        Ok(match self {
            ProviderSpec::Scripted(path) => {
                Arc::new(ScriptedProvider::new(ScriptedTranscript::load(path)?))
            }
            ProviderSpec::Http(url) => Arc::new(HttpProvider::from_env(url.clone())),
        })
    }
}
