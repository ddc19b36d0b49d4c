use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::session::TranscriptRecord;
use super::{ChatRequest, LlmError, LlmProvider, PromptRole};

/// Which request a scripted reply answers. `turn`, `contains` and `session`
/// are optional refinements on top of the role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptMatch {
    pub role: PromptRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
}

impl ScriptMatch {
    pub fn role(role: PromptRole) -> Self {
        Self {
            role,
            turn: None,
            contains: None,
            session: None,
        }
    }

    pub fn at_turn(role: PromptRole, turn: u64) -> Self {
        Self {
            turn: Some(turn),
            ..Self::role(role)
        }
    }

    pub fn containing(role: PromptRole, needle: impl Into<String>) -> Self {
        Self {
            contains: Some(needle.into()),
            ..Self::role(role)
        }
    }

    fn accepts(&self, req: &ChatRequest) -> bool {
        self.role == req.role
            && self.turn.is_none_or(|t| t == req.turn)
            && self.session.as_deref().is_none_or(|s| s == req.session_id)
            && self
                .contains
                .as_deref()
                .is_none_or(|needle| req.rendered_prompt.contains(needle))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match")]
    pub matcher: ScriptMatch,
    pub reply: String,
}

impl ScriptEntry {
    pub fn new(matcher: ScriptMatch, reply: impl Into<String>) -> Self {
        Self {
            matcher,
            reply: reply.into(),
        }
    }
}

/// Ordered scripted replies; serialized as a bare JSON array.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScriptedTranscript {
    pub entries: Vec<ScriptEntry>,
}

impl ScriptedTranscript {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self { entries }
    }

    pub fn push(&mut self, matcher: ScriptMatch, reply: impl Into<String>) -> &mut Self {
        self.entries.push(ScriptEntry::new(matcher, reply));
        self
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LlmError::Io(path.to_path_buf(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))
    }

    /// Converts a recorded session log into a script that answers each
    /// (session, role, turn) exactly as recorded.
    pub fn from_records(records: &[TranscriptRecord]) -> Self {
        Self {
            entries: records
                .iter()
                .map(|r| ScriptEntry {
                    matcher: ScriptMatch {
                        role: r.role,
                        turn: Some(r.turn),
                        contains: None,
                        session: Some(r.session_id.clone()),
                    },
                    reply: r.reply.clone(),
                })
                .collect(),
        }
    }
}

/// Deterministic provider answering from a [`ScriptedTranscript`]. The first
/// unconsumed entry that matches a request answers it, and is then consumed.
pub struct ScriptedProvider {
    entries: Vec<ScriptEntry>,
    used: Mutex<Vec<bool>>,
}

impl ScriptedProvider {
    pub fn new(transcript: ScriptedTranscript) -> Self {
        let used = vec![false; transcript.entries.len()];
        Self {
            entries: transcript.entries,
            used: Mutex::new(used),
        }
    }

    pub fn remaining(&self) -> usize {
        self.used.lock().unwrap().iter().filter(|u| !**u).count()
    }
}

impl LlmProvider for ScriptedProvider {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut used = self.used.lock().unwrap();
        let hit = self
            .entries
            .iter()
            .enumerate()
            .find(|(i, e)| !used[*i] && e.matcher.accepts(request))
            .map(|(i, _)| i);
        match hit {
            Some(i) => {
                used[i] = true;
                Ok(self.entries[i].reply.clone())
            }
            None => Err(LlmError::ScriptExhausted {
                role: request.role,
                turn: request.turn,
                session_id: request.session_id.clone(),
            }),
        }
    }
}
