use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tracing::debug;

use super::{ChatRequest, ChatResponse, LlmError, LlmProvider, PromptRole};

/// One logged request/response pair; a line of `transcript.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub session_id: String,
    pub turn: u64,
    pub role: PromptRole,
    pub prompt: String,
    pub reply: String,
    pub provider_id: String,
}

/// Shared append-only JSONL writer for transcript records.
#[derive(Clone)]
pub struct TranscriptSink {
    file: Arc<Mutex<File>>,
}

impl TranscriptSink {
    pub fn create(path: &Path) -> Result<Self, LlmError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Io(path.to_path_buf(), e))?;
        Ok(Self {
            file: Arc::new(Mutex::new(file)),
        })
    }

    fn append(&self, record: &TranscriptRecord) -> Result<(), LlmError> {
        let mut line =
            serde_json::to_string(record).map_err(|e| LlmError::Transcript(e.to_string()))?;
        line.push('\n');
        let mut f = self.file.lock().unwrap();
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| LlmError::Transcript(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Vec<TranscriptRecord>, LlmError> {
        let file = File::open(path).map_err(|e| LlmError::Io(path.to_path_buf(), e))?;
        BufReader::new(file)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| {
                let l = l.map_err(|e| LlmError::Io(path.to_path_buf(), e))?;
                serde_json::from_str(&l).map_err(|e| LlmError::Transcript(e.to_string()))
            })
            .collect()
    }
}

/// A conversation with a provider. Turns start at 1 and increase by one per
/// call; every exchange is recorded before the reply is handed back.
pub struct LlmSession {
    id: String,
    provider: Arc<dyn LlmProvider>,
    turn: u64,
    records: Vec<TranscriptRecord>,
    sink: Option<TranscriptSink>,
}

impl LlmSession {
    pub fn new(id: impl Into<String>, provider: Arc<dyn LlmProvider>) -> Self {
        Self {
            id: id.into(),
            provider,
            turn: 0,
            records: Vec::new(),
            sink: None,
        }
    }

    pub fn with_sink(mut self, sink: TranscriptSink) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Number of provider calls made so far.
    pub fn calls(&self) -> usize {
        self.turn as usize
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn complete(&mut self, role: PromptRole, prompt: String) -> Result<ChatResponse, LlmError> {
        if prompt.trim().is_empty() {
            return Err(LlmError::EmptyPrompt);
        }
        self.turn += 1;
        let request = ChatRequest {
            role,
            rendered_prompt: prompt,
            session_id: self.id.clone(),
            turn: self.turn,
        };
        let text = self.provider.complete(&request)?;
        let record = TranscriptRecord {
            session_id: self.id.clone(),
            turn: self.turn,
            role,
            prompt: request.rendered_prompt,
            reply: text.clone(),
            provider_id: self.provider.id().to_string(),
        };
        debug!(session = %self.id, turn = self.turn, %role, "llm exchange");
        if let Some(sink) = &self.sink {
            sink.append(&record)?;
        }
        self.records.push(record);
        Ok(ChatResponse {
            text,
            provider_id: self.provider.id().to_string(),
        })
    }
}
