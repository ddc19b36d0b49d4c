use std::time::Duration;

use tracing::warn;

use super::{ChatRequest, LlmError, LlmProvider};

/// Environment variable holding the bearer token for the remote provider.
pub const TOKEN_ENV: &str = "LOGIDROID_LLM_TOKEN";

const RETRIES: usize = 2;

/// Remote provider: `POST {"prompt": ...}` with bearer auth. The reply is the
/// `text` field of a JSON object body, a JSON string body, or the raw body.
pub struct HttpProvider {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(180)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            token,
            agent,
        }
    }

    pub fn from_env(endpoint: impl Into<String>) -> Self {
        Self::new(endpoint, std::env::var(TOKEN_ENV).ok())
    }

    fn post_once(&self, prompt: &str) -> Result<String, String> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(serde_json::json!({ "prompt": prompt }))
            .map_err(|e| e.to_string())?;
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(extract_text(&body))
    }
}

pub(crate) fn extract_text(body: &str) -> String {
    match serde_json::from_str::<serde_json::Value>(body) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(serde_json::Value::Object(map)) => match map.get("text") {
            Some(serde_json::Value::String(s)) => s.clone(),
            _ => body.to_string(),
        },
        _ => body.to_string(),
    }
}

impl LlmProvider for HttpProvider {
    fn id(&self) -> &str {
        &self.endpoint
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut last = String::new();
        for attempt in 0..=RETRIES {
            match self.post_once(&request.rendered_prompt) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    warn!(attempt, endpoint = %self.endpoint, error = %e, "provider request failed");
                    last = e;
                }
            }
        }
        Err(LlmError::ProviderUnavailable(format!(
            "{} after {} attempts: {last}",
            self.endpoint,
            RETRIES + 1
        )))
    }
}
