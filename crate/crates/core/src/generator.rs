//! Text generators: a chat-completions HTTP client, a replay reader for
//! canned responses, and a closure adapter for scripted tests.

use std::collections::VecDeque;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("endpoint unavailable: {0}")]
    Unavailable(String),
    #[error("replay responses exhausted")]
    Exhausted,
    #[error("cannot load replay file: {0}")]
    Replay(String),
}

/// Text in, text out.
pub trait Generator {
    fn generate(&mut self, system: &str, user: &str) -> Result<String, GeneratorError>;
}

impl<G: Generator + ?Sized> Generator for &mut G {
    fn generate(&mut self, system: &str, user: &str) -> Result<String, GeneratorError> {
        (**self).generate(system, user)
    }
}

/// Adapts a closure over the user message.
pub struct FnGenerator<F>(pub F);

impl<F: FnMut(&str) -> String> Generator for FnGenerator<F> {
    fn generate(&mut self, _system: &str, user: &str) -> Result<String, GeneratorError> {
        Ok((self.0)(user))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ReplayLine {
    Object { response: String },
    Text(String),
}

/// Returns canned responses in file order.
#[derive(Debug, Clone, Default)]
pub struct ReplayGenerator {
    responses: VecDeque<String>,
}

impl ReplayGenerator {
    pub fn new(responses: impl IntoIterator<Item = String>) -> Self {
        ReplayGenerator {
            responses: responses.into_iter().collect(),
        }
    }

    /// JSONL where each line is `{"response": ".."}` or a bare JSON string.
    pub fn from_file(path: &Path) -> Result<Self, GeneratorError> {
        let lines: Vec<ReplayLine> =
            crate::jsonl::read_jsonl(path).map_err(|e| GeneratorError::Replay(e.to_string()))?;
        Ok(ReplayGenerator::new(lines.into_iter().map(|l| match l {
            ReplayLine::Object { response } | ReplayLine::Text(response) => response,
        })))
    }

    /// Drops the first `n` responses, for resuming a run.
    pub fn skip(&mut self, n: usize) {
        let n = n.min(self.responses.len());
        self.responses.drain(..n);
    }

    pub fn remaining(&self) -> usize {
        self.responses.len()
    }
}

impl Generator for ReplayGenerator {
    fn generate(&mut self, _system: &str, _user: &str) -> Result<String, GeneratorError> {
        self.responses.pop_front().ok_or(GeneratorError::Exhausted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:8000/v1".into(),
            model: "gpt-4".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.7,
            max_tokens: 1024,
            retries: 3,
            backoff_ms: 500,
            timeout_secs: 60,
        }
    }
}

/// Blocking chat-completions client with exponential backoff.
pub struct HttpGenerator {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl HttpGenerator {
    pub fn new(config: EndpointConfig) -> Result<Self, GeneratorError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GeneratorError::Unavailable(e.to_string()))?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(HttpGenerator { config, client, api_key })
    }

    fn attempt(&self, system: &str, user: &str) -> Result<String, (bool, String)> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((retry, format!("HTTP {status}")));
        }
        let parsed: ChatResponse = resp.json().map_err(|e| (false, e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or((false, "response has no choices".into()))
    }
}

impl Generator for HttpGenerator {
    fn generate(&mut self, system: &str, user: &str) -> Result<String, GeneratorError> {
        let mut delay = self.config.backoff_ms;
        let mut attempt = 0;
        loop {
            match self.attempt(system, user) {
                Ok(text) => return Ok(text),
                Err((retry, msg)) if retry && attempt < self.config.retries => {
                    log::warn!("generator call failed ({msg}), retrying in {delay} ms");
                    std::thread::sleep(Duration::from_millis(delay));
                    delay = delay.saturating_mul(2);
                    attempt += 1;
                }
                Err((_, msg)) => return Err(GeneratorError::Unavailable(msg)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_reads_both_line_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        std::fs::write(&p, "{\"response\": \"a\"}\n\"b\"\n").unwrap();
        let mut g = ReplayGenerator::from_file(&p).unwrap();
        assert_eq!(g.generate("", "").unwrap(), "a");
        assert_eq!(g.generate("", "").unwrap(), "b");
        assert_eq!(g.generate("", ""), Err(GeneratorError::Exhausted));
    }

    #[test]
    fn unreachable_endpoint_fails_after_retries() {
        let mut g = HttpGenerator::new(EndpointConfig {
            base_url: "http://127.0.0.1:9".into(),
            retries: 1,
            backoff_ms: 1,
            timeout_secs: 2,
            ..EndpointConfig::default()
        })
        .unwrap();
        assert!(matches!(g.generate("s", "u"), Err(GeneratorError::Unavailable(_))));
    }
}
