//! Blocking chat-completion client for remote environment generation.
//!
//! Wire protocol: POST JSON `{model, messages, temperature}` with a bearer
//! token from `TERRAVERSE_API_KEY`; the reply must carry
//! `choices[0].message.content`. Transport errors and 5xx responses retry
//! with exponential backoff; an unparseable program re-prompts with the parse
//! error appended, up to the request's attempt limit.

use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use crate::config::RemoteConfig;
use crate::dsl::parse_program;

use super::prompt::{build_prompt, extract_fenced_block, ChatMessage, GeneratorRequest};
use super::{EnvironmentGenerator, GeneratorError, GeneratorOutput};

/// Environment variable holding the bearer token.
pub const API_KEY_VAR: &str = "TERRAVERSE_API_KEY";

pub struct RemoteGenerator {
    cfg: RemoteConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct ChoiceMessage {
    content: String,
}

impl RemoteGenerator {
    pub fn new(cfg: RemoteConfig) -> RemoteGenerator {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_s))
            .build()
            .expect("http client");
        RemoteGenerator {
            cfg,
            client,
            api_key: std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
        }
    }

    /// One chat completion, with transport retries. Returns the assistant
    /// content and the number of retries spent.
    pub fn chat(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
    ) -> Result<(String, u32), GeneratorError> {
        let body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": temperature,
        });
        let mut retries = 0u32;
        loop {
            let mut req = self.client.post(&self.cfg.url).json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let outcome = req.send();
            match outcome {
                Ok(resp) => {
                    let status = resp.status();
                    if status.as_u16() == 401 || status.as_u16() == 403 {
                        return Err(GeneratorError::Auth {
                            status: status.as_u16(),
                        });
                    }
                    if status.is_server_error() {
                        if retries >= self.cfg.max_retries {
                            return Err(GeneratorError::Transport(format!(
                                "{status} after {retries} retries"
                            )));
                        }
                        self.backoff(retries);
                        retries += 1;
                        continue;
                    }
                    if !status.is_success() {
                        let text = resp.text().unwrap_or_default();
                        return Err(GeneratorError::BadResponse(format!("{status}: {text}")));
                    }
                    let parsed: ChatResponse = resp
                        .json()
                        .map_err(|e| GeneratorError::BadResponse(e.to_string()))?;
                    let content = parsed
                        .choices
                        .first()
                        .map(|c| c.message.content.clone())
                        .ok_or_else(|| {
                            GeneratorError::BadResponse("response has no choices".to_string())
                        })?;
                    return Ok((content, retries));
                }
                Err(e) => {
                    if retries >= self.cfg.max_retries {
                        return Err(GeneratorError::Transport(format!(
                            "{e} after {retries} retries"
                        )));
                    }
                    self.backoff(retries);
                    retries += 1;
                }
            }
        }
    }

    fn backoff(&self, retry: u32) {
        let delay = self.cfg.backoff_ms.saturating_mul(1u64 << retry.min(16));
        std::thread::sleep(Duration::from_millis(delay));
    }
}

impl EnvironmentGenerator for RemoteGenerator {
    fn label(&self) -> &'static str {
        "remote"
    }

    fn generate(
        &self,
        req: &GeneratorRequest,
        _rng: &mut ChaCha8Rng,
    ) -> Result<GeneratorOutput, GeneratorError> {
        let mut messages = build_prompt(req);
        let mut attempts = 0u32;
        let mut last_error = String::new();
        while attempts < req.max_attempts.max(1) {
            attempts += 1;
            let (content, _retries) = self.chat(&messages, req.temperature)?;
            messages.push(ChatMessage::assistant(content.clone()));

            let candidate = match extract_fenced_block(&content) {
                Some(block) => block,
                None => {
                    last_error = "response had no fenced code block".to_string();
                    messages.push(ChatMessage::user(
                        "Your reply had no fenced code block. Respond with exactly one \
                         terrain program inside a single fenced code block.",
                    ));
                    continue;
                }
            };
            match parse_program(&candidate) {
                Ok(_) => {
                    return Ok(GeneratorOutput {
                        text: candidate,
                        exchange: messages,
                        attempts,
                    });
                }
                Err(e) => {
                    last_error = e.to_string();
                    messages.push(ChatMessage::user(format!(
                        "That program failed to parse: {e}. Reply with a corrected \
                         program in a single fenced code block."
                    )));
                }
            }
        }
        Err(GeneratorError::Exhausted {
            attempts,
            last_error,
        })
    }
}
