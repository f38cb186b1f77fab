//! Prompt building, chat-completion calls and response extraction.

mod extract;
mod prompt;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codecs::{decode_with, DecodeOptions, PmrId};

pub use extract::extract_model_text;
pub use prompt::{build_prompt, build_prompt_with, example_model, PromptBundle, TemplateSet, BUILTIN_VERSION};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("transport error after {attempts} attempt(s) to {endpoint}: {message}")]
    Transport { endpoint: String, attempts: u32, message: String },
    #[error("API error {status}: {excerpt}")]
    Api { status: u16, excerpt: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("extraction failed: {0}")]
    Extraction(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub api_base: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// Total attempts per request, the first one included.
    pub max_attempts: u32,
    pub timeout: Duration,
    /// First backoff delay; doubles after each failed attempt.
    pub backoff: Duration,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            api_base: String::new(),
            api_key: None,
            model: String::new(),
            temperature: 0.2,
            top_p: 0.95,
            top_k: None,
            max_tokens: None,
            max_attempts: 3,
            timeout: Duration::from_secs(120),
            backoff: Duration::from_secs(1),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.api_base.trim().is_empty() {
            return Err(LlmError::Config("no API base URL configured".into()));
        }
        if self.model.trim().is_empty() {
            return Err(LlmError::Config("no model name configured".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::Config(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(LlmError::Config(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        if self.max_attempts == 0 {
            return Err(LlmError::Config("max_attempts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.api_base.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    ExtractionFailed,
    DecodeFailed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub case_id: String,
    pub pmr: PmrId,
    pub model: String,
    pub prompt_fingerprint: String,
    /// Response body exactly as received.
    pub raw_response: String,
    /// Assistant message content taken from the body.
    pub content: String,
    /// Present iff extraction succeeded.
    pub extracted_text: Option<String>,
    pub parse_status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    pub elapsed_ms: u64,
    pub attempts: u32,
    pub usage: TokenUsage,
}

/// Extraction plus a lenient decode of `content`.
pub fn assess(content: &str, pmr: PmrId) -> (Option<String>, ParseStatus, Option<String>) {
    match extract_model_text(content, pmr) {
        Err(e) => (None, ParseStatus::ExtractionFailed, Some(e.to_string())),
        Ok(text) => match decode_with(&text, pmr, &DecodeOptions::LENIENT) {
            Ok(_) => (Some(text), ParseStatus::Ok, None),
            Err(e) => (Some(text), ParseStatus::DecodeFailed, Some(e.to_string())),
        },
    }
}

fn request_body(bundle: &PromptBundle, cfg: &GenerationConfig) -> serde_json::Value {
    let mut body = serde_json::json!({
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": bundle.system_text},
            {"role": "user", "content": bundle.user_text},
        ],
        "temperature": cfg.temperature,
        "top_p": cfg.top_p,
    });
    if let Some(k) = cfg.top_k {
        body["top_k"] = k.into();
    }
    if let Some(m) = cfg.max_tokens {
        body["max_tokens"] = m.into();
    }
    body
}

fn excerpt(s: &str) -> String {
    const MAX: usize = 400;
    match s.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

/// One chat completion for `bundle`, retried on transport failures and on
/// 429/5xx answers.
pub fn generate(case_id: &str, bundle: &PromptBundle, cfg: &GenerationConfig) -> Result<GenerationRecord, LlmError> {
    cfg.validate()?;
    let endpoint = cfg.endpoint();
    let agent: ureq::Agent =
        ureq::Agent::config_builder().timeout_global(Some(cfg.timeout)).http_status_as_error(false).build().into();
    let body = request_body(bundle, cfg);
    let started = Instant::now();
    let mut last_failure = String::new();
    for attempt in 1..=cfg.max_attempts {
        if attempt > 1 {
            let delay = cfg.backoff.saturating_mul(1 << (attempt - 2).min(16));
            log::info!("{case_id}/{}: attempt {attempt} in {delay:?} ({last_failure})", bundle.pmr);
            std::thread::sleep(delay);
        }
        let mut req = agent.post(&endpoint).header("Content-Type", "application/json");
        if let Some(k) = &cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(e) => {
                last_failure = e.to_string();
                continue;
            }
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => {
                last_failure = e.to_string();
                continue;
            }
        };
        if retryable(status) {
            last_failure = format!("status {status}: {}", excerpt(&text));
            continue;
        }
        if !(200..300).contains(&status) {
            return Err(LlmError::Api { status, excerpt: excerpt(&text) });
        }
        let elapsed_ms = started.elapsed().as_millis() as u64;
        return record_response(case_id, bundle, &cfg.model, text, attempt, elapsed_ms);
    }
    Err(LlmError::Transport { endpoint, attempts: cfg.max_attempts, message: last_failure })
}

/// Build the record for a chat-completions response body.
pub fn record_response(
    case_id: &str,
    bundle: &PromptBundle,
    model: &str,
    raw_response: String,
    attempts: u32,
    elapsed_ms: u64,
) -> Result<GenerationRecord, LlmError> {
    let v: serde_json::Value =
        serde_json::from_str(&raw_response).map_err(|e| LlmError::Protocol(format!("body is not JSON: {e}")))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| LlmError::Protocol("no choices[0].message.content in body".into()))?
        .to_string();
    let usage = TokenUsage {
        prompt_tokens: v.pointer("/usage/prompt_tokens").and_then(serde_json::Value::as_u64),
        completion_tokens: v.pointer("/usage/completion_tokens").and_then(serde_json::Value::as_u64),
    };
    let (extracted_text, parse_status, parse_error) = assess(&content, bundle.pmr);
    Ok(GenerationRecord {
        case_id: case_id.to_string(),
        pmr: bundle.pmr,
        model: model.to_string(),
        prompt_fingerprint: bundle.fingerprint.clone(),
        raw_response,
        content,
        extracted_text,
        parse_status,
        parse_error,
        elapsed_ms,
        attempts,
        usage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves one canned (status, body) per connection; `None` means hold
    /// the connection open without answering. Returns the base URL and the
    /// request bodies seen.
    fn mock(replies: Vec<Option<(u16, String)>>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}/v1", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for reply in replies {
                let Ok((mut stream, _)) = listener.accept() else {
                    return;
                };
                let log = log.clone();
                std::thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut len = 0;
                    loop {
                        let mut line = String::new();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                            break;
                        }
                        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                    let mut body = vec![0; len];
                    reader.read_exact(&mut body).unwrap();
                    log.lock().unwrap().push(String::from_utf8(body).unwrap());
                    match reply {
                        Some((status, text)) => {
                            let head = format!(
                            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                            text.len()
                        );
                            stream.write_all(head.as_bytes()).unwrap();
                            stream.write_all(text.as_bytes()).unwrap();
                        }
                        None => std::thread::sleep(Duration::from_millis(600)),
                    }
                });
            }
        });
        (base, seen)
    }

    fn chat(content: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5},
        })
        .to_string()
    }

    fn cfg(base: &str) -> GenerationConfig {
        GenerationConfig {
            api_base: base.into(),
            model: "test-model".into(),
            backoff: Duration::from_millis(10),
            timeout: Duration::from_millis(300),
            ..Default::default()
        }
    }

    fn bundle() -> PromptBundle {
        build_prompt("Someone does A, then B.", PmrId::Mermaid, true).unwrap()
    }

    #[test]
    fn mermaid_reply_is_recorded_verbatim() {
        let body = chat("Here you go:\n```mermaid\nflowchart TD\n  s((start)) --> a[A]\n  a --> e((end))\n```");
        let (base, seen) = mock(vec![Some((200, body.clone()))]);
        let b = bundle();
        let before = b.clone();
        let r = generate("c1", &b, &cfg(&base)).unwrap();
        assert_eq!(b, before);
        assert_eq!(r.raw_response, body);
        assert_eq!(r.parse_status, ParseStatus::Ok);
        assert_eq!(r.attempts, 1);
        assert_eq!(r.usage.completion_tokens, Some(5));
        let sent: serde_json::Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
        assert_eq!(sent["temperature"], 0.2);
        assert_eq!(sent["top_p"], 0.95);
        assert_eq!(sent["messages"][1]["content"], b.user_text.as_str());
    }

    #[test]
    fn rate_limit_then_success_retries_once() {
        let (base, _) = mock(vec![Some((429, "{\"error\":\"slow down\"}".into())), Some((200, chat("no model here")))]);
        let r = generate("c1", &bundle(), &cfg(&base)).unwrap();
        assert_eq!(r.attempts, 2);
        assert_eq!(r.parse_status, ParseStatus::ExtractionFailed);
        assert!(r.extracted_text.is_none());
    }

    #[test]
    fn client_error_is_not_retried() {
        let (base, seen) = mock(vec![Some((401, "{\"error\":\"bad key\"}".into())), Some((200, chat("x")))]);
        match generate("c1", &bundle(), &cfg(&base)) {
            Err(LlmError::Api { status: 401, excerpt }) => assert!(excerpt.contains("bad key")),
            other => panic!("{other:?}"),
        }
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn timeouts_exhaust_attempts() {
        let (base, seen) = mock(vec![None, None, None]);
        match generate("c1", &bundle(), &cfg(&base)) {
            Err(LlmError::Transport { attempts: 3, endpoint, .. }) => {
                assert!(endpoint.ends_with("/v1/chat/completions"))
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn config_is_validated() {
        let mut c = cfg("http://localhost");
        c.top_p = 0.0;
        assert!(matches!(generate("c", &bundle(), &c), Err(LlmError::Config(_))));
        c.top_p = 1.0;
        c.temperature = -0.1;
        assert!(c.validate().is_err());
        assert!(GenerationConfig::default().validate().is_err());
    }
}
