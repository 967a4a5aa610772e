use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendRequest, BackendResponse, GatewayError, TokenCounts};
use crate::prompt::Role;

/// Thinking budget used when the request does not name one.
pub const DEFAULT_THINKING_BUDGET: u32 = 16_000;
pub const ANTHROPIC_VERSION: &str = "2023-06-01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    /// Messages API with `x-api-key` auth and content blocks.
    Anthropic,
    /// Chat-completions API, as served by OpenAI-compatible gateways.
    OpenAi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    pub dialect: Dialect,
    /// Full endpoint URL.
    pub endpoint: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Whether the served model has a thinking mode.
    #[serde(default)]
    pub thinking: bool,
}

fn default_timeout() -> u64 {
    600
}

/// One JSON POST. Returns the status code and body text.
pub trait HttpTransport: Send + Sync {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<(u16, String), GatewayError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl HttpTransport for UreqTransport {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<(u16, String), GatewayError> {
        let mut req = self.agent.post(url);
        for (k, v) in headers {
            req = req.header(k, v);
        }
        let mut resp = req.send_json(body).map_err(|e| match e {
            ureq::Error::Timeout(t) => GatewayError::Timeout(t.to_string()),
            other => GatewayError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok((status, text))
    }
}

pub struct HttpBackend {
    name: String,
    config: HttpConfig,
    api_key: String,
    transport: Box<dyn HttpTransport>,
}

impl HttpBackend {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(name: impl Into<String>, config: HttpConfig) -> Result<Self, GatewayError> {
        let key = std::env::var(&config.api_key_env)
            .map_err(|_| GatewayError::Auth(format!("environment variable {} is not set", config.api_key_env)))?;
        let transport = Box::new(UreqTransport::new(Duration::from_secs(config.timeout_secs)));
        Ok(Self::with_transport(name, config, key, transport))
    }

    pub fn with_transport(
        name: impl Into<String>,
        config: HttpConfig,
        api_key: impl Into<String>,
        transport: Box<dyn HttpTransport>,
    ) -> Self {
        HttpBackend { name: name.into(), config, api_key: api_key.into(), transport }
    }

    fn headers(&self) -> Vec<(String, String)> {
        match self.config.dialect {
            Dialect::Anthropic => vec![
                ("x-api-key".into(), self.api_key.clone()),
                ("anthropic-version".into(), ANTHROPIC_VERSION.into()),
            ],
            Dialect::OpenAi => vec![("authorization".into(), format!("Bearer {}", self.api_key))],
        }
    }
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

/// Request body in the given dialect.
pub fn encode_request(dialect: Dialect, req: &BackendRequest) -> Value {
    let budget = req.thinking_budget.unwrap_or(DEFAULT_THINKING_BUDGET);
    match dialect {
        Dialect::Anthropic => {
            let system: Vec<&str> =
                req.messages.iter().filter(|m| m.role == Role::System).map(|m| m.text.as_str()).collect();
            let messages: Vec<Value> = req
                .messages
                .iter()
                .filter(|m| m.role != Role::System)
                .map(|m| json!({"role": role_name(m.role), "content": m.text}))
                .collect();
            let mut body = json!({
                "model": req.model_name,
                "messages": messages,
                "max_tokens": req.max_output_tokens,
            });
            if !system.is_empty() {
                body["system"] = json!(system.join("\n\n"));
            }
            if req.thinking {
                // the provider rejects a custom temperature with thinking on
                body["thinking"] = json!({"type": "enabled", "budget_tokens": budget});
                body["max_tokens"] = json!(req.max_output_tokens + budget);
            } else {
                body["temperature"] = json!(req.temperature);
            }
            body
        }
        Dialect::OpenAi => {
            let messages: Vec<Value> =
                req.messages.iter().map(|m| json!({"role": role_name(m.role), "content": m.text})).collect();
            let mut body = json!({
                "model": req.model_name,
                "messages": messages,
                "temperature": req.temperature,
                "max_tokens": req.max_output_tokens,
                "enable_thinking": req.thinking,
                "chat_template_kwargs": {"enable_thinking": req.thinking},
            });
            if req.thinking {
                body["thinking_budget"] = json!(budget);
                body["max_tokens"] = json!(req.max_output_tokens + budget);
            }
            body
        }
    }
}

fn status_error(status: u16, body: &str) -> GatewayError {
    let detail = format!("HTTP {status}: {}", body.chars().take(300).collect::<String>());
    match status {
        401 | 403 => GatewayError::Auth(detail),
        429 => GatewayError::RateLimited(detail),
        408 | 504 => GatewayError::Timeout(detail),
        500..=599 => GatewayError::Transport(detail),
        _ => GatewayError::Rejected(detail),
    }
}

fn malformed(msg: impl Into<String>) -> GatewayError {
    GatewayError::MalformedProviderReply(msg.into())
}

fn count(v: &Value, key: &str) -> u64 {
    v.get(key).and_then(Value::as_u64).unwrap_or(0)
}

/// Splits `<think>...</think>` blocks out of a completion.
fn split_think_tags(text: &str) -> (String, Option<String>) {
    let Some(open) = text.find("<think>") else {
        return (text.to_string(), None);
    };
    let after = &text[open + "<think>".len()..];
    match after.find("</think>") {
        Some(close) => {
            let thought = after[..close].trim().to_string();
            let rest = format!("{}{}", &text[..open], &after[close + "</think>".len()..]);
            (rest.trim().to_string(), Some(thought))
        }
        None => (text[..open].trim().to_string(), Some(after.trim().to_string())),
    }
}

/// Parses a successful response body.
pub fn decode_response(dialect: Dialect, body: &str) -> Result<BackendResponse, GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(format!("not JSON: {e}")))?;
    let mut meta = serde_json::Map::new();
    for key in ["id", "model", "stop_reason"] {
        if let Some(x) = v.get(key) {
            meta.insert(key.to_string(), x.clone());
        }
    }
    match dialect {
        Dialect::Anthropic => {
            let blocks = v.get("content").and_then(Value::as_array).ok_or_else(|| malformed("missing content"))?;
            let mut text = String::new();
            let mut thinking = String::new();
            for b in blocks {
                match b.get("type").and_then(Value::as_str) {
                    Some("text") => text.push_str(b.get("text").and_then(Value::as_str).unwrap_or("")),
                    Some("thinking") => thinking.push_str(b.get("thinking").and_then(Value::as_str).unwrap_or("")),
                    _ => {}
                }
            }
            let usage = v.get("usage").cloned().unwrap_or(Value::Null);
            Ok(BackendResponse {
                text,
                thinking_text: (!thinking.is_empty()).then_some(thinking),
                token_counts: TokenCounts {
                    prompt: count(&usage, "input_tokens"),
                    completion: count(&usage, "output_tokens"),
                    thinking: 0,
                },
                latency_ms: 0,
                provider_meta: meta,
            })
        }
        Dialect::OpenAi => {
            let msg = v
                .pointer("/choices/0/message")
                .ok_or_else(|| malformed("missing choices[0].message"))?;
            let content = msg.get("content").and_then(Value::as_str).unwrap_or("");
            let (text, tagged) = split_think_tags(content);
            let reasoning = msg
                .get("reasoning_content")
                .and_then(Value::as_str)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .or(tagged);
            if let Some(fr) = v.pointer("/choices/0/finish_reason") {
                meta.insert("finish_reason".into(), fr.clone());
            }
            let usage = v.get("usage").cloned().unwrap_or(Value::Null);
            Ok(BackendResponse {
                text,
                thinking_text: reasoning,
                token_counts: TokenCounts {
                    prompt: count(&usage, "prompt_tokens"),
                    completion: count(&usage, "completion_tokens"),
                    thinking: usage.pointer("/completion_tokens_details/reasoning_tokens").and_then(Value::as_u64).unwrap_or(0),
                },
                latency_ms: 0,
                provider_meta: meta,
            })
        }
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports_thinking(&self) -> bool {
        self.config.thinking
    }

    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, GatewayError> {
        let body = encode_request(self.config.dialect, req);
        let started = Instant::now();
        let (status, text) = self.transport.post_json(&self.config.endpoint, &self.headers(), &body)?;
        if !(200..300).contains(&status) {
            return Err(status_error(status, &text));
        }
        let mut resp = decode_response(self.config.dialect, &text)?;
        resp.latency_ms = started.elapsed().as_millis() as u64;
        Ok(resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::ChatMessage;
    use std::sync::Mutex;

    type Posted = (Vec<(String, String)>, Value);

    struct Canned {
        status: u16,
        body: String,
        seen: Mutex<Vec<Posted>>,
    }

    impl HttpTransport for std::sync::Arc<Canned> {
        fn post_json(&self, _: &str, headers: &[(String, String)], body: &Value) -> Result<(u16, String), GatewayError> {
            self.seen.lock().unwrap().push((headers.to_vec(), body.clone()));
            Ok((self.status, self.body.clone()))
        }
    }

    fn request(thinking: bool) -> BackendRequest {
        BackendRequest {
            model_name: "m".into(),
            messages: vec![ChatMessage::new(Role::System, "sys"), ChatMessage::new(Role::User, "q")],
            temperature: 0.7,
            max_output_tokens: 1000,
            thinking,
            thinking_budget: None,
            sample_key: 0,
        }
    }

    fn backend(dialect: Dialect, status: u16, body: &str) -> (HttpBackend, std::sync::Arc<Canned>) {
        let canned = std::sync::Arc::new(Canned { status, body: body.into(), seen: Mutex::new(Vec::new()) });
        let config = HttpConfig {
            dialect,
            endpoint: "http://localhost/v1".into(),
            api_key_env: "UNUSED".into(),
            timeout_secs: 5,
            thinking: true,
        };
        (HttpBackend::with_transport("b", config, "k", Box::new(canned.clone())), canned)
    }

    #[test]
    fn anthropic_round_trip() {
        let body = r#"{"id":"x","content":[{"type":"thinking","thinking":"hmm"},{"type":"text","text":"[V1]"}],
            "usage":{"input_tokens":12,"output_tokens":34}}"#;
        let (b, canned) = backend(Dialect::Anthropic, 200, body);
        let resp = b.call(&request(true)).unwrap();
        assert_eq!(resp.text, "[V1]");
        assert_eq!(resp.thinking_text.as_deref(), Some("hmm"));
        assert_eq!(resp.token_counts.prompt, 12);
        let (headers, sent) = canned.seen.lock().unwrap()[0].clone();
        assert!(headers.contains(&("x-api-key".into(), "k".into())));
        assert_eq!(sent["system"], "sys");
        assert_eq!(sent["messages"].as_array().unwrap().len(), 1);
        assert_eq!(sent["thinking"]["budget_tokens"], DEFAULT_THINKING_BUDGET);
        assert!(sent.get("temperature").is_none());
    }

    #[test]
    fn openai_round_trip_strips_think_tags() {
        let body = r#"{"choices":[{"message":{"content":"<think>step</think>\nanswer"},"finish_reason":"stop"}],
            "usage":{"prompt_tokens":3,"completion_tokens":4}}"#;
        let (b, canned) = backend(Dialect::OpenAi, 200, body);
        let resp = b.call(&request(false)).unwrap();
        assert_eq!(resp.text, "answer");
        assert_eq!(resp.thinking_text.as_deref(), Some("step"));
        let (headers, sent) = canned.seen.lock().unwrap()[0].clone();
        assert!(headers.contains(&("authorization".into(), "Bearer k".into())));
        assert_eq!(sent["chat_template_kwargs"]["enable_thinking"], false);
        assert_eq!(sent["temperature"], 0.7);
    }

    #[test]
    fn status_codes_map_to_error_kinds() {
        for (status, transient) in [(401, false), (429, true), (504, true), (503, true), (400, false)] {
            let (b, _) = backend(Dialect::OpenAi, status, "{}");
            let err = b.call(&request(false)).unwrap_err();
            assert_eq!(err.is_transient(), transient, "{status}: {err}");
        }
        let (b, _) = backend(Dialect::Anthropic, 200, "<html>");
        assert!(matches!(b.call(&request(false)), Err(GatewayError::MalformedProviderReply(_))));
    }
}
