//! Chat backends: a chat-completions HTTP endpoint, and a replay store of
//! canned responses keyed by a content hash.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

pub const MAX_TOKENS_CAP: u32 = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChatBackendKind {
    HttpEndpoint { url: String, model: String },
    ReplayFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatBackendConfig {
    pub kind: ChatBackendKind,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_timeout: Duration,
    pub max_parallel_requests: usize,
}

impl ChatBackendConfig {
    pub fn replay(path: impl Into<PathBuf>) -> Self {
        ChatBackendConfig {
            kind: ChatBackendKind::ReplayFile { path: path.into() },
            temperature: 0.0,
            max_tokens: MAX_TOKENS_CAP,
            request_timeout: Duration::from_secs(120),
            max_parallel_requests: 4,
        }
    }

    pub fn http(url: impl Into<String>, model: impl Into<String>) -> Self {
        ChatBackendConfig { kind: ChatBackendKind::HttpEndpoint { url: url.into(), model: model.into() }, ..Self::replay("") }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.temperature != 0.0 {
            return Err(LlmError::Config(format!("temperature must be 0, got {}", self.temperature)));
        }
        if self.max_tokens == 0 || self.max_tokens > MAX_TOKENS_CAP {
            return Err(LlmError::Config(format!("max_tokens must be in 1..={MAX_TOKENS_CAP}, got {}", self.max_tokens)));
        }
        if self.max_parallel_requests == 0 {
            return Err(LlmError::Config("max_parallel_requests must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub schema_name: String,
    pub block_text: String,
    pub prompt: String,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError>;
}

/// Rough token count: word runs and individual punctuation marks.
pub fn estimate_tokens(text: &str) -> usize {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\w+|[^\w\s]").expect("token regex")).find_iter(text).count()
}

fn check_length(text: &str, max_tokens: u32) -> Result<(), LlmError> {
    let n = estimate_tokens(text);
    if n > max_tokens as usize {
        return Err(LlmError::Truncated { tokens: n, max_tokens });
    }
    Ok(())
}

/// Hex SHA-256 of `schema_name`, a NUL byte, and `block_text`.
pub fn replay_key(schema_name: &str, block_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(schema_name.as_bytes());
    h.update([0u8]);
    h.update(block_text.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub key: String,
    pub schema: String,
    pub response: String,
}

impl ReplayRecord {
    pub fn new(schema: &str, block_text: &str, response: impl Into<String>) -> Self {
        ReplayRecord { key: replay_key(schema, block_text), schema: schema.to_string(), response: response.into() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    entries: HashMap<String, ReplayRecord>,
    max_tokens: u32,
}

impl ReplayBackend {
    pub fn from_records(records: impl IntoIterator<Item = ReplayRecord>, max_tokens: u32) -> Self {
        ReplayBackend { entries: records.into_iter().map(|r| (r.key.clone(), r)).collect(), max_tokens }
    }

    pub fn parse(content: &str, source: &str, max_tokens: u32) -> Result<Self, LlmError> {
        let mut records = Vec::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: ReplayRecord = serde_json::from_str(line)
                .map_err(|e| LlmError::Replay(format!("{source}:{}: {e}", i + 1)))?;
            records.push(r);
        }
        Ok(ReplayBackend::from_records(records, max_tokens))
    }

    pub fn load(path: &Path, max_tokens: u32) -> Result<Self, LlmError> {
        let content = std::fs::read_to_string(path).map_err(|e| LlmError::Replay(format!("{}: {e}", path.display())))?;
        ReplayBackend::parse(&content, &path.display().to_string(), max_tokens)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let key = replay_key(&req.schema_name, &req.block_text);
        let rec = self
            .entries
            .get(&key)
            .filter(|r| r.schema == req.schema_name)
            .ok_or_else(|| LlmError::MissingReplay { key: key.clone(), schema: req.schema_name.clone() })?;
        check_length(&rec.response, self.max_tokens)?;
        Ok(rec.response.clone())
    }
}

pub struct HttpBackend {
    url: String,
    model: String,
    max_tokens: u32,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(url: &str, model: &str, max_tokens: u32, timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Http(e.to_string()))?;
        Ok(HttpBackend { url: url.to_string(), model: model.to_string(), max_tokens, client })
    }
}

#[derive(Deserialize)]
struct CompletionReply {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl ChatBackend for HttpBackend {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": req.prompt }],
            "temperature": 0,
            "max_tokens": self.max_tokens,
        });
        let classify = |e: reqwest::Error| if e.is_timeout() { LlmError::Timeout(self.url.clone()) } else { LlmError::Http(e.to_string()) };
        let reply: CompletionReply = self
            .client
            .post(&self.url)
            .json(&body)
            .send()
            .map_err(classify)?
            .error_for_status()
            .map_err(classify)?
            .json()
            .map_err(classify)?;
        let choice = reply.choices.into_iter().next().ok_or_else(|| LlmError::Http("reply has no choices".into()))?;
        if choice.finish_reason.as_deref() == Some("length") {
            return Err(LlmError::Truncated { tokens: estimate_tokens(&choice.message.content), max_tokens: self.max_tokens });
        }
        check_length(&choice.message.content, self.max_tokens)?;
        Ok(choice.message.content)
    }
}

pub fn build_backend(cfg: &ChatBackendConfig) -> Result<Box<dyn ChatBackend>, LlmError> {
    cfg.validate()?;
    Ok(match &cfg.kind {
        ChatBackendKind::ReplayFile { path } => Box::new(ReplayBackend::load(path, cfg.max_tokens)?),
        ChatBackendKind::HttpEndpoint { url, model } => Box::new(HttpBackend::new(url, model, cfg.max_tokens, cfg.request_timeout)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    const SENTENCE: &str = "And so you're finishing how many total pigs a year? 6,670.";

    fn req(block: &str) -> ChatRequest {
        ChatRequest { schema_name: "TotalFinishingPigsEvent".into(), block_text: block.into(), prompt: "p".into() }
    }

    #[test]
    fn replay_returns_canned_response() {
        let store = ReplayBackend::from_records(
            [ReplayRecord::new("TotalFinishingPigsEvent", SENTENCE, r#"[{"total_finishing_pigs": 6670}]"#)],
            MAX_TOKENS_CAP,
        );
        let a = store.complete(&req(SENTENCE)).unwrap();
        assert_eq!(a, r#"[{"total_finishing_pigs": 6670}]"#);
        assert_eq!(a, store.complete(&req(SENTENCE)).unwrap());
    }

    #[test]
    fn missing_replay_names_the_hash() {
        let store = ReplayBackend::default();
        let err = store.complete(&req("other block")).unwrap_err();
        let key = replay_key("TotalFinishingPigsEvent", "other block");
        assert!(err.to_string().contains(&key), "{err}");
    }

    #[test]
    fn long_replies_are_truncation_errors() {
        let store = ReplayBackend::from_records([ReplayRecord::new("TotalFinishingPigsEvent", "b", "a b c d e")], 3);
        assert!(matches!(store.complete(&req("b")), Err(LlmError::Truncated { tokens: 5, max_tokens: 3 })));
    }

    #[test]
    fn key_separates_schema_and_text() {
        assert_ne!(replay_key("ab", "c"), replay_key("a", "bc"));
        assert_eq!(replay_key("a", "b").len(), 64);
    }

    #[test]
    fn config_bounds() {
        let mut c = ChatBackendConfig::replay("x");
        c.validate().unwrap();
        c.temperature = 0.7;
        assert!(c.validate().is_err());
        c.temperature = 0.0;
        c.max_tokens = 9000;
        assert!(c.validate().is_err());
    }

    fn serve_once(reply: &'static str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let mut stream = stream;
            write!(stream, "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}", reply.len(), reply).unwrap();
            String::from_utf8(body).unwrap()
        });
        (url, handle)
    }

    #[test]
    fn http_posts_a_zero_temperature_chat_request() {
        let (url, handle) = serve_once(r#"{"choices":[{"message":{"role":"assistant","content":"[]"},"finish_reason":"stop"}]}"#);
        let b = HttpBackend::new(&url, "local", 512, Duration::from_secs(5)).unwrap();
        assert_eq!(b.complete(&req("x")).unwrap(), "[]");
        let sent: serde_json::Value = serde_json::from_str(&handle.join().unwrap()).unwrap();
        assert_eq!(sent["temperature"], 0);
        assert_eq!(sent["max_tokens"], 512);
        assert_eq!(sent["messages"][0]["role"], "user");
    }

    #[test]
    fn http_length_stop_is_truncation() {
        let (url, handle) = serve_once(r#"{"choices":[{"message":{"content":"[{\"a\":"},"finish_reason":"length"}]}"#);
        let b = HttpBackend::new(&url, "local", 512, Duration::from_secs(5)).unwrap();
        assert!(matches!(b.complete(&req("x")), Err(LlmError::Truncated { .. })));
        handle.join().unwrap();
    }
}
