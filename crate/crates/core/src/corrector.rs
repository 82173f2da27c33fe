//! Grammar-correction post-processing.
//!
//! The correction model itself runs out of process. [`HttpCorrector`] talks
//! to it over a small JSON protocol:
//!
//! ```text
//! POST {endpoint}/correct   {"text": "..."}  ->  200 {"corrected": "...", "model": "..."}
//! GET  {endpoint}/healthz                    ->  200 ok
//! ```
//!
//! 4xx responses are permanent failures; 5xx, transport errors and timeouts
//! are retried with exponential backoff starting at 100 ms.

pub mod mock;

use std::fmt;
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_RETRIES: u32 = 5;
const BACKOFF_START: Duration = Duration::from_millis(100);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorrectorError {
    #[error("text to correct is empty")]
    EmptyText,
    #[error("invalid corrector config: {0}")]
    InvalidConfig(String),
    #[error("correction unavailable after {attempts} attempt(s): {reason}")]
    CorrectionUnavailable { attempts: u32, reason: String },
    #[error("correction rejected with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("invalid response from correction service: {0}")]
    InvalidResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnError {
    #[default]
    Fail,
    Passthrough,
}

impl FromStr for OnError {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fail" => Ok(OnError::Fail),
            "passthrough" => Ok(OnError::Passthrough),
            other => Err(format!("unknown on-error policy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectorConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub on_error: OnError,
}

impl CorrectorConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        CorrectorConfig {
            endpoint: endpoint.into(),
            timeout_ms: 5000,
            max_retries: 2,
            on_error: OnError::Fail,
        }
    }

    pub fn validate(&self) -> Result<(), CorrectorError> {
        if self.endpoint.trim().is_empty() {
            return Err(CorrectorError::InvalidConfig("endpoint is empty".into()));
        }
        if self.timeout_ms == 0 {
            return Err(CorrectorError::InvalidConfig(
                "timeout_ms must be positive".into(),
            ));
        }
        if self.max_retries > MAX_RETRIES {
            return Err(CorrectorError::InvalidConfig(format!(
                "max_retries must be at most {MAX_RETRIES}"
            )));
        }
        Ok(())
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.endpoint.trim_end_matches('/'), path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub original: String,
    pub corrected: String,
    pub changed: bool,
    pub latency_ms: f64,
    /// Model label reported by the service.
    pub model: Option<String>,
    /// Set when the service failed and the original text was passed through.
    pub warning: Option<String>,
}

impl CorrectionResult {
    pub fn new(original: &str, corrected: String, latency_ms: f64, model: Option<String>) -> Self {
        CorrectionResult {
            changed: original != corrected,
            original: original.to_owned(),
            corrected,
            latency_ms,
            model,
            warning: None,
        }
    }

    fn passthrough(original: &str, latency_ms: f64, warning: String) -> Self {
        CorrectionResult {
            warning: Some(warning),
            ..CorrectionResult::new(original, original.to_owned(), latency_ms, None)
        }
    }
}

/// A grammar-correction stage. Implementations are shared across worker
/// threads.
pub trait Corrector: Send + Sync {
    fn correct(&self, text: &str) -> Result<CorrectionResult, CorrectorError>;

    fn name(&self) -> &str;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityCorrector;

impl Corrector for IdentityCorrector {
    fn correct(&self, text: &str) -> Result<CorrectionResult, CorrectorError> {
        if text.is_empty() {
            return Err(CorrectorError::EmptyText);
        }
        Ok(CorrectionResult::new(text, text.to_owned(), 0.0, None))
    }

    fn name(&self) -> &str {
        "identity"
    }
}

#[derive(Serialize)]
struct CorrectRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct CorrectResponse {
    corrected: String,
    model: String,
}

enum Failure {
    Transient(String),
    Permanent(CorrectorError),
}

/// Client for a remote correction service.
pub struct HttpCorrector {
    config: CorrectorConfig,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpCorrector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpCorrector")
            .field("config", &self.config)
            .finish()
    }
}

impl HttpCorrector {
    pub fn new(config: CorrectorConfig) -> Result<Self, CorrectorError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpCorrector { config, agent })
    }

    pub fn config(&self) -> &CorrectorConfig {
        &self.config
    }

    /// `GET /healthz`; true when the service answers 200 `ok`.
    pub fn health(&self) -> bool {
        match self.agent.get(&self.config.url("healthz")).call() {
            Ok(mut resp) => {
                resp.status().as_u16() == 200
                    && resp
                        .body_mut()
                        .read_to_string()
                        .is_ok_and(|body| body.trim() == "ok")
            }
            Err(_) => false,
        }
    }

    fn attempt(&self, text: &str) -> Result<(String, String), Failure> {
        let body = serde_json::to_string(&CorrectRequest { text })
            .map_err(|e| Failure::Permanent(CorrectorError::InvalidResponse(e.to_string())))?;
        let mut resp = self
            .agent
            .post(&self.config.url("correct"))
            .header("Content-Type", "application/json; charset=utf-8")
            .send(body.as_bytes())
            .map_err(|e| Failure::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let payload = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Transient(e.to_string()))?;
        match status {
            200 => {
                let parsed: CorrectResponse = serde_json::from_str(&payload).map_err(|e| {
                    Failure::Permanent(CorrectorError::InvalidResponse(e.to_string()))
                })?;
                if parsed.corrected.is_empty() {
                    return Err(Failure::Permanent(CorrectorError::InvalidResponse(
                        "empty correction for non-empty input".into(),
                    )));
                }
                Ok((parsed.corrected, parsed.model))
            }
            400..=499 => Err(Failure::Permanent(CorrectorError::Rejected {
                status,
                body: payload,
            })),
            _ => Err(Failure::Transient(format!("status {status}"))),
        }
    }

    fn correct_strict(&self, text: &str) -> Result<(String, String), CorrectorError> {
        let mut backoff = BACKOFF_START;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(text) {
                Ok(ok) => return Ok(ok),
                Err(Failure::Permanent(e)) => return Err(e),
                Err(Failure::Transient(reason)) => {
                    if attempts > self.config.max_retries {
                        return Err(CorrectorError::CorrectionUnavailable { attempts, reason });
                    }
                    thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
    }
}

impl Corrector for HttpCorrector {
    fn correct(&self, text: &str) -> Result<CorrectionResult, CorrectorError> {
        if text.is_empty() {
            return Err(CorrectorError::EmptyText);
        }
        let start = Instant::now();
        let outcome = self.correct_strict(text);
        let latency_ms = start.elapsed().as_secs_f64() * 1000.0;
        match (outcome, self.config.on_error) {
            (Ok((corrected, model)), _) => Ok(CorrectionResult::new(
                text,
                corrected,
                latency_ms,
                Some(model),
            )),
            (Err(e), OnError::Passthrough) => Ok(CorrectionResult::passthrough(
                text,
                latency_ms,
                e.to_string(),
            )),
            (Err(e), OnError::Fail) => Err(e),
        }
    }

    fn name(&self) -> &str {
        "remote"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_noop() {
        let r = IdentityCorrector.correct("any string").unwrap();
        assert_eq!(r.corrected, "any string");
        assert!(!r.changed);
        assert_eq!(
            IdentityCorrector.correct(""),
            Err(CorrectorError::EmptyText)
        );
    }

    #[test]
    fn config_validation() {
        assert!(CorrectorConfig::new("http://localhost:1")
            .validate()
            .is_ok());
        let mut c = CorrectorConfig::new("");
        assert!(c.validate().is_err());
        c.endpoint = "http://x".into();
        c.timeout_ms = 0;
        assert!(c.validate().is_err());
        c.timeout_ms = 10;
        c.max_retries = 6;
        assert!(c.validate().is_err());
        c.max_retries = 5;
        assert!(HttpCorrector::new(c).is_ok());
    }

    #[test]
    fn url_joining() {
        assert_eq!(
            CorrectorConfig::new("http://h:1/").url("correct"),
            "http://h:1/correct"
        );
        assert_eq!(
            CorrectorConfig::new("http://h:1").url("healthz"),
            "http://h:1/healthz"
        );
    }

    #[test]
    fn on_error_parse() {
        assert_eq!("fail".parse::<OnError>(), Ok(OnError::Fail));
        assert_eq!("passthrough".parse::<OnError>(), Ok(OnError::Passthrough));
        assert!("retry".parse::<OnError>().is_err());
    }

    #[test]
    fn corrector_is_shareable() {
        fn assert_shareable<T: Send + Sync + ?Sized>() {}
        assert_shareable::<HttpCorrector>();
        assert_shareable::<dyn Corrector>();
    }
}
