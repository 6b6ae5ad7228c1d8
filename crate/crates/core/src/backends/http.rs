//! Blocking JSON-over-HTTP client for the model shim.
//!
//! Endpoints:
//!
//! | method | path         | request                                   | response                                  |
//! |--------|--------------|-------------------------------------------|-------------------------------------------|
//! | POST   | `/fill_mask` | `{"tokens": [..], "mask_index": i, "k": k}` | `{"predictions": [{"token", "score"}, ..]}` |
//! | POST   | `/encode`    | `{"texts": [..]}`                         | `{"vectors": [[f64; 384], ..]}`           |
//! | POST   | `/translate` | `{"text", "src", "tgt"}`                  | `{"text": ..}`                            |
//! | GET    | `/health`    |                                           | `{"status": "ok", "model": ..}`           |
//!
//! All requests are idempotent, so transport failures and 5xx responses are
//! retried up to the configured count.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    BackendConfig, BackendError, BackendInfo, BackendKind, MaskPrediction, MaskPredictor, MaskQuery, SentenceEncoder,
    Translator,
};

#[derive(Serialize)]
struct FillMaskRequest<'a> {
    tokens: &'a [String],
    mask_index: usize,
    k: usize,
}

#[derive(Deserialize)]
struct FillMaskResponse {
    predictions: Vec<MaskPrediction>,
}

#[derive(Serialize)]
struct EncodeRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EncodeResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    src: &'a str,
    tgt: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model: String,
    #[serde(default)]
    pub param_count: Option<serde_json::Value>,
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().expect("limiter poisoned");
        while *n == 0 {
            n = self.freed.wait(n).expect("limiter poisoned");
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().expect("limiter poisoned") += 1;
        self.0.freed.notify_one();
    }
}

/// Client for all three capabilities of one shim instance.
#[derive(Debug)]
pub struct HttpBackend {
    agent: ureq::Agent,
    base: String,
    retries: u32,
    limiter: Limiter,
    model_name: Option<String>,
}

enum Attempt<T> {
    Done(T),
    Retry(String),
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        if config.kind != BackendKind::Http {
            return Err(BackendError::Config("HttpBackend needs kind = http".into()));
        }
        config.validate()?;
        let base = config
            .endpoint
            .as_deref()
            .unwrap_or_default()
            .trim_end_matches('/')
            .to_string();
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .proxy(None)
            .build();
        Ok(Self {
            agent: ureq::Agent::new_with_config(agent_config),
            base,
            retries: config.retries,
            limiter: Limiter::new(config.max_inflight),
            model_name: config.model_name.clone(),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    fn unavailable(&self, reason: impl Into<String>) -> BackendError {
        BackendError::Unavailable {
            endpoint: self.base.clone(),
            reason: reason.into(),
        }
    }

    fn call<T, F>(&self, path: &str, send: F) -> Result<T, BackendError>
    where
        T: DeserializeOwned,
        F: Fn(&ureq::Agent, &str) -> Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    {
        let url = format!("{}{}", self.base, path);
        let _permit = self.limiter.acquire();
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
            }
            match self.attempt(&url, &send)? {
                Attempt::Done(v) => return Ok(v),
                Attempt::Retry(reason) => {
                    log::debug!("{url}: attempt {} failed: {reason}", attempt + 1);
                    last = reason;
                }
            }
        }
        Err(self.unavailable(format!("{path}: {last} (after {} attempts)", self.retries + 1)))
    }

    fn attempt<T, F>(&self, url: &str, send: &F) -> Result<Attempt<T>, BackendError>
    where
        T: DeserializeOwned,
        F: Fn(&ureq::Agent, &str) -> Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    {
        let mut response = match send(&self.agent, url) {
            Ok(r) => r,
            Err(e @ (ureq::Error::BadUri(_) | ureq::Error::Http(_))) => {
                return Err(BackendError::Config(e.to_string()))
            }
            Err(e) => return Ok(Attempt::Retry(e.to_string())),
        };
        let status = response.status().as_u16();
        match status {
            200..=299 => response
                .body_mut()
                .read_json::<T>()
                .map(Attempt::Done)
                .map_err(|e| BackendError::MalformedResponse(format!("{url}: {e}"))),
            500..=599 => Ok(Attempt::Retry(format!("HTTP {status}"))),
            _ => {
                let body = response.body_mut().read_to_string().unwrap_or_default();
                let detail = format!("{url}: HTTP {status}: {}", body.trim());
                Err(if status == 400 || status == 422 {
                    BackendError::InvalidRequest(detail)
                } else {
                    BackendError::MalformedResponse(detail)
                })
            }
        }
    }

    pub fn health(&self) -> Result<HealthResponse, BackendError> {
        let h: HealthResponse = self.call("/health", |agent, url| agent.get(url).call())?;
        if h.status != "ok" {
            return Err(self.unavailable(format!("health status {:?}", h.status)));
        }
        Ok(h)
    }

    fn describe(&self) -> BackendInfo {
        let (model, param_count) = match self.health() {
            Ok(h) => (
                h.model,
                h.param_count.map(|v| match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                }),
            ),
            Err(_) => (self.model_name.clone().unwrap_or_else(|| "unknown".into()), None),
        };
        BackendInfo {
            kind: BackendKind::Http,
            model,
            param_count,
            endpoint: Some(self.base.clone()),
        }
    }
}

impl MaskPredictor for HttpBackend {
    fn predict(&self, query: &MaskQuery<'_>) -> Result<Vec<MaskPrediction>, BackendError> {
        let body = FillMaskRequest {
            tokens: query.tokens,
            mask_index: query.mask_index,
            k: query.k,
        };
        let r: FillMaskResponse = self.call("/fill_mask", |agent, url| agent.post(url).send_json(&body))?;
        Ok(r.predictions)
    }

    fn info(&self) -> BackendInfo {
        self.describe()
    }
}

impl SentenceEncoder for HttpBackend {
    fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        let body = EncodeRequest { texts };
        let r: EncodeResponse = self.call("/encode", |agent, url| agent.post(url).send_json(&body))?;
        Ok(r.vectors)
    }

    fn info(&self) -> BackendInfo {
        self.describe()
    }
}

impl Translator for HttpBackend {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String, BackendError> {
        let body = TranslateRequest { text, src, tgt };
        let r: TranslateResponse = self.call("/translate", |agent, url| agent.post(url).send_json(&body))?;
        Ok(r.text)
    }

    fn info(&self) -> BackendInfo {
        self.describe()
    }
}
