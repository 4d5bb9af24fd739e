//! HTTP client for attacking a remote prediction endpoint.
//!
//! Protocol: `POST <url>` with JSON body `{"text": "..."}`; the endpoint
//! answers `{"scores": [f64, ...], "label": usize}`. Transport failures
//! and non-200 statuses are retried with exponential backoff and then
//! reported as `TargetUnavailable`; responses that parse but violate the
//! protocol are `ProtocolError` and are not retried.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backends::TargetModel;
use crate::error::{Error, Result};
use crate::text::TokenizedText;
use crate::types::Prediction;

/// Env var naming the endpoint URL when no explicit URL is given.
pub const TARGET_URL_ENV: &str = "SUBVERTEXT_TARGET_URL";
/// Env var holding the API key value, sent when present.
pub const API_KEY_ENV: &str = "SUBVERTEXT_API_KEY";
/// Env var overriding the API key header name (default "x-api-key").
pub const API_KEY_HEADER_ENV: &str = "SUBVERTEXT_API_KEY_HEADER";

const DEFAULT_API_KEY_HEADER: &str = "x-api-key";

#[derive(Serialize)]
struct PredictRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct PredictResponse {
    scores: Vec<f64>,
    label: usize,
}

pub struct RemoteTarget {
    agent: ureq::Agent,
    url: String,
    api_key: Option<(String, String)>,
    max_attempts: u32,
    backoff: Duration,
}

impl RemoteTarget {
    pub fn new(url: impl Into<String>) -> Self {
        let config = ureq::config::Config::builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        RemoteTarget {
            agent: config.new_agent(),
            url: url.into(),
            api_key: None,
            max_attempts: 3,
            backoff: Duration::from_millis(250),
        }
    }

    /// Resolve the endpoint from an explicit URL or the environment, and
    /// pick up the API key if configured.
    pub fn from_env(url: Option<String>) -> Result<Self> {
        let url = match url.or_else(|| std::env::var(TARGET_URL_ENV).ok()) {
            Some(url) => url,
            None => {
                return Err(Error::InvalidConfig(format!(
                    "no target URL given and {TARGET_URL_ENV} is unset"
                )))
            }
        };
        let mut target = RemoteTarget::new(url);
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            let header = std::env::var(API_KEY_HEADER_ENV)
                .unwrap_or_else(|_| DEFAULT_API_KEY_HEADER.to_string());
            target = target.with_api_key(header, key);
        }
        Ok(target)
    }

    pub fn with_api_key(mut self, header: impl Into<String>, value: impl Into<String>) -> Self {
        self.api_key = Some((header.into(), value.into()));
        self
    }

    /// Tune the retry policy (attempts includes the first try).
    pub fn with_retry(mut self, max_attempts: u32, backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.backoff = backoff;
        self
    }

    fn send_once(&self, body: &PredictRequest<'_>) -> std::result::Result<PredictResponse, Step> {
        let mut request = self.agent.post(&self.url);
        if let Some((header, value)) = &self.api_key {
            request = request.header(header.as_str(), value.as_str());
        }
        match request.send_json(body) {
            Ok(mut response) => response
                .body_mut()
                .read_json::<PredictResponse>()
                .map_err(|e| Step::Fatal(Error::ProtocolError(format!("malformed response: {e}")))),
            Err(ureq::Error::StatusCode(code)) => {
                Step::retriable(format!("endpoint returned status {code}"))
            }
            Err(e) => Step::retriable(format!("transport failure: {e}")),
        }
    }

    fn wrap(&self, response: PredictResponse) -> Result<Prediction> {
        let sum: f64 = response.scores.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::ProtocolError(format!(
                "scores sum to {sum}, expected 1 within 1e-6"
            )));
        }
        let prediction = Prediction::from_scores(response.scores)
            .map_err(|e| Error::ProtocolError(e.to_string()))?;
        let claimed = prediction
            .scores
            .get(response.label)
            .copied()
            .ok_or_else(|| {
                Error::ProtocolError(format!(
                    "label {} out of range for {} scores",
                    response.label,
                    prediction.num_classes()
                ))
            })?;
        let max = prediction.scores[prediction.predicted.id];
        if claimed < max {
            return Err(Error::ProtocolError(format!(
                "label {} is not an argmax of the returned scores",
                response.label
            )));
        }
        // Ties are normalized to the lowest class index, matching local
        // prediction wrapping.
        Ok(prediction)
    }
}

enum Step {
    Retriable(String),
    Fatal(Error),
}

impl Step {
    fn retriable<T>(message: String) -> std::result::Result<T, Step> {
        Err(Step::Retriable(message))
    }
}

impl TargetModel for RemoteTarget {
    fn predict(&self, text: &TokenizedText) -> Result<Prediction> {
        let rendered = text.detokenize();
        let body = PredictRequest { text: &rendered };
        let mut delay = self.backoff;
        let mut last_message = String::new();
        for attempt in 1..=self.max_attempts {
            match self.send_once(&body) {
                Ok(response) => return self.wrap(response),
                Err(Step::Fatal(e)) => return Err(e),
                Err(Step::Retriable(message)) => {
                    last_message = message;
                    if attempt < self.max_attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(Error::TargetUnavailable(format!(
            "{last_message} (after {} attempts)",
            self.max_attempts
        )))
    }
}
