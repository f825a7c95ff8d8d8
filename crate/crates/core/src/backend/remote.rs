//! HTTP client for the remote backend protocol.
//!
//! `POST {base}/v1/generate` and `POST {base}/v1/score`, JSON in and out.
//! 4xx responses are terminal; 5xx responses and transport failures are
//! retried with exponential backoff.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::types::{prompt_digest, BackendError, Generation, GenerationRequest, ScoreMap, ScoreRequest};
use super::LanguageModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first one.
    pub retries: u32,
    /// Delay before the first retry; doubles on every further retry.
    pub backoff_ms: u64,
    /// Seed forwarded with generation requests that do not carry one.
    pub seed: Option<u64>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000".into(),
            timeout_ms: 30_000,
            retries: 2,
            backoff_ms: 200,
            seed: None,
        }
    }
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Deserialize)]
struct ScoreResponse {
    #[serde(with = "crate::logprob::map")]
    scores: ScoreMap,
}

pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend").field("config", &self.config).finish()
    }
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::InvalidRequest(format!("http client: {e}")))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &B,
        prompt: &str,
    ) -> Result<R, BackendError> {
        let digest = prompt_digest(prompt);
        let url = self.url(path);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            let response = match self.client.post(&url).json(body).send() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = response.status();
            if status.is_client_error() {
                return Err(BackendError::Rejected {
                    digest,
                    status: status.as_u16(),
                    message: response.text().unwrap_or_default(),
                });
            }
            if !status.is_success() {
                last = format!("status {status}");
                continue;
            }
            return response.json::<R>().map_err(|e| BackendError::Protocol {
                digest: digest.clone(),
                message: e.to_string(),
            });
        }
        Err(BackendError::Unreachable {
            digest,
            message: format!("{} attempts failed; last error: {last}", self.config.retries + 1),
        })
    }
}

impl LanguageModel for RemoteBackend {
    fn name(&self) -> String {
        format!("remote:{}", self.config.base_url)
    }

    fn generate(&self, req: &GenerationRequest) -> Result<Generation, BackendError> {
        req.validate()?;
        let mut req = req.clone();
        if req.seed.is_none() {
            req.seed = self.config.seed;
        }
        let g: Generation = self.post("/v1/generate", &req, &req.prompt)?;
        g.check().map_err(|message| BackendError::Protocol {
            digest: prompt_digest(&req.prompt),
            message,
        })?;
        Ok(g)
    }

    fn score_continuations(&self, req: &ScoreRequest) -> Result<ScoreMap, BackendError> {
        req.validate()?;
        let r: ScoreResponse = self.post("/v1/score", req, &req.prompt)?;
        Ok(req.complete(&r.scores))
    }
}
