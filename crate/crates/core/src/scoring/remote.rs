//! HTTP client for an external scorer service.

use std::thread::sleep;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ScoreError, ScoreMode, ScoreRequest, ScoredSequence, Scorer};

/// Maximum disagreement between the service's `log_prob` and the sum of
/// its token terms.
const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteOptions {
    pub timeout: Duration,
    /// Extra attempts after a transient failure.
    pub retries: u32,
    pub backoff: Duration,
    /// Send chunks to `/v1/score_batch` instead of one request per item.
    pub use_batch_endpoint: bool,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff: Duration::from_millis(200),
            use_batch_endpoint: true,
        }
    }
}

#[derive(Deserialize)]
struct Health {
    model_id: String,
    modes: Vec<ScoreMode>,
}

#[derive(Deserialize)]
struct WireScore {
    tokens: Vec<String>,
    token_log_probs: Vec<f64>,
    log_prob: f64,
    model_id: String,
}

#[derive(Serialize)]
struct BatchRequest<'a> {
    items: &'a [ScoreRequest],
}

#[derive(Deserialize)]
struct BatchResponse {
    items: Vec<WireScore>,
}

#[derive(Debug)]
pub struct RemoteScorer {
    base: String,
    agent: ureq::Agent,
    model_id: String,
    modes: Vec<ScoreMode>,
    opts: RemoteOptions,
}

impl RemoteScorer {
    /// Connects and checks `/v1/health`. Any failure names the endpoint.
    pub fn connect(base_url: &str, opts: RemoteOptions) -> Result<Self, ScoreError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(opts.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut scorer = Self {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
            model_id: String::new(),
            modes: Vec::new(),
            opts,
        };
        let health: Health = scorer.with_retries(|| scorer.get("/v1/health"))?;
        if health.model_id.is_empty() {
            return Err(ScoreError::InvalidResponse {
                endpoint: scorer.url("/v1/health"),
                message: "empty model_id".into(),
            });
        }
        scorer.model_id = health.model_id;
        scorer.modes = health.modes;
        Ok(scorer)
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn modes(&self) -> &[ScoreMode] {
        &self.modes
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn transport(&self, endpoint: String, e: ureq::Error) -> ScoreError {
        ScoreError::Transport {
            endpoint,
            message: e.to_string(),
        }
    }

    fn finish<T: DeserializeOwned>(
        &self,
        endpoint: String,
        resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<T, ScoreError> {
        let mut resp = resp.map_err(|e| self.transport(endpoint.clone(), e))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(ScoreError::Service {
                endpoint,
                status,
                body: body.chars().take(500).collect(),
            });
        }
        resp.body_mut()
            .read_json::<T>()
            .map_err(|e| ScoreError::InvalidResponse {
                endpoint,
                message: e.to_string(),
            })
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ScoreError> {
        let endpoint = self.url(path);
        let resp = self.agent.get(&endpoint).call();
        self.finish(endpoint, resp)
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ScoreError> {
        let endpoint = self.url(path);
        let resp = self.agent.post(&endpoint).send_json(body);
        self.finish(endpoint, resp)
    }

    /// Scoring is idempotent, so transient failures are simply retried.
    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T, ScoreError>) -> Result<T, ScoreError> {
        let mut attempt = 0;
        loop {
            match call() {
                Err(e) if e.is_transient() && attempt < self.opts.retries => {
                    sleep(self.opts.backoff * 2u32.saturating_pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn check(&self, endpoint: &str, wire: WireScore) -> Result<ScoredSequence, ScoreError> {
        let bad = |message: String| ScoreError::InvalidResponse {
            endpoint: endpoint.to_string(),
            message,
        };
        if wire.model_id != self.model_id {
            return Err(bad(format!(
                "model_id `{}` differs from health check `{}`",
                wire.model_id, self.model_id
            )));
        }
        if wire.tokens.is_empty() {
            return Err(bad("no target tokens".into()));
        }
        if wire.tokens.len() != wire.token_log_probs.len() {
            return Err(bad(format!(
                "{} tokens but {} log-probabilities",
                wire.tokens.len(),
                wire.token_log_probs.len()
            )));
        }
        if let Some((i, lp)) = wire
            .token_log_probs
            .iter()
            .enumerate()
            .find(|(_, lp)| !lp.is_finite() || **lp > 0.0)
        {
            return Err(bad(format!("token {i} has log-probability {lp}")));
        }
        let seq = ScoredSequence::from_tokens(wire.tokens, wire.token_log_probs);
        if !wire.log_prob.is_finite() || (seq.log_prob - wire.log_prob).abs() > SUM_TOLERANCE {
            return Err(bad(format!(
                "log_prob {} disagrees with token sum {}",
                wire.log_prob, seq.log_prob
            )));
        }
        Ok(seq)
    }

    fn unsupported(&self, mode: ScoreMode) -> ScoreError {
        ScoreError::UnsupportedMode {
            scorer: self.model_id.clone(),
            mode,
        }
    }
}

impl Scorer for RemoteScorer {
    fn identity(&self) -> String {
        self.model_id.clone()
    }

    fn supports(&self, mode: ScoreMode) -> bool {
        self.modes.contains(&mode)
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoredSequence, ScoreError> {
        if !self.supports(request.mode) {
            return Err(self.unsupported(request.mode));
        }
        if request.target.trim().is_empty() {
            return Err(ScoreError::EmptyTarget);
        }
        let wire: WireScore = self.with_retries(|| self.post("/v1/score", request))?;
        self.check(&self.url("/v1/score"), wire)
    }

    fn score_chunk(&self, requests: &[ScoreRequest]) -> Vec<Result<ScoredSequence, ScoreError>> {
        if !self.opts.use_batch_endpoint {
            return requests.iter().map(|r| self.score(r)).collect();
        }
        // Reject locally what the service would reject, then send the rest.
        let mut out: Vec<Option<Result<ScoredSequence, ScoreError>>> = requests
            .iter()
            .map(|r| {
                if !self.supports(r.mode) {
                    Some(Err(self.unsupported(r.mode)))
                } else if r.target.trim().is_empty() {
                    Some(Err(ScoreError::EmptyTarget))
                } else {
                    None
                }
            })
            .collect();
        let send: Vec<usize> = (0..requests.len()).filter(|&i| out[i].is_none()).collect();
        if !send.is_empty() {
            let items: Vec<ScoreRequest> = send.iter().map(|&i| requests[i].clone()).collect();
            let endpoint = self.url("/v1/score_batch");
            let reply: Result<BatchResponse, ScoreError> =
                self.with_retries(|| self.post("/v1/score_batch", &BatchRequest { items: &items }));
            match reply {
                Ok(reply) if reply.items.len() == send.len() => {
                    for (&i, wire) in send.iter().zip(reply.items) {
                        out[i] = Some(self.check(&endpoint, wire));
                    }
                }
                Ok(reply) => {
                    let e = ScoreError::InvalidResponse {
                        endpoint,
                        message: format!("{} items for {} requests", reply.items.len(), send.len()),
                    };
                    send.iter().for_each(|&i| out[i] = Some(Err(e.clone())));
                }
                Err(e) => send.iter().for_each(|&i| out[i] = Some(Err(e.clone()))),
            }
        }
        out.into_iter().map(|r| r.expect("every slot filled")).collect()
    }
}
