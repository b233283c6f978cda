use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompts::{equiv_formalize_prompt, msan_formalize_prompt, msan_trace_prompt, split_explanation};
use super::source::{FactSource, Request, SourceError, Task};

pub const URL_ENV: &str = "CLAIMCHECK_LLM_URL";
pub const TOKEN_ENV: &str = "CLAIMCHECK_LLM_TOKEN";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub url: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout: Duration,
    pub template: String,
    /// Log request and response bodies verbatim.
    pub debug: bool,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>) -> HttpConfig {
        HttpConfig {
            url: url.into(),
            token_env: TOKEN_ENV.into(),
            timeout: Duration::from_secs(120),
            template: "v1".into(),
            debug: false,
        }
    }

    pub fn from_env() -> Result<HttpConfig, SourceError> {
        std::env::var(URL_ENV)
            .map(HttpConfig::new)
            .map_err(|_| SourceError::Config(format!("{URL_ENV} is not set")))
    }
}

#[derive(Debug, Serialize)]
struct Body<'a> {
    system: &'a str,
    user: &'a str,
}

#[derive(Debug, Deserialize)]
struct Reply {
    text: String,
}

pub struct HttpSource {
    cfg: HttpConfig,
    client: reqwest::blocking::Client,
}

pub fn http_source(cfg: HttpConfig) -> Result<HttpSource, SourceError> {
    if cfg.template != "v1" {
        return Err(SourceError::Config(format!("unknown prompt template `{}`", cfg.template)));
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(cfg.timeout)
        .build()
        .map_err(|e| SourceError::Transport(e.to_string()))?;
    Ok(HttpSource { cfg, client })
}

fn prior_block(req: &Request) -> String {
    if req.prior_facts.trim().is_empty() {
        String::new()
    } else {
        format!("\n\nFACTS SO FAR (add only what is missing):\n{}", req.prior_facts)
    }
}

impl HttpSource {
    fn post(&self, system: &str, user: &str) -> Result<String, SourceError> {
        let body = Body { system, user };
        if self.cfg.debug {
            log::info!(
                "request to {}: {}",
                self.cfg.url,
                serde_json::to_string(&body).unwrap_or_default()
            );
        }
        let mut call = self.client.post(&self.cfg.url).json(&body);
        if let Ok(token) = std::env::var(&self.cfg.token_env) {
            call = call.bearer_auth(token);
        }
        let resp = call.send().map_err(|e| {
            if e.is_timeout() {
                SourceError::Timeout
            } else {
                SourceError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| SourceError::Malformed(e.to_string()))?;
        if self.cfg.debug {
            log::info!("response {status}: {text}");
        }
        if !status.is_success() {
            return Err(SourceError::Status(status.as_u16()));
        }
        serde_json::from_str::<Reply>(&text)
            .map(|r| r.text)
            .map_err(|e| SourceError::Malformed(e.to_string()))
    }
}

impl FactSource for HttpSource {
    /// msan: one call to turn the snippets into a trace, a second to
    /// formalize the trace. equiv: a single call with the vocabulary
    /// prompt as system text and the snippets as user text.
    fn propose(&self, req: &Request) -> Result<String, SourceError> {
        match req.task {
            Task::Msan => {
                let (context, explanation) = split_explanation(&req.snippets);
                let trace = self.post(&msan_trace_prompt(context, explanation), "")?;
                self.post(&msan_formalize_prompt(&trace), &prior_block(req))
            }
            Task::Equiv => {
                let user = format!("{}{}", req.snippets, prior_block(req));
                self.post(&equiv_formalize_prompt(), &user)
            }
        }
    }
}
