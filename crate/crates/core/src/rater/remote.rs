//! Chat-completions rater: one request per unseen state, answered with a
//! JSON object mapping every action name to a score.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "IGE_LLM_API_KEY";
pub const BASE_URL_ENV: &str = "IGE_LLM_BASE_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    /// Falls back to `IGE_LLM_BASE_URL`.
    pub base_url: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub backoff_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: None,
            model: "gpt-4".into(),
            temperature: 0.0,
            max_retries: 3,
            timeout_secs: 60,
            backoff_ms: 500,
        }
    }
}

/// Scores in `action_names` order from the last JSON object in `text`.
/// Scores outside `[0, 1]` are clamped with a warning.
pub fn parse_scores(text: &str, action_names: &[String]) -> Result<Vec<f64>> {
    let object = last_json_object(text)
        .ok_or_else(|| Error::Parse(format!("no JSON object in response {text:?}")))?;
    action_names
        .iter()
        .map(|name| {
            let raw = object
                .get(name)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("response has no numeric score for {name:?}")))?;
            if !raw.is_finite() {
                return Err(Error::Parse(format!("score {raw} for {name:?}")));
            }
            let clamped = raw.clamp(0.0, 1.0);
            if clamped != raw {
                log::warn!("score {raw} for {name:?} clamped to {clamped}");
            }
            Ok(clamped)
        })
        .collect()
}

fn last_json_object(text: &str) -> Option<Map<String, Value>> {
    let end = text.rfind('}')?;
    text[..end]
        .char_indices()
        .rev()
        .filter(|&(_, c)| c == '{')
        .find_map(|(start, _)| serde_json::from_str::<Map<String, Value>>(&text[start..=end]).ok())
}

#[cfg(feature = "remote")]
pub use client::RemoteClient;

#[cfg(feature = "remote")]
mod client {
    use std::thread;
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::{parse_scores, RemoteConfig, API_KEY_ENV, BASE_URL_ENV};
    use crate::error::{Error, Result};
    use crate::rater::prompt::PromptTemplate;

    pub struct RemoteClient {
        agent: ureq::Agent,
        endpoint: String,
        api_key: String,
        config: RemoteConfig,
        template: PromptTemplate,
        /// Failed attempts that were retried, over the client's lifetime.
        pub retries: u64,
    }

    impl RemoteClient {
        /// Reads the key from `IGE_LLM_API_KEY` when `api_key` is `None`.
        pub fn new(config: RemoteConfig, template: PromptTemplate, api_key: Option<String>) -> Result<Self> {
            let api_key = match api_key {
                Some(k) => k,
                None => std::env::var(API_KEY_ENV)
                    .map_err(|_| Error::Config(format!("{API_KEY_ENV} is not set")))?,
            };
            let base = match &config.base_url {
                Some(u) => u.clone(),
                None => std::env::var(BASE_URL_ENV)
                    .map_err(|_| Error::Config(format!("no base_url configured and {BASE_URL_ENV} is not set")))?,
            };
            let endpoint = format!("{}/v1/chat/completions", base.trim_end_matches('/'));
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
                .http_status_as_error(true)
                .build()
                .into();
            Ok(Self {
                agent,
                endpoint,
                api_key,
                config,
                template,
                retries: 0,
            })
        }

        fn request(&self, body: &Value) -> Result<String> {
            let mut resp = self
                .agent
                .post(&self.endpoint)
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(body)
                .map_err(|e| Error::Backend(e.to_string()))?;
            let reply: Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| Error::Backend(format!("unreadable response body: {e}")))?;
            reply["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_owned)
                .ok_or_else(|| Error::Parse("response has no choices[0].message.content".into()))
        }

        /// One score per action, retrying transport and parse failures.
        pub fn rate(&mut self, state: &str, action_names: &[String]) -> Result<Vec<f64>> {
            let (system, user) = self.template.render(state, action_names);
            let body = json!({
                "model": self.config.model,
                "temperature": self.config.temperature,
                "messages": [
                    {"role": "system", "content": system},
                    {"role": "user", "content": user},
                ],
            });
            let mut last_error = None;
            for attempt in 0..=self.config.max_retries {
                if attempt > 0 {
                    self.retries += 1;
                    let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(6));
                    thread::sleep(Duration::from_millis(wait));
                }
                match self.request(&body).and_then(|text| parse_scores(&text, action_names)) {
                    Ok(scores) => return Ok(scores),
                    Err(e) => {
                        log::warn!("rating attempt {} failed: {e}", attempt + 1);
                        last_error = Some(e);
                    }
                }
            }
            Err(Error::Backend(format!(
                "gave up after {} attempts: {}",
                self.config.max_retries + 1,
                last_error.map(|e| e.to_string()).unwrap_or_default()
            )))
        }
    }
}
