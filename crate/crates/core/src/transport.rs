//! Blocking JSON-over-HTTP with retry and an in-flight request cap, shared by
//! the remote embedding and LLM backends.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::Value;

#[derive(Debug, Clone)]
pub struct TransportConfig {
    pub timeout: Duration,
    /// Retries after the first attempt, for timeouts, 429 and 5xx.
    pub max_retries: u32,
    /// First backoff delay; doubled on each retry.
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            max_retries: 2,
            backoff: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub struct HttpTransport {
    agent: ureq::Agent,
    config: TransportConfig,
    in_flight: Semaphore,
}

impl HttpTransport {
    pub fn new(config: TransportConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            in_flight: Semaphore::new(config.max_in_flight.max(1)),
            config,
        }
    }

    /// POSTs `body` and returns the decoded JSON response.
    pub fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value, TransportError> {
        let _permit = self.in_flight.acquire();
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        loop {
            match self.send_once(url, bearer, body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(msg)) => return Err(TransportError(msg)),
                Err(Failure::Retryable(msg)) => {
                    if attempt >= self.config.max_retries {
                        return Err(TransportError(format!(
                            "{msg} (gave up after {} attempts)",
                            attempt + 1
                        )));
                    }
                    log::warn!("request to {url} failed: {msg}; retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn send_once(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value, Failure> {
        let mut request = self.agent.post(url);
        if let Some(token) = bearer {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request.send_json(body).map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(format!("reading response body: {e}")))?;
        match status {
            200..=299 => serde_json::from_str(&text).map_err(|e| Failure::Fatal(format!("response is not JSON: {e}"))),
            429 | 500..=599 => Err(Failure::Retryable(format!("HTTP {status}: {}", truncate(&text)))),
            _ => Err(Failure::Fatal(format!("HTTP {status}: {}", truncate(&text)))),
        }
    }
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.available.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.freed.notify_one();
    }
}

/// Reads a bearer token from the named environment variable.
pub fn token_from_env(var: Option<&str>) -> Result<Option<String>, TransportError> {
    match var {
        None => Ok(None),
        Some(name) => std::env::var(name)
            .map(Some)
            .map_err(|_| TransportError(format!("environment variable {name} is not set"))),
    }
}
