use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::endpoint::{AgentEndpoint, Stimulus};
use crate::error::AgentError;
use crate::reply::AgentReply;

/// The wire beneath an agent call. Implementations must be shareable across
/// threads; the pipeline issues concurrent calls and re-sorts results itself.
pub trait Transport: Send + Sync {
    fn send(
        &self,
        endpoint: &AgentEndpoint,
        system_text: &str,
        stimulus: &Stimulus,
    ) -> Result<AgentReply, AgentError>;
}

/// Exponential backoff for transient transport failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_retries: 0,
            base_delay: Duration::ZERO,
        }
    }

    /// Retries without meaningful delay, for tests.
    pub fn immediate(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::from_millis(1),
        }
    }

    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

/// One agent call with retries.
///
/// Transient failures (timeouts, connection errors, 408/429/5xx) are retried
/// up to the policy's count with exponential backoff; malformed-request
/// errors are never retried. A reply missing requested token alternatives is
/// malformed.
pub fn complete(
    transport: &dyn Transport,
    endpoint: &AgentEndpoint,
    system_text: &str,
    stimulus: &Stimulus,
    policy: &RetryPolicy,
) -> Result<AgentReply, AgentError> {
    stimulus.check_for_role(endpoint.role)?;
    let mut attempt = 0;
    loop {
        match transport.send(endpoint, system_text, stimulus) {
            Ok(reply) => {
                if endpoint.request_logprobs && reply.first_token_alternatives.is_empty() {
                    return Err(AgentError::MalformedReply(
                        "token alternatives were requested but are absent".to_string(),
                    ));
                }
                return Ok(reply);
            }
            Err(err) if err.is_transient() && attempt < policy.max_retries => {
                log::debug!(
                    "transient agent failure (attempt {}): {err}",
                    attempt + 1
                );
                std::thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

/// An endpoint bound to its transport and retry policy, with a shared call
/// counter. Clones share the transport and the counter.
#[derive(Clone)]
pub struct AgentHandle {
    pub endpoint: AgentEndpoint,
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    calls: Arc<AtomicU64>,
}

impl AgentHandle {
    pub fn new(endpoint: AgentEndpoint, transport: Arc<dyn Transport>) -> Self {
        AgentHandle {
            endpoint,
            transport,
            retry: RetryPolicy::default(),
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// A handle to the same agent at a different sampling temperature.
    pub fn at_temperature(&self, temperature: f64) -> Self {
        let mut clone = self.clone();
        clone.endpoint = clone.endpoint.with_temperature(temperature);
        clone
    }

    pub fn complete(&self, system_text: &str, stimulus: &Stimulus) -> Result<AgentReply, AgentError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        complete(self.transport.as_ref(), &self.endpoint, system_text, stimulus, &self.retry)
    }

    /// Total calls issued through this handle (and its clones).
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn transport(&self) -> &Arc<dyn Transport> {
        &self.transport
    }
}

impl std::fmt::Debug for AgentHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgentHandle")
            .field("endpoint", &self.endpoint)
            .field("calls", &self.calls())
            .finish()
    }
}

/// Replays recorded replies keyed by the exact user text.
///
/// Each key holds a queue; the final reply for a key keeps replaying, so
/// repeated identical calls are deterministic. Prompts are logged for
/// assertion in tests.
#[derive(Default)]
pub struct TranscriptTransport {
    scripts: Mutex<BTreeMap<String, VecDeque<AgentReply>>>,
    default_reply: Option<AgentReply>,
    seen: Mutex<Vec<String>>,
}

impl TranscriptTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_default(mut self, reply: AgentReply) -> Self {
        self.default_reply = Some(reply);
        self
    }

    pub fn add(&self, user_text: impl Into<String>, reply: AgentReply) {
        self.scripts
            .lock()
            .unwrap()
            .entry(user_text.into())
            .or_default()
            .push_back(reply);
    }

    pub fn add_text(&self, user_text: impl Into<String>, reply_text: impl Into<String>) {
        self.add(user_text, AgentReply::text_only(reply_text));
    }

    /// Every user prompt seen, in call order.
    pub fn prompts(&self) -> Vec<String> {
        self.seen.lock().unwrap().clone()
    }
}

impl Transport for TranscriptTransport {
    fn send(
        &self,
        _endpoint: &AgentEndpoint,
        _system_text: &str,
        stimulus: &Stimulus,
    ) -> Result<AgentReply, AgentError> {
        self.seen.lock().unwrap().push(stimulus.text.clone());
        let mut scripts = self.scripts.lock().unwrap();
        if let Some(queue) = scripts.get_mut(&stimulus.text) {
            if queue.len() > 1 {
                return Ok(queue.pop_front().expect("non-empty queue"));
            }
            if let Some(last) = queue.front() {
                return Ok(last.clone());
            }
        }
        self.default_reply.clone().ok_or_else(|| {
            AgentError::MalformedRequest(format!(
                "no transcript entry for prompt {:?}",
                stimulus.text
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endpoint::AgentRole;

    struct FlakyTransport {
        failures: AtomicU64,
        fail_with: AgentError,
    }

    impl Transport for FlakyTransport {
        fn send(
            &self,
            _endpoint: &AgentEndpoint,
            _system: &str,
            _stimulus: &Stimulus,
        ) -> Result<AgentReply, AgentError> {
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                return Err(self.fail_with.clone());
            }
            Ok(AgentReply::text_only("ok"))
        }
    }

    fn text_endpoint() -> AgentEndpoint {
        AgentEndpoint::new(AgentRole::Linguistic, "mock", "m")
    }

    #[test]
    fn transcript_replays_verbatim_and_repeats_last() {
        let transport = TranscriptTransport::new();
        transport.add_text("q", "first");
        transport.add_text("q", "second");
        let ep = text_endpoint();
        let stim = Stimulus::text_only("q");
        let policy = RetryPolicy::none();
        assert_eq!(complete(&transport, &ep, "", &stim, &policy).unwrap().text, "first");
        assert_eq!(complete(&transport, &ep, "", &stim, &policy).unwrap().text, "second");
        assert_eq!(complete(&transport, &ep, "", &stim, &policy).unwrap().text, "second");
    }

    #[test]
    fn unknown_prompt_without_default_is_malformed() {
        let transport = TranscriptTransport::new();
        let err = complete(
            &transport,
            &text_endpoint(),
            "",
            &Stimulus::text_only("unseen"),
            &RetryPolicy::none(),
        )
        .unwrap_err();
        assert!(matches!(err, AgentError::MalformedRequest(_)));
    }

    #[test]
    fn transient_errors_are_retried_until_success() {
        let transport = FlakyTransport {
            failures: AtomicU64::new(2),
            fail_with: AgentError::Transport {
                status: Some(503),
                message: "unavailable".into(),
            },
        };
        let reply = complete(
            &transport,
            &text_endpoint(),
            "",
            &Stimulus::text_only("q"),
            &RetryPolicy::immediate(3),
        )
        .unwrap();
        assert_eq!(reply.text, "ok");
    }

    #[test]
    fn retries_exhaust_into_the_original_error() {
        let transport = FlakyTransport {
            failures: AtomicU64::new(10),
            fail_with: AgentError::Timeout,
        };
        let err = complete(
            &transport,
            &text_endpoint(),
            "",
            &Stimulus::text_only("q"),
            &RetryPolicy::immediate(2),
        )
        .unwrap_err();
        assert_eq!(err, AgentError::Timeout);
    }

    #[test]
    fn malformed_request_is_never_retried() {
        let transport = FlakyTransport {
            failures: AtomicU64::new(5),
            fail_with: AgentError::MalformedRequest("bad".into()),
        };
        let err = complete(
            &transport,
            &text_endpoint(),
            "",
            &Stimulus::text_only("q"),
            &RetryPolicy::immediate(5),
        )
        .unwrap_err();
        assert!(matches!(err, AgentError::MalformedRequest(_)));
        // only one failure consumed: no retry happened
        assert_eq!(transport.failures.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn missing_requested_alternatives_is_malformed_reply() {
        let transport = TranscriptTransport::new();
        transport.add_text("q", "Yes");
        let ep = AgentEndpoint::new(AgentRole::Verifier, "mock", "m");
        let err = complete(
            &transport,
            &ep,
            "",
            &Stimulus::with_synth("q", "img"),
            &RetryPolicy::none(),
        )
        .unwrap_err();
        assert!(matches!(err, AgentError::MalformedReply(_)));
    }

    #[test]
    fn handle_counts_calls_across_clones() {
        let transport = Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("ok")));
        let handle = AgentHandle::new(text_endpoint(), transport).with_retry(RetryPolicy::none());
        let variant = handle.at_temperature(0.0);
        handle.complete("", &Stimulus::text_only("a")).unwrap();
        variant.complete("", &Stimulus::text_only("b")).unwrap();
        assert_eq!(handle.calls(), 2);
        assert_eq!(variant.endpoint.temperature, 0.0);
        assert_eq!(handle.endpoint.temperature, 0.7);
    }
}
