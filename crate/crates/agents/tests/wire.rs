//! End-to-end wire tests against a minimal in-process HTTP stub.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crn_agents::{
    complete, AgentEndpoint, AgentError, AgentRole, HttpTransport, RetryPolicy, Stimulus,
};

struct StubServer {
    addr: String,
    hits: Arc<AtomicUsize>,
    shutdown: Arc<std::sync::atomic::AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

/// Serves `responses` one per connection (status, body), then repeats the
/// last one. Records every request body it sees.
fn spawn_stub(responses: Vec<(u16, String)>) -> (StubServer, Arc<std::sync::Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let shutdown = Arc::new(std::sync::atomic::AtomicBool::new(false));
    let bodies = Arc::new(std::sync::Mutex::new(Vec::new()));

    let hits_clone = hits.clone();
    let shutdown_clone = shutdown.clone();
    let bodies_clone = bodies.clone();
    let handle = std::thread::spawn(move || {
        let mut served = 0usize;
        for stream in listener.incoming() {
            if shutdown_clone.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { break };
            hits_clone.fetch_add(1, Ordering::SeqCst);
            let idx = served.min(responses.len() - 1);
            served += 1;
            let (status, body) = &responses[idx];
            if let Some(request_body) = handle_one(stream, *status, body) {
                bodies_clone.lock().unwrap().push(request_body);
            }
        }
    });

    (
        StubServer {
            addr,
            hits,
            shutdown,
            handle: Some(handle),
        },
        bodies,
    )
}

fn handle_one(mut stream: TcpStream, status: u16, body: &str) -> Option<String> {
    stream.set_read_timeout(Some(Duration::from_secs(2))).ok();
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        if let Some(value) = trimmed.to_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }
    let mut request_body = vec![0u8; content_length];
    reader.read_exact(&mut request_body).ok()?;

    let reason = if status == 200 { "OK" } else { "Error" };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes()).ok();
    stream.flush().ok();
    String::from_utf8(request_body).ok()
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // unblock the accept loop
        let _ = TcpStream::connect(self.addr.trim_start_matches("http://"));
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn ok_body() -> String {
    r#"{"choices":[{"message":{"content":"Yes."},"logprobs":{"content":[{"token":"Yes","logprob":-0.02,"top_logprobs":[{"token":"Yes","logprob":-0.02},{"token":"No","logprob":-3.9}]}]}}]}"#
        .to_string()
}

#[test]
fn posts_chat_completions_and_parses_reply() {
    let (server, bodies) = spawn_stub(vec![(200, ok_body())]);
    let transport = HttpTransport::with_timeout(Duration::from_secs(2))
        .unwrap()
        .with_api_key("test-key");
    let endpoint = AgentEndpoint::new(AgentRole::Linguistic, &server.addr, "test-model");

    let reply = complete(
        &transport,
        &endpoint,
        "system text",
        &Stimulus::text_only("hello"),
        &RetryPolicy::none(),
    )
    .unwrap();
    assert_eq!(reply.text, "Yes.");
    assert_eq!(reply.first_token_alternatives.len(), 2);

    let seen = bodies.lock().unwrap();
    let body: serde_json::Value = serde_json::from_str(&seen[0]).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"][0]["type"], "text");
}

#[test]
fn retries_5xx_then_succeeds() {
    let (server, _bodies) = spawn_stub(vec![
        (503, r#"{"error":"overloaded"}"#.to_string()),
        (503, r#"{"error":"overloaded"}"#.to_string()),
        (200, ok_body()),
    ]);
    let transport = HttpTransport::with_timeout(Duration::from_secs(2)).unwrap();
    let endpoint = AgentEndpoint::new(AgentRole::Linguistic, &server.addr, "m");

    let reply = complete(
        &transport,
        &endpoint,
        "",
        &Stimulus::text_only("q"),
        &RetryPolicy::immediate(3),
    )
    .unwrap();
    assert_eq!(reply.text, "Yes.");
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn bad_request_is_not_retried() {
    let (server, _bodies) = spawn_stub(vec![(400, r#"{"error":"bad"}"#.to_string())]);
    let transport = HttpTransport::with_timeout(Duration::from_secs(2)).unwrap();
    let endpoint = AgentEndpoint::new(AgentRole::Linguistic, &server.addr, "m");

    let err = complete(
        &transport,
        &endpoint,
        "",
        &Stimulus::text_only("q"),
        &RetryPolicy::immediate(3),
    )
    .unwrap_err();
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
    match err {
        AgentError::Transport { status, .. } => assert_eq!(status, Some(400)),
        other => panic!("expected transport error, got {other:?}"),
    }
}

#[test]
fn unreachable_host_errors_after_retries() {
    // a port from the reserved range that nothing listens on
    let transport = HttpTransport::with_timeout(Duration::from_millis(300)).unwrap();
    let endpoint = AgentEndpoint::new(AgentRole::Linguistic, "http://127.0.0.1:9", "m");
    let started = std::time::Instant::now();
    let err = complete(
        &transport,
        &endpoint,
        "",
        &Stimulus::text_only("q"),
        &RetryPolicy::immediate(2),
    )
    .unwrap_err();
    assert!(err.is_transient(), "connection failures are transient: {err:?}");
    assert!(started.elapsed() < Duration::from_secs(10));
}
