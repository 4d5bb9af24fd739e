//! Remote target protocol tests: wire format, validation, and the
//! retry/no-retry split between transport and protocol failures.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use subvertext::backends::remote::RemoteTarget;
use subvertext::backends::TargetModel;
use subvertext::text::tokenize;
use subvertext::Error;

struct Server {
    url: String,
    hits: Arc<AtomicUsize>,
    bodies: Arc<std::sync::Mutex<Vec<String>>>,
    headers: Arc<std::sync::Mutex<Vec<(String, String)>>>,
    stop: Arc<std::sync::atomic::AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl Server {
    fn serve(body: &'static str, status: u16) -> Server {
        let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let url = format!("http://{}/predict", server.server_addr());
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(std::sync::Mutex::new(Vec::new()));
        let headers = Arc::new(std::sync::Mutex::new(Vec::new()));
        let stop = Arc::new(std::sync::atomic::AtomicBool::new(false));
        let (t_hits, t_bodies, t_headers, t_stop) =
            (hits.clone(), bodies.clone(), headers.clone(), stop.clone());
        let handle = std::thread::spawn(move || {
            while !t_stop.load(Ordering::SeqCst) {
                match server.recv_timeout(Duration::from_millis(20)) {
                    Ok(Some(mut request)) => {
                        t_hits.fetch_add(1, Ordering::SeqCst);
                        let mut received = String::new();
                        let _ = request.as_reader().read_to_string(&mut received);
                        t_bodies.lock().unwrap().push(received);
                        for header in request.headers() {
                            t_headers.lock().unwrap().push((
                                header.field.as_str().as_str().to_lowercase(),
                                header.value.as_str().to_string(),
                            ));
                        }
                        let response = tiny_http::Response::from_string(body)
                            .with_status_code(status)
                            .with_header(
                                tiny_http::Header::from_bytes(
                                    &b"Content-Type"[..],
                                    &b"application/json"[..],
                                )
                                .unwrap(),
                            );
                        let _ = request.respond(response);
                    }
                    Ok(None) => continue,
                    Err(_) => break,
                }
            }
        });
        Server {
            url,
            hits,
            bodies,
            headers,
            stop,
            handle: Some(handle),
        }
    }

    fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn fast(target: RemoteTarget) -> RemoteTarget {
    target.with_retry(3, Duration::from_millis(1))
}

#[test]
fn request_body_carries_the_detokenized_text() {
    let server = Server::serve(r#"{"scores": [0.4, 0.6], "label": 1}"#, 200);
    let target = fast(RemoteTarget::new(&server.url));
    let text = tokenize("Great location! Nice staff.").unwrap();
    target.predict(&text).unwrap();
    let bodies = server.bodies.lock().unwrap();
    assert_eq!(bodies.len(), 1);
    let parsed: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(parsed["text"], "Great location! Nice staff.");
}

#[test]
fn api_key_header_is_forwarded() {
    let server = Server::serve(r#"{"scores": [0.4, 0.6], "label": 1}"#, 200);
    let target = fast(RemoteTarget::new(&server.url).with_api_key("x-api-key", "sesame"));
    target.predict(&tokenize("hello there").unwrap()).unwrap();
    let headers = server.headers.lock().unwrap();
    assert!(headers
        .iter()
        .any(|(name, value)| name == "x-api-key" && value == "sesame"));
}

#[test]
fn malformed_json_is_a_protocol_error_without_retries() {
    let server = Server::serve("this is not json", 200);
    let target = fast(RemoteTarget::new(&server.url));
    let err = target.predict(&tokenize("hello").unwrap()).unwrap_err();
    assert!(matches!(err, Error::ProtocolError(_)), "got {err:?}");
    assert_eq!(server.hits(), 1, "protocol errors must not be retried");
}

#[test]
fn scores_must_sum_to_one() {
    let server = Server::serve(r#"{"scores": [0.4, 0.4], "label": 0}"#, 200);
    let target = fast(RemoteTarget::new(&server.url));
    let err = target.predict(&tokenize("hello").unwrap()).unwrap_err();
    assert!(matches!(err, Error::ProtocolError(_)), "got {err:?}");
}

#[test]
fn label_must_be_an_argmax_of_the_scores() {
    let server = Server::serve(r#"{"scores": [0.7, 0.3], "label": 1}"#, 200);
    let target = fast(RemoteTarget::new(&server.url));
    let err = target.predict(&tokenize("hello").unwrap()).unwrap_err();
    assert!(matches!(err, Error::ProtocolError(_)), "got {err:?}");
}

#[test]
fn out_of_range_label_is_rejected() {
    let server = Server::serve(r#"{"scores": [0.5, 0.5], "label": 7}"#, 200);
    let target = fast(RemoteTarget::new(&server.url));
    let err = target.predict(&tokenize("hello").unwrap()).unwrap_err();
    assert!(matches!(err, Error::ProtocolError(_)), "got {err:?}");
}

#[test]
fn tied_scores_normalize_to_the_lowest_index() {
    // the remote may claim either argmax on a tie; local wrapping keeps
    // the deterministic lowest-index rule
    let server = Server::serve(r#"{"scores": [0.5, 0.5], "label": 1}"#, 200);
    let target = fast(RemoteTarget::new(&server.url));
    let prediction = target.predict(&tokenize("hello").unwrap()).unwrap();
    assert_eq!(prediction.predicted.id, 0);
}

#[test]
fn non_200_status_becomes_target_unavailable_after_retries() {
    let server = Server::serve("oops", 503);
    let target = fast(RemoteTarget::new(&server.url));
    let err = target.predict(&tokenize("hello").unwrap()).unwrap_err();
    assert!(matches!(err, Error::TargetUnavailable(_)), "got {err:?}");
    assert_eq!(server.hits(), 3);
}

#[test]
fn unreachable_host_is_target_unavailable() {
    // nothing listens here; connection is refused immediately
    let target = RemoteTarget::new("http://127.0.0.1:9/predict")
        .with_retry(2, Duration::from_millis(1));
    let err = target.predict(&tokenize("hello").unwrap()).unwrap_err();
    assert!(matches!(err, Error::TargetUnavailable(_)), "got {err:?}");
}
