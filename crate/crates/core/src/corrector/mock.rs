//! A scripted in-process HTTP server speaking the correction protocol, for
//! tests and offline runs.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use serde::Deserialize;

#[derive(Debug, Clone)]
pub struct MockRequest {
    pub method: String,
    pub path: String,
    pub body: String,
}

#[derive(Debug, Clone)]
pub struct MockResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
}

impl MockResponse {
    pub fn text(status: u16, body: impl Into<String>) -> Self {
        MockResponse {
            status,
            content_type: "text/plain; charset=utf-8",
            body: body.into(),
        }
    }

    pub fn json(status: u16, value: serde_json::Value) -> Self {
        MockResponse {
            status,
            content_type: "application/json",
            body: value.to_string(),
        }
    }
}

type Handler = dyn Fn(&MockRequest, usize) -> MockResponse + Send + Sync;

/// Serves every connection with a handler; the handler also receives the
/// 0-based request sequence number so tests can script failures.
pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start<F>(handler: F) -> io::Result<Self>
    where
        F: Fn(&MockRequest, usize) -> MockResponse + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);

        let (req_count, stop_flag) = (Arc::clone(&requests), Arc::clone(&stop));
        let thread = thread::spawn(move || {
            for stream in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let handler = Arc::clone(&handler);
                let seq = req_count.fetch_add(1, Ordering::SeqCst);
                thread::spawn(move || {
                    let _ = serve(stream, handler.as_ref(), seq);
                });
            }
        });

        Ok(MockServer {
            addr,
            requests,
            stop,
            thread: Some(thread),
        })
    }

    /// The reference stub: corrections from `table`, everything else echoed,
    /// 400 on empty text, `/healthz` answers `ok`.
    pub fn stub(table: HashMap<String, String>) -> io::Result<Self> {
        Self::start(move |req, _| stub_response(&table, req))
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Connections accepted so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn stub_response(table: &HashMap<String, String>, req: &MockRequest) -> MockResponse {
    match (req.method.as_str(), req.path.as_str()) {
        ("GET", "/healthz") => MockResponse::text(200, "ok"),
        ("POST", "/correct") => {
            let text = serde_json::from_str::<serde_json::Value>(&req.body)
                .ok()
                .and_then(|v| v.get("text").and_then(|t| t.as_str()).map(str::to_owned));
            match text {
                Some(t) if !t.is_empty() => {
                    let corrected = table.get(&t).cloned().unwrap_or(t);
                    MockResponse::json(
                        200,
                        serde_json::json!({ "corrected": corrected, "model": "stub" }),
                    )
                }
                _ => {
                    MockResponse::json(400, serde_json::json!({ "error": "missing or empty text" }))
                }
            }
        }
        _ => MockResponse::text(404, "not found"),
    }
}

#[derive(Deserialize)]
struct StubFile {
    corrections: Vec<StubEntry>,
}

#[derive(Deserialize)]
struct StubEntry {
    text: String,
    corrected: String,
}

/// Read a stub correction table: `{"corrections": [{"text", "corrected"}, ...]}`.
pub fn load_stub_table(path: impl AsRef<Path>) -> io::Result<HashMap<String, String>> {
    let raw = std::fs::read_to_string(path)?;
    let file: StubFile =
        serde_json::from_str(&raw).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    Ok(file
        .corrections
        .into_iter()
        .map(|e| (e.text, e.corrected))
        .collect())
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    }
}

fn serve(stream: TcpStream, handler: &Handler, seq: usize) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_owned();
    let path = parts.next().unwrap_or_default().to_owned();

    let mut content_length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;

    let request = MockRequest {
        method,
        path,
        body: String::from_utf8_lossy(&body).into_owned(),
    };
    let response = handler(&request, seq);
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        response.status,
        reason(response.status),
        response.content_type,
        response.body.len(),
        response.body
    )?;
    stream.flush()
}
