//! Minimal in-process `/embed` server for tests and offline demos.
//!
//! Speaks just enough HTTP/1.1 for one request per connection.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use crate::protocol::{EmbedRequest, EmbedResponse, EmbedVector};

#[derive(Debug, Clone)]
pub struct StubReply {
    pub status: u16,
    pub body: String,
}

impl StubReply {
    pub fn json(response: &EmbedResponse) -> Self {
        StubReply {
            status: 200,
            body: serde_json::to_string(response).expect("response serializes"),
        }
    }

    pub fn error(status: u16, message: &str) -> Self {
        StubReply {
            status,
            body: message.to_string(),
        }
    }
}

type Handler = dyn Fn(&EmbedRequest) -> StubReply + Send + Sync;

/// Deterministic unit vector derived from a key (FNV-1a seeded LCG).
pub fn key_vector(key: &str, dim: usize) -> Vec<f32> {
    let mut state = key
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
    let raw: Vec<f64> = (0..dim)
        .map(|_| {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    raw.iter().map(|x| (x / norm) as f32).collect()
}

/// Answers every request with [`key_vector`] embeddings of size `dim`.
pub fn embedding_handler(dim: usize) -> impl Fn(&EmbedRequest) -> StubReply + Send + Sync {
    move |req: &EmbedRequest| {
        StubReply::json(&EmbedResponse {
            space: req.space.clone(),
            dim,
            vectors: req
                .items
                .iter()
                .map(|i| EmbedVector {
                    key: i.key.clone(),
                    vec: key_vector(&i.key, dim),
                })
                .collect(),
        })
    }
}

pub struct StubServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    requests: Arc<AtomicUsize>,
    log: Arc<Mutex<Vec<EmbedRequest>>>,
    thread: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(&EmbedRequest) -> StubReply + Send + Sync + 'static) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(AtomicUsize::new(0));
        let log = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let thread = {
            let (stop, requests, log) = (stop.clone(), requests.clone(), log.clone());
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let (handler, requests, log) = (handler.clone(), requests.clone(), log.clone());
                    thread::spawn(move || {
                        let _ = serve(stream, &*handler, &requests, &log);
                    });
                }
            })
        };
        Ok(StubServer {
            addr,
            stop,
            requests,
            log,
            thread: Some(thread),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received on `/embed` so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<EmbedRequest> {
        self.log.lock().expect("log lock").clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn serve(
    stream: TcpStream,
    handler: &Handler,
    requests: &AtomicUsize,
    log: &Mutex<Vec<EmbedRequest>>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header == "\r\n" || header == "\n" {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let mut parts = request_line.split_whitespace();
    let reply = match (parts.next(), parts.next()) {
        (Some("POST"), Some("/embed")) => match serde_json::from_slice::<EmbedRequest>(&body) {
            Ok(req) => {
                requests.fetch_add(1, Ordering::SeqCst);
                let reply = handler(&req);
                log.lock().expect("log lock").push(req);
                reply
            }
            Err(e) => StubReply::error(400, &format!("bad request body: {e}")),
        },
        _ => StubReply::error(404, "not found"),
    };
    let reason = match reply.status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    out.flush()
}
