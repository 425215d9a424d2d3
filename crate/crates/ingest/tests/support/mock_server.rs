//! Minimal HTTP/1.1 server on a loopback port for client tests.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

#[derive(Debug, Clone)]
pub struct Request {
    pub path: String,
    pub user_agent: Option<String>,
}

pub struct MockServer {
    pub base_url: String,
    pub requests: Arc<Mutex<Vec<Request>>>,
}

impl MockServer {
    /// Serves every request with `respond(path, index)`, where `index`
    /// counts requests from 0.
    pub fn start<F>(respond: F) -> Self
    where
        F: Fn(&str, usize) -> (u16, String) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                if reader.read_line(&mut line).is_err() {
                    continue;
                }
                let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
                let mut user_agent = None;
                loop {
                    let mut header = String::new();
                    if reader.read_line(&mut header).unwrap_or(0) == 0 || header == "\r\n" {
                        break;
                    }
                    if let Some((k, v)) = header.split_once(':') {
                        if k.eq_ignore_ascii_case("user-agent") {
                            user_agent = Some(v.trim().to_string());
                        }
                    }
                }
                let index = {
                    let mut log = log.lock().unwrap();
                    log.push(Request {
                        path: path.clone(),
                        user_agent,
                    });
                    log.len() - 1
                };
                let (status, body) = respond(&path, index);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            }
        });
        Self { base_url, requests }
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

/// A pageviews response body with one item per `(YYYYMMDD, views)`.
pub fn items_body(days: &[(&str, u64)]) -> String {
    let items: Vec<String> = days
        .iter()
        .map(|(d, v)| {
            format!(
                r#"{{"project":"en.wikipedia","access":"all-access","agent":"user","granularity":"daily","timestamp":"{d}00","views":{v}}}"#
            )
        })
        .collect();
    format!(r#"{{"items":[{}]}}"#, items.join(","))
}
