#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use futures::StreamExt;
use serde_json::Value;
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;

use statebuddy_core::{Config, Deployment, ManualClock};
use statebuddy_service::{serve, Service, ServiceOptions};

pub const EPOCH: u64 = 1_700_000_000_000;

pub struct TestServer {
    pub base: String,
    pub ws: String,
    pub service: Service,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
}

impl TestServer {
    pub async fn start(config: Config) -> Self {
        let d = Deployment::from_config(config).expect("deploy");
        let service = Service::new(
            d,
            ServiceOptions {
                clock: Arc::new(ManualClock::new(EPOCH)),
                persist: true,
            },
        );
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(serve(listener, service.clone(), async {
            let _ = rx.await;
        }));
        Self {
            base: format!("http://{addr}"),
            ws: format!("ws://{addr}"),
            service,
            stop: Some(tx),
            task: Some(task),
        }
    }

    pub async fn in_dir(dir: &Path) -> Self {
        Self::start(config_in(dir)).await
    }

    /// Graceful stop: sessions end, streams close, the server drains.
    pub async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        self.task.take().unwrap().await.unwrap().unwrap();
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        request("GET", self.url(path), None).await
    }

    pub async fn get_text(&self, path: &str) -> (u16, String) {
        let url = self.url(path);
        tokio::task::spawn_blocking(move || {
            let mut r = agent().get(&url).call().unwrap();
            (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
        })
        .await
        .unwrap()
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        request("POST", self.url(path), Some(body)).await
    }

    pub async fn create(&self, workflow: &str, id: &str) -> Value {
        let (status, body) = self
            .post("/sessions", serde_json::json!({"workflow": workflow, "session_id": id}))
            .await;
        assert_eq!(status, 201, "{body}");
        body
    }

    pub async fn say(&self, id: &str, text: &str) -> Value {
        let (status, body) = self
            .post(&format!("/sessions/{id}/utterance"), serde_json::json!({"utterance": text}))
            .await;
        assert_eq!(status, 200, "{body}");
        body
    }
}

pub fn config_in(dir: &Path) -> Config {
    Config {
        log_dir: dir.join("logs"),
        ..Config::default()
    }
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

pub async fn request(method: &'static str, url: String, body: Option<Value>) -> (u16, Value) {
    tokio::task::spawn_blocking(move || {
        let a = agent();
        let mut r = match (method, body) {
            ("GET", _) => a.get(&url).call(),
            (_, Some(b)) => a.post(&url).send_json(&b),
            (_, None) => a.post(&url).send_empty(),
        }
        .unwrap();
        let status = r.status().as_u16();
        let text = r.body_mut().read_to_string().unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    })
    .await
    .unwrap()
}

pub type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub async fn subscribe(server: &TestServer, id: &str, from: Option<u64>) -> Socket {
    let q = from.map(|f| format!("?from_seq={f}")).unwrap_or_default();
    let (ws, _) = tokio_tungstenite::connect_async(format!("{}/sessions/{id}/events{q}", server.ws))
        .await
        .expect("connect");
    ws
}

/// Next text frame, or `None` on close or after a quiet period.
pub async fn next_line(ws: &mut Socket) -> Option<String> {
    loop {
        match tokio::time::timeout(Duration::from_secs(5), ws.next()).await {
            Ok(Some(Ok(Message::Text(t)))) => return Some(t.to_string()),
            Ok(Some(Ok(Message::Close(_)))) | Ok(None) | Ok(Some(Err(_))) | Err(_) => return None,
            Ok(Some(Ok(_))) => continue,
        }
    }
}

pub async fn take_lines(ws: &mut Socket, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for _ in 0..n {
        out.push(next_line(ws).await.expect("stream ended early"));
    }
    out
}

pub fn seq_of(line: &str) -> u64 {
    serde_json::from_str::<Value>(line).unwrap()["seq"].as_u64().unwrap()
}
