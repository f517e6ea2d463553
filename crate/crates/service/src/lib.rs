//! HTTP + WebSocket host for workflow sessions.
//!
//! Each session lives on its own worker (see [`SessionHandle`]), so every
//! mutation of one session is serialized while different sessions run in
//! parallel. Events go to the session's JSONL log and to a broadcast channel
//! feeding WebSocket subscribers; both carry the same serialized line.

mod error;
mod routes;
mod ws;

use std::collections::BTreeMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use tokio::sync::{broadcast, watch};

use statebuddy_core::engine::{
    list_logs, log_path, read_log, EventSink, Frame, HelperCursor, JsonlSink, Session, SessionEvent, SessionHandle,
};
use statebuddy_core::workflow::{AdmissibleTrigger, CatalogDiagnostic};
use statebuddy_core::{Clock, Deployment, SystemClock};

pub use error::{ApiError, ErrorBody};
pub use routes::router;

const STREAM_CAPACITY: usize = 1024;

/// One serialized event as written to the log.
#[derive(Debug, Clone)]
pub struct StreamLine {
    pub seq: u64,
    pub line: Arc<str>,
}

struct BroadcastSink(broadcast::Sender<StreamLine>);

impl EventSink for BroadcastSink {
    fn append(&mut self, event: &SessionEvent, line: &str) -> std::io::Result<()> {
        // No subscribers is not an error.
        let _ = self.0.send(StreamLine {
            seq: event.seq,
            line: line.into(),
        });
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Live,
    Ended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub workflow: String,
    pub created_at: u64,
    pub status: SessionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_path: Option<PathBuf>,
}

/// What a client needs to render a session after any call.
#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub record: SessionRecord,
    pub workflow: String,
    pub state: String,
    pub label: String,
    pub depth: usize,
    pub stack: Vec<Frame>,
    pub admissible: Vec<AdmissibleTrigger>,
    pub autopilot_enabled: bool,
    pub confirmed: bool,
    pub complete: bool,
    pub seq: u64,
    pub helper: HelperCursor,
}

fn summarize(s: &Session, log: Option<PathBuf>) -> SessionSummary {
    let st = s.state();
    let top = st.top().cloned().unwrap_or(Frame {
        workflow: String::new(),
        state: String::new(),
        pending: None,
    });
    let label = s.current_state_def().map(|d| d.label().to_string()).unwrap_or_default();
    let admissible = if st.ended { Vec::new() } else { s.admissible().unwrap_or_default() };
    SessionSummary {
        record: SessionRecord {
            session_id: st.session_id.clone(),
            workflow: st.root_workflow().unwrap_or_default().to_string(),
            created_at: s.events().first().map_or(0, |e| e.timestamp),
            status: if st.ended { SessionStatus::Ended } else { SessionStatus::Live },
            log_path: log,
        },
        workflow: top.workflow,
        state: top.state,
        label,
        depth: st.depth(),
        stack: st.stack.clone(),
        admissible,
        autopilot_enabled: st.autopilot_enabled,
        confirmed: st.confirmed,
        complete: s.is_complete(),
        seq: st.seq,
        helper: st.helper,
    }
}

pub struct LiveSession {
    handle: SessionHandle,
    stream: broadcast::Sender<StreamLine>,
    log: Option<PathBuf>,
}

impl LiveSession {
    /// Runs `f` on the session's worker without blocking the runtime.
    pub async fn call<R: Send + 'static>(
        &self,
        f: impl FnOnce(&mut Session) -> R + Send + 'static,
    ) -> Result<R, ApiError> {
        let handle = self.handle.clone();
        tokio::task::spawn_blocking(move || handle.call(f))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(|e| ApiError::internal(e.to_string()))
    }

    pub async fn summary(&self) -> Result<SessionSummary, ApiError> {
        let log = self.log.clone();
        self.call(move |s| summarize(s, log)).await
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamLine> {
        self.stream.subscribe()
    }
}

/// A log that could not be restored at startup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoveryIssue {
    pub path: String,
    pub message: String,
}

pub struct ServiceOptions {
    pub clock: Arc<dyn Clock>,
    /// Write `<id>.events.jsonl` files and restore them at startup.
    pub persist: bool,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            clock: Arc::new(SystemClock),
            persist: true,
        }
    }
}

struct Inner {
    deployment: Deployment,
    clock: Arc<dyn Clock>,
    log_dir: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Arc<LiveSession>>>,
    recovery: Vec<RecoveryIssue>,
    stop: watch::Sender<bool>,
}

#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

impl Service {
    /// Builds the service and restores every session found in the log
    /// directory.
    pub fn new(deployment: Deployment, opts: ServiceOptions) -> Self {
        let log_dir = opts.persist.then(|| deployment.log_dir().clone());
        let (stop, _) = watch::channel(false);
        let mut svc = Inner {
            deployment,
            clock: opts.clock,
            log_dir,
            sessions: RwLock::new(BTreeMap::new()),
            recovery: Vec::new(),
            stop,
        };
        svc.recover();
        Self { inner: Arc::new(svc) }
    }

    pub fn deployment(&self) -> &Deployment {
        &self.inner.deployment
    }

    pub fn catalog_diagnostics(&self) -> &[CatalogDiagnostic] {
        &self.inner.deployment.diagnostics
    }

    pub fn recovery_issues(&self) -> &[RecoveryIssue] {
        &self.inner.recovery
    }

    pub fn session(&self, id: &str) -> Result<Arc<LiveSession>, ApiError> {
        self.inner
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.inner.sessions.read().unwrap().keys().cloned().collect()
    }

    pub fn stop_signal(&self) -> watch::Receiver<bool> {
        self.inner.stop.subscribe()
    }

    /// Starts a session on `workflow`. Entry actions run on a blocking thread.
    pub async fn create_session(&self, workflow: &str, id: Option<String>) -> Result<SessionSummary, ApiError> {
        use axum::http::StatusCode;
        if !self.inner.deployment.catalog.contains(workflow) {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_workflow",
                format!("workflow `{workflow}` is not in the catalog"),
            ));
        }
        let id = match id {
            Some(id) if valid_id(&id) => id,
            Some(id) => {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "invalid_session_id",
                    format!("session id `{id}` must be 1-64 characters of [A-Za-z0-9_-]"),
                ))
            }
            None => uuid::Uuid::new_v4().simple().to_string(),
        };
        let conflict = || ApiError::new(StatusCode::CONFLICT, "session_exists", format!("session `{id}` already exists"));
        let log = self.inner.log_dir.as_ref().map(|d| log_path(d, &id));
        if self.inner.sessions.read().unwrap().contains_key(&id) || log.as_ref().is_some_and(|p| p.exists()) {
            return Err(conflict());
        }
        let (tx, _) = broadcast::channel(STREAM_CAPACITY);
        let sinks = self.sinks(log.as_ref(), &tx).map_err(|e| ApiError::internal(e.to_string()))?;
        let env = self.inner.deployment.env(self.inner.clock.clone());
        let (sid, wf) = (id.clone(), workflow.to_string());
        let session = tokio::task::spawn_blocking(move || Session::start(env, sid, &wf, sinks))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;
        let summary = summarize(&session, log.clone());
        let live = Arc::new(LiveSession {
            handle: SessionHandle::spawn(session),
            stream: tx,
            log,
        });
        let mut sessions = self.inner.sessions.write().unwrap();
        if sessions.contains_key(&id) {
            return Err(conflict());
        }
        sessions.insert(id, live);
        Ok(summary)
    }

    fn sinks(
        &self,
        log: Option<&PathBuf>,
        tx: &broadcast::Sender<StreamLine>,
    ) -> std::io::Result<Vec<Box<dyn EventSink>>> {
        let mut sinks: Vec<Box<dyn EventSink>> = Vec::new();
        if let Some(p) = log {
            sinks.push(Box::new(JsonlSink::open(p)?));
        }
        sinks.push(Box::new(BroadcastSink(tx.clone())));
        Ok(sinks)
    }

    /// Ends every live session with a `session_ended` event, then tells
    /// event streams to close.
    pub async fn shutdown(&self) {
        let sessions: Vec<Arc<LiveSession>> = self.inner.sessions.read().unwrap().values().cloned().collect();
        for s in sessions {
            if let Err(e) = s.call(|s| s.end("server shutdown")).await {
                tracing::warn!("ending session: {}", e.body.message);
            }
        }
        let _ = self.inner.stop.send(true);
    }
}

impl Inner {
    fn recover(&mut self) {
        let Some(dir) = self.log_dir.clone() else { return };
        let logs = match list_logs(&dir) {
            Ok(l) => l,
            Err(e) => {
                self.recovery.push(RecoveryIssue {
                    path: dir.display().to_string(),
                    message: e.to_string(),
                });
                return;
            }
        };
        for path in logs {
            let issue = |message: String| RecoveryIssue {
                path: path.display().to_string(),
                message,
            };
            let events = match read_log(&path) {
                Ok(ev) if ev.is_empty() => continue,
                Ok(ev) => ev,
                Err(e) => {
                    self.recovery.push(issue(e.to_string()));
                    continue;
                }
            };
            let id = events[0].session_id.clone();
            if log_path(&dir, &id) != path {
                self.recovery.push(issue(format!("log holds session `{id}`")));
                continue;
            }
            let (tx, _) = broadcast::channel(STREAM_CAPACITY);
            let sinks: Vec<Box<dyn EventSink>> = match JsonlSink::open(&path) {
                Ok(f) => vec![Box::new(f), Box::new(BroadcastSink(tx.clone()))],
                Err(e) => {
                    self.recovery.push(issue(e.to_string()));
                    continue;
                }
            };
            match Session::restore(self.deployment.env(self.clock.clone()), events, sinks) {
                Ok(session) => {
                    tracing::info!(session = %id, "restored from log");
                    let live = LiveSession {
                        handle: SessionHandle::spawn(session),
                        stream: tx,
                        log: Some(path.clone()),
                    };
                    self.sessions.get_mut().unwrap().insert(id, Arc::new(live));
                }
                Err(e) => self.recovery.push(issue(e.to_string())),
            }
        }
    }
}

fn valid_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Serves until `shutdown` resolves, then ends all sessions and drains.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Service,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let svc = service.clone();
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async move {
            shutdown.await;
            svc.shutdown().await;
        })
        .await
}
