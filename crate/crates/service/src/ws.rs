use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::response::Response;
use serde::Deserialize;
use tokio::sync::broadcast::error::RecvError;

use crate::{ApiError, LiveSession, Service};

#[derive(Deserialize)]
pub struct StreamQuery {
    /// Last sequence number the client has; delivery starts after it.
    from_seq: Option<u64>,
}

pub async fn events(
    ws: WebSocketUpgrade,
    State(svc): State<Service>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
) -> Result<Response, ApiError> {
    let live = svc.session(&id)?;
    let stop = svc.stop_signal();
    Ok(ws.on_upgrade(move |socket| stream(socket, live, q.from_seq.unwrap_or(0), stop)))
}

async fn backlog(live: &LiveSession, after: u64) -> Option<Vec<(u64, String)>> {
    live.call(move |s| s.events_after(after).iter().map(|e| (e.seq, e.to_line())).collect())
        .await
        .ok()
}

/// Replays the log after `from`, then tails the live stream. Subscribing
/// before reading the backlog means nothing falls between the two; anything
/// seen twice is dropped by sequence number.
async fn stream(mut socket: WebSocket, live: Arc<LiveSession>, from: u64, mut stop: tokio::sync::watch::Receiver<bool>) {
    let mut rx = live.subscribe();
    if *stop.borrow_and_update() {
        return;
    }
    let mut last = from;
    let Some(lines) = backlog(&live, last).await else { return };
    for (seq, line) in lines {
        if socket.send(Message::Text(line.into())).await.is_err() {
            return;
        }
        last = seq;
    }
    loop {
        tokio::select! {
            item = rx.recv() => match item {
                Ok(item) if item.seq > last => {
                    if socket.send(Message::Text(item.line.as_ref().into())).await.is_err() {
                        return;
                    }
                    last = item.seq;
                }
                Ok(_) => {}
                Err(RecvError::Lagged(_)) => {
                    let Some(lines) = backlog(&live, last).await else { return };
                    for (seq, line) in lines {
                        if socket.send(Message::Text(line.into())).await.is_err() {
                            return;
                        }
                        last = seq;
                    }
                }
                Err(RecvError::Closed) => break,
            },
            msg = socket.recv() => match msg {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                Some(Ok(_)) => {}
            },
            // The flag only ever flips to true. Sessions are ended before it
            // flips, so flush what is already queued.
            _ = stop.changed() => {
                while let Ok(item) = rx.try_recv() {
                    if item.seq > last {
                        if socket.send(Message::Text(item.line.as_ref().into())).await.is_err() {
                            return;
                        }
                        last = item.seq;
                    }
                }
                break;
            }
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}
