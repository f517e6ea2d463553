mod common;

use futures::SinkExt;
use serde_json::json;
use tokio_tungstenite::tungstenite::Message;

use common::*;
use statebuddy_core::engine::log_path;

#[tokio::test(flavor = "multi_thread")]
async fn replay_then_live_tail() {
    let dir = tempfile::tempdir().unwrap();
    let s = TestServer::in_dir(dir.path()).await;
    let created = s.create("components", "w").await;
    let n = created["seq"].as_u64().unwrap();
    assert!(n >= 2);

    let mut ws = subscribe(&s, "w", Some(0)).await;
    let backlog = take_lines(&mut ws, n as usize).await;
    assert_eq!(backlog.iter().map(|l| seq_of(l)).collect::<Vec<_>>(), (1..=n).collect::<Vec<_>>());

    let r = s.say("w", "next state").await;
    let now = r["session"]["seq"].as_u64().unwrap();
    let live = take_lines(&mut ws, (now - n) as usize).await;
    assert_eq!(live.iter().map(|l| seq_of(l)).collect::<Vec<_>>(), (n + 1..=now).collect::<Vec<_>>());
    assert!(live.iter().any(|l| l.contains("\"type\":\"intent_matched\"")));
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn two_subscribers_see_the_same_stream() {
    let dir = tempfile::tempdir().unwrap();
    let s = TestServer::in_dir(dir.path()).await;
    s.create("preview", "p").await;
    let mut a = subscribe(&s, "p", None).await;
    let mut b = subscribe(&s, "p", None).await;
    let r = s.say("p", "autopilot on").await;
    let total = r["session"]["seq"].as_u64().unwrap() as usize;
    let la = take_lines(&mut a, total).await;
    let lb = take_lines(&mut b, total).await;
    assert_eq!(la, lb);
    assert!(la.iter().any(|l| l.contains("autopilot_toggled")));
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn reconnect_resumes_without_gaps_and_matches_log() {
    let dir = tempfile::tempdir().unwrap();
    let s = TestServer::in_dir(dir.path()).await;
    s.create("components", "rc").await;
    let mut seen: Vec<String> = Vec::new();

    let mut ws = subscribe(&s, "rc", Some(0)).await;
    seen.extend(take_lines(&mut ws, 2).await);
    // Drop mid-stream, keep working while disconnected.
    ws.close(None).await.unwrap();
    drop(ws);
    s.say("rc", "next state").await;
    s.say("rc", "back state").await;
    let last = seq_of(seen.last().unwrap());

    let mut ws = subscribe(&s, "rc", Some(last)).await;
    let r = s.say("rc", "next state").await;
    let total = r["session"]["seq"].as_u64().unwrap();
    seen.extend(take_lines(&mut ws, (total - last) as usize).await);
    assert_eq!(seen.iter().map(|l| seq_of(l)).collect::<Vec<_>>(), (1..=total).collect::<Vec<_>>());

    let streamed: String = seen.iter().map(|l| format!("{l}\n")).collect();
    let logged = std::fs::read_to_string(log_path(&dir.path().join("logs"), "rc")).unwrap();
    assert_eq!(streamed, logged);
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn client_messages_are_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let s = TestServer::in_dir(dir.path()).await;
    s.create("components", "m").await;
    let mut ws = subscribe(&s, "m", Some(1)).await;
    ws.send(Message::Text("hello".into())).await.unwrap();
    assert_eq!(seq_of(&next_line(&mut ws).await.unwrap()), 2);
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_session_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let s = TestServer::in_dir(dir.path()).await;
    let err = tokio_tungstenite::connect_async(format!("{}/sessions/ghost/events", s.ws)).await.unwrap_err();
    match err {
        tokio_tungstenite::tungstenite::Error::Http(r) => assert_eq!(r.status(), 404),
        other => panic!("{other}"),
    }
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn shutdown_ends_sessions_and_closes_streams() {
    let dir = tempfile::tempdir().unwrap();
    let s = TestServer::in_dir(dir.path()).await;
    let n = s.create("components", "sd").await["seq"].as_u64().unwrap();
    let mut ws = subscribe(&s, "sd", Some(n)).await;
    let (status, _) = s.post("/sessions/sd/end", json!(null)).await;
    assert_eq!(status, 200);
    let ended = next_line(&mut ws).await.unwrap();
    assert!(ended.contains("ended by client"));
    let n2 = s.create("components", "sd2").await["seq"].as_u64().unwrap();
    let mut ws2 = subscribe(&s, "sd2", Some(n2)).await;
    s.stop().await;
    let last = next_line(&mut ws2).await.unwrap();
    assert!(last.contains("\"type\":\"session_ended\"") && last.contains("server shutdown"), "{last}");
    assert_eq!(next_line(&mut ws2).await, None);
    let log = std::fs::read_to_string(log_path(&dir.path().join("logs"), "sd2")).unwrap();
    assert!(log.trim_end().ends_with(r#"{"reason":"server shutdown"}}"#));
    // Already-ended sessions are not ended twice.
    let log = std::fs::read_to_string(log_path(&dir.path().join("logs"), "sd")).unwrap();
    assert_eq!(log.matches("session_ended").count(), 1);
}
