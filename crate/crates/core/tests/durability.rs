mod support;

use std::io::Write;

use statebuddy_core::engine::{log_path, read_log, FireOrigin, JsonlSink, Session};
use statebuddy_core::SessionState;
use support::*;

#[test]
fn restart_rebuilds_every_fixture_session() {
    let dir = tempfile::tempdir().unwrap();
    let expected = write_fixture_sessions(dir.path());
    let n = restore_and_compare(dir.path(), &expected).unwrap();
    assert_eq!(n, expected.len());
    assert!(expected["impeller"].0.ended);
    assert!(!expected["open"].0.ended);
}

#[test]
fn restored_session_keeps_appending() {
    let dir = tempfile::tempdir().unwrap();
    let expected = write_fixture_sessions(dir.path());
    let (want, env) = &expected["open"];
    let path = log_path(dir.path(), "open");
    let events = read_log(&path).unwrap();
    let last = events.last().unwrap().seq;
    let mut s = Session::restore(env.clone(), events, vec![Box::new(JsonlSink::open(&path).unwrap())]).unwrap();
    assert_eq!(s.state(), want);
    s.fire("Help", FireOrigin::Direct).unwrap();
    s.end("operator left").unwrap();
    let again = read_log(&path).unwrap();
    assert_eq!(again[last as usize].seq, last + 1);
    assert_eq!(&SessionState::replay(&again).unwrap(), s.state());
}

#[test]
fn torn_final_line_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let expected = write_fixture_sessions(dir.path());
    let path = log_path(dir.path(), "random-007");
    let full = read_log(&path).unwrap();
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(br#"{"seq":999,"timestamp":1,"session_id":"random-0"#).unwrap();
    drop(f);
    let torn = read_log(&path).unwrap();
    assert_eq!(torn, full);
    let s = Session::restore(expected["random-007"].1.clone(), torn, Vec::new()).unwrap();
    assert_eq!(s.state(), &expected["random-007"].0);
}

#[test]
fn corrupt_middle_line_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_sessions(dir.path());
    let path = log_path(dir.path(), "components");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1] = "{not json";
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let err = read_log(&path).unwrap_err().to_string();
    assert!(err.contains(":2:"), "{err}");
}

#[test]
fn reordered_log_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let expected = write_fixture_sessions(dir.path());
    let mut events = read_log(&log_path(dir.path(), "impeller")).unwrap();
    events.swap(3, 4);
    let err = Session::restore(expected["impeller"].1.clone(), events, Vec::new()).unwrap_err();
    assert_eq!(err.code(), "replay");
}
