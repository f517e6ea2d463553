use std::sync::Arc;

use statebuddy_core::demo;
use statebuddy_core::engine::{MemorySink, Session};
use statebuddy_core::transcript::{replay, ReplayReport, Transcript};
use statebuddy_core::{Deployment, ManualClock};

const EPOCH: u64 = 1_700_000_000_000;

fn run(text: &str, root: &str) -> (ReplayReport, String) {
    let d = Deployment::demo();
    let sink = MemorySink::new();
    let env = d.env(Arc::new(ManualClock::new(EPOCH)));
    let mut s = Session::start(env, "replay-1", root, vec![Box::new(sink.clone())]).unwrap();
    let report = replay(&mut s, &Transcript::parse(text), &d.matcher).unwrap();
    (report, sink.text())
}

#[test]
fn impeller_transcript_reaches_terminal() {
    let (r, log) = run(demo::IMPELLER_TRANSCRIPT, demo::CHAIN_ROOT);
    for l in &r.lines {
        eprintln!("{:>3} {:<28} -> {:<24} {}:{} {}", l.line, l.utterance, l.matched.as_deref().unwrap_or("-"), l.workflow, l.state, l.error.as_deref().unwrap_or(""));
    }
    assert!(r.accepted, "{r:#?}");
    assert_eq!((r.workflow.as_str(), r.state.as_str(), r.depth), ("preview", "Done", 1));
    assert_eq!(r.rejected, 1);
    assert_eq!(r.errors, 0);
    for w in ["full_scan", "scan_slicing", "processing_3d", "part_program_generator"] {
        assert!(log.contains(&format!("\"workflow\":\"{w}\"")), "{w} never ran");
    }
    assert!(log.ends_with("\"type\":\"session_ended\",\"payload\":{\"reason\":\"transcript complete\"}}\n"));
}

#[test]
fn replay_is_byte_identical() {
    let (_, a) = run(demo::IMPELLER_TRANSCRIPT, demo::CHAIN_ROOT);
    let (_, b) = run(demo::IMPELLER_TRANSCRIPT, demo::CHAIN_ROOT);
    assert_eq!(a, b);
}

#[test]
fn components_linear_and_empty() {
    let (r, _) = run(demo::COMPONENTS_TRANSCRIPT, "components");
    assert!(r.accepted);
    assert_eq!(r.state, "Done");
    let (r, _) = run("", "components");
    assert_eq!(r.state, "Ready");
}
