//! Human-readable renderings of events, decisions and session state.

use statebuddy_core::engine::{CompletionStatus, EventBody, Session, SessionEvent};
use statebuddy_core::intent::{IntentDecision, Outcome};

pub fn event(e: &SessionEvent) -> String {
    let body = match &e.body {
        EventBody::SessionStarted { workflow, initial_state, .. } => format!("session started in {workflow}:{initial_state}"),
        EventBody::StateEntered { workflow, state, .. } => format!("entered {workflow}:{state}"),
        EventBody::TransitionFired { trigger, source, destination, origin, .. } => {
            format!("{trigger}: {source} -> {destination} ({})", json_name(origin))
        }
        EventBody::JumpStarted { trigger, state, .. } => format!("jump {trigger} from {state}"),
        EventBody::JumpReturned { trigger, state, status, .. } => {
            format!("jump {trigger} back to {state} ({})", status_name(*status))
        }
        EventBody::WorkflowCalled { caller, workflow, .. } => format!("{caller} calls {workflow}"),
        EventBody::WorkflowReturned { workflow, status, .. } => format!("{workflow} returned ({})", status_name(*status)),
        EventBody::ActionStarted { kind, target, .. } => format!("{kind} {target}"),
        EventBody::ActionCompleted { kind, feedback, duration_ms, .. } => {
            format!("{kind} done in {duration_ms} ms{}", suffix(feedback))
        }
        EventBody::ActionFailed { kind, feedback, .. } => format!("{kind} FAILED: {feedback}"),
        EventBody::IntentMatched { utterance, trigger, branch, .. } => {
            format!("\"{utterance}\" matched {trigger} by {}", json_name(branch))
        }
        EventBody::IntentRejected { utterance, .. } => format!("\"{utterance}\" rejected"),
        EventBody::AutopilotToggled { enabled } => format!("autopilot {}", if *enabled { "on" } else { "off" }),
        EventBody::AutopilotPaused { state, .. } => format!("autopilot paused in {state}, say ok to continue"),
        EventBody::SessionEnded { reason } => format!("session ended: {reason}"),
    };
    format!("  #{:<4} {body}", e.seq)
}

fn suffix(feedback: &str) -> String {
    if feedback.is_empty() {
        String::new()
    } else {
        format!(": {feedback}")
    }
}

fn status_name(s: CompletionStatus) -> &'static str {
    match s {
        CompletionStatus::Completed => "completed",
        CompletionStatus::Failed => "failed",
    }
}

/// The serde name of a unit enum value.
fn json_name<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn decision(d: &IntentDecision) -> String {
    match &d.outcome {
        Outcome::Matched { trigger, branch } => format!("matched {trigger} by {}", json_name(branch)),
        Outcome::Rejected { .. } => {
            let mut out = String::from("no confident match; closest commands:\n");
            out.push_str(&format!("    {:<20} {:>5} {:>6} {:>6}\n", "command", "lev", "jac", "cos"));
            for r in d.ranking.iter().take(5) {
                out.push_str(&format!(
                    "    {:<20} {:>5} {:>6.3} {:>6.3}\n",
                    r.trigger, r.scores.d_lev, r.scores.d_jac, r.scores.s_cos
                ));
            }
            out.trim_end().to_string()
        }
    }
}

pub fn state(s: &Session) -> String {
    let st = s.state();
    let Some(top) = st.top() else {
        return "(no active workflow)".into();
    };
    let label = s.current_state_def().map(|d| d.label().to_string()).unwrap_or_default();
    let mut out = format!("[{}] {}", top.workflow, top.state);
    if label != top.state {
        out.push_str(&format!(" ({label})"));
    }
    if st.depth() > 1 {
        out.push_str(&format!(" depth {}", st.depth()));
    }
    if st.autopilot_enabled {
        out.push_str(" autopilot");
    }
    if st.ended {
        out.push_str(" ended");
    } else if let Ok(cmds) = s.admissible() {
        let names: Vec<String> = cmds.into_iter().map(|a| a.trigger).collect();
        out.push_str(&format!("\n  commands: {}", names.join(", ")));
    }
    out
}
