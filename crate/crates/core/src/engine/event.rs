use serde::{Deserialize, Serialize};

use crate::commands::GlobalBehavior;
use crate::exec::ExecStatus;
use crate::intent::{Branch, RankedCandidate, RejectReason, SimilarityScores};
use crate::workflow::{ActionKind, TriggerKind};

use super::state::{HelperCursor, PendingCall};

/// One entry of a session's append-only log. `seq` starts at 1 and has no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    /// Milliseconds since the Unix epoch, from the session clock.
    pub timestamp: u64,
    pub session_id: String,
    #[serde(flatten)]
    pub body: EventBody,
}

impl SessionEvent {
    /// The log line for this event, without trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn kind(&self) -> &'static str {
        self.body.kind()
    }
}

/// How a transition came to be fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FireOrigin {
    /// Resolved from an operator utterance (preceded by `intent_matched`).
    Intent,
    /// Named directly through the API or `--direct` mode.
    Direct,
    Autopilot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SessionStarted {
        workflow: String,
        initial_state: String,
        cursor_speed_ms: u64,
    },
    StateEntered {
        frame: usize,
        workflow: String,
        state: String,
    },
    TransitionFired {
        frame: usize,
        workflow: String,
        trigger: String,
        source: String,
        destination: String,
        origin: FireOrigin,
    },
    JumpStarted {
        frame: usize,
        state: String,
        trigger: String,
        kind: TriggerKind,
        origin: FireOrigin,
    },
    JumpReturned {
        frame: usize,
        state: String,
        trigger: String,
        status: CompletionStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        behavior: Option<GlobalBehavior>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        helper: Option<HelperCursor>,
    },
    WorkflowCalled {
        /// Index of the new frame.
        frame: usize,
        caller: String,
        workflow: String,
        initial_state: String,
        resume: PendingCall,
    },
    WorkflowReturned {
        frame: usize,
        workflow: String,
        status: CompletionStatus,
    },
    ActionStarted {
        frame: usize,
        kind: ActionKind,
        target: String,
    },
    ActionCompleted {
        frame: usize,
        kind: ActionKind,
        status: ExecStatus,
        feedback: String,
        duration_ms: u64,
    },
    ActionFailed {
        frame: usize,
        kind: ActionKind,
        feedback: String,
        duration_ms: u64,
    },
    IntentMatched {
        utterance: String,
        normalized: String,
        trigger: String,
        branch: Branch,
        scores: SimilarityScores,
    },
    IntentRejected {
        utterance: String,
        normalized: String,
        reason: RejectReason,
        ranking: Vec<RankedCandidate>,
    },
    AutopilotToggled {
        enabled: bool,
    },
    AutopilotPaused {
        frame: usize,
        state: String,
    },
    SessionEnded {
        reason: String,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SessionStarted { .. } => "session_started",
            EventBody::StateEntered { .. } => "state_entered",
            EventBody::TransitionFired { .. } => "transition_fired",
            EventBody::JumpStarted { .. } => "jump_started",
            EventBody::JumpReturned { .. } => "jump_returned",
            EventBody::WorkflowCalled { .. } => "workflow_called",
            EventBody::WorkflowReturned { .. } => "workflow_returned",
            EventBody::ActionStarted { .. } => "action_started",
            EventBody::ActionCompleted { .. } => "action_completed",
            EventBody::ActionFailed { .. } => "action_failed",
            EventBody::IntentMatched { .. } => "intent_matched",
            EventBody::IntentRejected { .. } => "intent_rejected",
            EventBody::AutopilotToggled { .. } => "autopilot_toggled",
            EventBody::AutopilotPaused { .. } => "autopilot_paused",
            EventBody::SessionEnded { .. } => "session_ended",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape() {
        let e = SessionEvent {
            seq: 2,
            timestamp: 1_000,
            session_id: "s".into(),
            body: EventBody::StateEntered {
                frame: 0,
                workflow: "w".into(),
                state: "Ready".into(),
            },
        };
        assert_eq!(
            e.to_line(),
            r#"{"seq":2,"timestamp":1000,"session_id":"s","type":"state_entered","payload":{"frame":0,"workflow":"w","state":"Ready"}}"#
        );
        assert_eq!(SessionEvent::from_line(&e.to_line()).unwrap(), e);
        assert_eq!(e.kind(), "state_entered");
    }

    #[test]
    fn float_payloads_round_trip() {
        let e = SessionEvent {
            seq: 1,
            timestamp: 0,
            session_id: "s".into(),
            body: EventBody::IntentMatched {
                utterance: "Next state!".into(),
                normalized: "next state".into(),
                trigger: "NextState".into(),
                branch: Branch::Lev,
                scores: SimilarityScores {
                    d_lev: 0,
                    d_jac: 0.1 + 0.2,
                    s_cos: std::f64::consts::FRAC_1_SQRT_2,
                },
            },
        };
        let back = SessionEvent::from_line(&e.to_line()).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.to_line(), e.to_line());
    }
}
