use serde::{Deserialize, Serialize};

use crate::commands::GlobalBehavior;
use crate::helper::HelperMode;

use super::event::{CompletionStatus, EventBody, SessionEvent};

/// A transition suspended while a called workflow runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingCall {
    pub trigger: String,
    pub source: String,
    pub destination: String,
    /// Index of the first transition action to run once the callee returns.
    pub resume_at: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub workflow: String,
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<PendingCall>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpReturn {
    pub frame: usize,
    pub state: String,
    pub trigger: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HelperCursor {
    pub slide: usize,
    pub mode: HelperMode,
}

/// Everything the engine knows about a session. Only [`SessionState::apply`]
/// changes it, so folding a log reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    /// Call stack; the last frame is active.
    pub stack: Vec<Frame>,
    pub jump_return: Option<JumpReturn>,
    pub autopilot_enabled: bool,
    /// Delay before each action, in milliseconds.
    pub cursor_speed_ms: u64,
    /// Sequence number of the last applied event.
    pub seq: u64,
    /// Set by the confirm command; cleared on every state entry.
    pub confirmed: bool,
    pub helper: HelperCursor,
    pub ended: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("event {got} out of order, expected {expected}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("event {seq} belongs to session `{got}`, not `{expected}`")]
    WrongSession { seq: u64, expected: String, got: String },
    #[error("event {seq} ({kind}) does not fit the session: {reason}")]
    Inconsistent { seq: u64, kind: &'static str, reason: String },
    #[error("log is empty")]
    Empty,
}

impl SessionState {
    pub fn top(&self) -> Option<&Frame> {
        self.stack.last()
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Root workflow id.
    pub fn root_workflow(&self) -> Option<&str> {
        self.stack.first().map(|f| f.workflow.as_str())
    }

    /// Folds a whole log, starting from nothing.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a SessionEvent>) -> Result<Self, ReplayError> {
        let mut s = Self::default();
        let mut any = false;
        for e in events {
            s.apply(e)?;
            any = true;
        }
        if any {
            Ok(s)
        } else {
            Err(ReplayError::Empty)
        }
    }

    /// Applies one event. Pure apart from `self`; rejects events that could
    /// not have been produced from the current state.
    pub fn apply(&mut self, e: &SessionEvent) -> Result<(), ReplayError> {
        if e.seq != self.seq + 1 {
            return Err(ReplayError::OutOfOrder {
                expected: self.seq + 1,
                got: e.seq,
            });
        }
        if self.seq > 0 && e.session_id != self.session_id {
            return Err(ReplayError::WrongSession {
                seq: e.seq,
                expected: self.session_id.clone(),
                got: e.session_id.clone(),
            });
        }
        let bad = |reason: String| ReplayError::Inconsistent {
            seq: e.seq,
            kind: e.kind(),
            reason,
        };
        if self.ended {
            return Err(bad("session already ended".into()));
        }
        if self.seq == 0 && !matches!(e.body, EventBody::SessionStarted { .. }) {
            return Err(bad("log must begin with session_started".into()));
        }
        match &e.body {
            EventBody::SessionStarted {
                workflow,
                initial_state,
                cursor_speed_ms,
            } => {
                if self.seq != 0 {
                    return Err(bad("session already started".into()));
                }
                self.session_id = e.session_id.clone();
                self.cursor_speed_ms = *cursor_speed_ms;
                self.stack = vec![Frame {
                    workflow: workflow.clone(),
                    state: initial_state.clone(),
                    pending: None,
                }];
            }
            EventBody::StateEntered { frame, workflow, state } => {
                let f = self.frame_mut(*frame).map_err(bad)?;
                if &f.workflow != workflow {
                    return Err(bad(format!("frame {frame} runs `{}`", f.workflow)));
                }
                f.state = state.clone();
                f.pending = None;
                self.confirmed = false;
                self.helper.slide = 0;
            }
            EventBody::TransitionFired { frame, source, .. } => {
                let f = self.frame_mut(*frame).map_err(bad)?;
                if &f.state != source {
                    return Err(bad(format!("frame is in `{}`, not `{source}`", f.state)));
                }
            }
            EventBody::JumpStarted {
                frame, state, trigger, ..
            } => {
                if self.jump_return.is_some() {
                    return Err(bad("a jump is already executing".into()));
                }
                self.frame_mut(*frame).map_err(bad)?;
                self.jump_return = Some(JumpReturn {
                    frame: *frame,
                    state: state.clone(),
                    trigger: trigger.clone(),
                });
            }
            EventBody::JumpReturned {
                frame,
                state,
                behavior,
                helper,
                status,
                ..
            } => {
                match &self.jump_return {
                    Some(j) if j.frame == *frame && &j.state == state => {}
                    _ => return Err(bad("no matching jump in progress".into())),
                }
                self.jump_return = None;
                if *status == CompletionStatus::Completed {
                    if *behavior == Some(GlobalBehavior::Confirm) {
                        self.confirmed = true;
                    }
                    if let Some(h) = helper {
                        self.helper = *h;
                    }
                }
            }
            EventBody::WorkflowCalled {
                frame,
                caller,
                workflow,
                initial_state,
                resume,
            } => {
                if *frame != self.stack.len() {
                    return Err(bad(format!("new frame must be {}", self.stack.len())));
                }
                let parent = self.stack.last_mut().ok_or_else(|| bad("no caller frame".into()))?;
                if &parent.workflow != caller {
                    return Err(bad(format!("active workflow is `{}`", parent.workflow)));
                }
                parent.pending = Some(resume.clone());
                self.stack.push(Frame {
                    workflow: workflow.clone(),
                    state: initial_state.clone(),
                    pending: None,
                });
            }
            EventBody::WorkflowReturned { frame, workflow, .. } => {
                if *frame + 1 != self.stack.len() || *frame == 0 {
                    return Err(bad(format!("frame {frame} is not a called frame on top")));
                }
                if &self.stack[*frame].workflow != workflow {
                    return Err(bad(format!("frame {frame} runs `{}`", self.stack[*frame].workflow)));
                }
                self.stack.pop();
                // A failed call leaves the parent where it was; a completed
                // one keeps the pending marker until the parent finishes.
                if let Some(parent) = self.stack.last_mut() {
                    if !matches!(e.body, EventBody::WorkflowReturned { status: CompletionStatus::Completed, .. }) {
                        parent.pending = None;
                    }
                }
            }
            EventBody::ActionFailed { frame, .. } => {
                // Actions of a frame only run while it is on top, so a
                // failure there abandons any transition it had resumed.
                self.frame_mut(*frame).map_err(bad)?.pending = None;
            }
            EventBody::ActionStarted { frame, .. }
            | EventBody::ActionCompleted { frame, .. }
            | EventBody::AutopilotPaused { frame, .. } => {
                self.frame_mut(*frame).map_err(bad)?;
            }
            EventBody::IntentMatched { .. } | EventBody::IntentRejected { .. } => {}
            EventBody::AutopilotToggled { enabled } => self.autopilot_enabled = *enabled,
            EventBody::SessionEnded { .. } => {
                self.ended = true;
                self.jump_return = None;
            }
        }
        self.seq = e.seq;
        Ok(())
    }

    fn frame_mut(&mut self, i: usize) -> Result<&mut Frame, String> {
        let len = self.stack.len();
        self.stack
            .get_mut(i)
            .ok_or_else(|| format!("frame {i} does not exist (depth {len})"))
    }
}
