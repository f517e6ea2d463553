//! Timing report aggregated from a session's event log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{EventBody, FireOrigin, ReplayError, SessionEvent, SessionState};
use crate::workflow::ActionKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTiming {
    pub workflow: String,
    pub state: String,
    pub visits: usize,
    /// Time this state was the active one.
    pub total_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTiming {
    pub kind: ActionKind,
    pub count: usize,
    pub failures: usize,
    pub total_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub session_id: String,
    pub started_at: u64,
    pub last_event_at: u64,
    pub total_ms: u64,
    pub states: Vec<StateTiming>,
    pub actions: Vec<ActionTiming>,
    pub transitions: usize,
    pub autopilot_transitions: usize,
    pub intents_matched: usize,
    pub intents_rejected: usize,
    pub ended: bool,
}

impl TimingReport {
    /// Folds the log; the time between consecutive events is charged to the
    /// state active before the later one.
    pub fn from_events(events: &[SessionEvent]) -> Result<Self, ReplayError> {
        let mut state = SessionState::default();
        let mut states: BTreeMap<(String, String), StateTiming> = BTreeMap::new();
        let mut actions: BTreeMap<ActionKind, ActionTiming> = BTreeMap::new();
        let mut r = TimingReport::default();
        let mut prev: Option<u64> = None;
        for e in events {
            if let (Some(p), Some(f)) = (prev, state.top()) {
                let entry = states.entry((f.workflow.clone(), f.state.clone())).or_insert_with(|| StateTiming {
                    workflow: f.workflow.clone(),
                    state: f.state.clone(),
                    visits: 0,
                    total_ms: 0,
                });
                entry.total_ms += e.timestamp.saturating_sub(p);
            }
            state.apply(e)?;
            prev = Some(e.timestamp);
            match &e.body {
                EventBody::SessionStarted { .. } => {
                    r.session_id = e.session_id.clone();
                    r.started_at = e.timestamp;
                }
                EventBody::StateEntered { workflow, state, .. } => {
                    states
                        .entry((workflow.clone(), state.clone()))
                        .or_insert_with(|| StateTiming {
                            workflow: workflow.clone(),
                            state: state.clone(),
                            visits: 0,
                            total_ms: 0,
                        })
                        .visits += 1;
                }
                EventBody::TransitionFired { origin, .. } => {
                    r.transitions += 1;
                    if *origin == FireOrigin::Autopilot {
                        r.autopilot_transitions += 1;
                    }
                }
                EventBody::ActionCompleted { kind, duration_ms, .. } => {
                    let a = action_entry(&mut actions, *kind);
                    a.count += 1;
                    a.total_ms += duration_ms;
                }
                EventBody::ActionFailed { kind, duration_ms, .. } => {
                    let a = action_entry(&mut actions, *kind);
                    a.count += 1;
                    a.failures += 1;
                    a.total_ms += duration_ms;
                }
                EventBody::IntentMatched { .. } => r.intents_matched += 1,
                EventBody::IntentRejected { .. } => r.intents_rejected += 1,
                EventBody::SessionEnded { .. } => r.ended = true,
                _ => {}
            }
            r.last_event_at = e.timestamp;
        }
        r.total_ms = r.last_event_at.saturating_sub(r.started_at);
        r.states = states.into_values().collect();
        r.actions = actions.into_values().collect();
        Ok(r)
    }
}

fn action_entry(m: &mut BTreeMap<ActionKind, ActionTiming>, kind: ActionKind) -> &mut ActionTiming {
    m.entry(kind).or_insert(ActionTiming {
        kind,
        count: 0,
        failures: 0,
        total_ms: 0,
    })
}
