//! Session runtime. A [`Session`] never mutates its [`SessionState`]
//! directly: every step is an event that is applied, recorded, and handed to
//! the sinks, so the log alone reconstructs the session.

mod actor;
mod event;
mod log;
mod state;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::commands::{GlobalBehavior, GlobalCommandSet};
use crate::exec::{ActionContext, ExecStatus, ExecutionResult, ExecutorRegistry};
use crate::intent::{candidates_in_state, IntentDecision, IntentError, IntentMatcher, MatchError, Outcome, Utterance};
use crate::workflow::{
    ActionKind, ActionSpec, AdmissibleTrigger, StateDef, TransitionDef, TriggerKind, WorkflowCatalog,
    WorkflowDefinition,
};

pub use actor::{SessionHandle, SessionClosed};
pub use event::{CompletionStatus, EventBody, FireOrigin, SessionEvent};
pub use log::{list_logs, log_path, read_log, EventSink, FnSink, JsonlSink, LogError, MemorySink, LOG_SUFFIX};
pub use state::{Frame, HelperCursor, JumpReturn, PendingCall, ReplayError, SessionState};

pub const DEFAULT_MAX_CALL_DEPTH: usize = 16;
pub const DEFAULT_MAX_AUTOPILOT_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineLimits {
    pub max_call_depth: usize,
    pub max_autopilot_steps: usize,
}

impl Default for EngineLimits {
    fn default() -> Self {
        Self {
            max_call_depth: DEFAULT_MAX_CALL_DEPTH,
            max_autopilot_steps: DEFAULT_MAX_AUTOPILOT_STEPS,
        }
    }
}

/// What a session runs against.
#[derive(Clone)]
pub struct SessionEnv {
    pub catalog: Arc<WorkflowCatalog>,
    pub registry: ExecutorRegistry,
    pub globals: GlobalCommandSet,
    pub clock: Arc<dyn Clock>,
    pub limits: EngineLimits,
    pub cursor_speed_ms: u64,
}

impl SessionEnv {
    pub fn new(catalog: Arc<WorkflowCatalog>, registry: ExecutorRegistry, clock: Arc<dyn Clock>) -> Self {
        Self {
            catalog,
            registry,
            globals: GlobalCommandSet::standard(),
            clock,
            limits: EngineLimits::default(),
            cursor_speed_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("`{trigger}` is not admissible in state `{state}` of workflow `{workflow}`")]
    InadmissibleTransition {
        trigger: String,
        workflow: String,
        state: String,
    },
    #[error("guard of `{trigger}` failed: {feedback}")]
    GuardFailed { trigger: String, feedback: String },
    #[error("{kind} action `{target}` failed: {feedback}")]
    ActionFailed {
        kind: ActionKind,
        target: String,
        feedback: String,
    },
    #[error("call depth limit of {0} reached")]
    CallDepthExceeded(usize),
    #[error("no executor bound for action kind `{0}`")]
    ExecutorUnavailable(ActionKind),
    #[error("autopilot exceeded {0} steps")]
    AutopilotStepLimit(usize),
    #[error("autopilot is off")]
    AutopilotDisabled,
    #[error("session has ended")]
    SessionEnded,
    #[error("workflow `{0}` is not in the catalog")]
    UnknownWorkflow(String),
    #[error("state `{state}` is not defined in workflow `{workflow}`")]
    UnknownState { workflow: String, state: String },
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error("event log: {0}")]
    EventLog(String),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

impl EngineError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::InadmissibleTransition { .. } => "inadmissible_transition",
            EngineError::GuardFailed { .. } => "guard_failed",
            EngineError::ActionFailed { .. } => "action_failed",
            EngineError::CallDepthExceeded(_) => "call_depth_exceeded",
            EngineError::ExecutorUnavailable(_) => "executor_unavailable",
            EngineError::AutopilotStepLimit(_) => "autopilot_step_limit",
            EngineError::AutopilotDisabled => "autopilot_disabled",
            EngineError::SessionEnded => "session_ended",
            EngineError::UnknownWorkflow(_) => "unknown_workflow",
            EngineError::UnknownState { .. } => "unknown_state",
            EngineError::Intent(_) => "intent_error",
            EngineError::EventLog(_) => "event_log",
            EngineError::Replay(_) => "replay",
        }
    }
}

impl From<MatchError> for EngineError {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::Intent(e) => EngineError::Intent(e),
            MatchError::NoActiveFrame => EngineError::SessionEnded,
            MatchError::UnknownWorkflow(w) => EngineError::UnknownWorkflow(w),
            MatchError::UnknownState(u) => EngineError::UnknownState {
                workflow: u.workflow,
                state: u.state,
            },
        }
    }
}

/// Where the session stands after a command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FireOutcome {
    pub trigger: String,
    pub kind: TriggerKind,
    pub workflow: String,
    pub state: String,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutopilotStop {
    /// The root workflow reached a terminal state.
    Terminal,
    /// The state needs operator confirmation first.
    Paused,
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutopilotOutcome {
    pub steps: usize,
    pub stop: AutopilotStop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchOutcome {
    pub fired: FireOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub autopilot: Option<AutopilotOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceOutcome {
    pub decision: IntentDecision,
    /// Present when the utterance matched and was dispatched.
    pub dispatch: Option<Result<DispatchOutcome, EngineError>>,
}

pub struct Session {
    env: SessionEnv,
    state: SessionState,
    events: Vec<SessionEvent>,
    sinks: Vec<Box<dyn EventSink>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("state", &self.state)
            .field("events", &self.events.len())
            .finish()
    }
}

/// Action kinds reachable from `root`, following workflow calls.
pub fn required_kinds(catalog: &WorkflowCatalog, root: &WorkflowDefinition) -> BTreeSet<ActionKind> {
    let mut kinds = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut todo = vec![root.id.clone()];
    while let Some(id) = todo.pop() {
        if !seen.insert(id.clone()) {
            continue;
        }
        let Some(w) = catalog.get(&id) else { continue };
        for a in w.all_actions() {
            kinds.insert(a.kind);
            if a.kind == ActionKind::CallWorkflow {
                todo.push(a.target.clone());
            }
        }
    }
    kinds
}

impl Session {
    /// Starts `workflow_id`: `session_started`, the initial state's entry
    /// actions, then `state_entered`. Fails without emitting anything when an
    /// action kind the workflow (or anything it calls) needs is unbound.
    pub fn start(
        env: SessionEnv,
        session_id: impl Into<String>,
        workflow_id: &str,
        sinks: Vec<Box<dyn EventSink>>,
    ) -> Result<Self, EngineError> {
        let w = env
            .catalog
            .get(workflow_id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownWorkflow(workflow_id.to_string()))?;
        if let Some(k) = required_kinds(&env.catalog, &w)
            .into_iter()
            .find(|k| k.needs_executor() && !env.registry.is_bound(*k))
        {
            return Err(EngineError::ExecutorUnavailable(k));
        }
        let mut s = Self {
            state: SessionState {
                session_id: session_id.into(),
                ..SessionState::default()
            },
            env,
            events: Vec::new(),
            sinks,
        };
        s.emit(EventBody::SessionStarted {
            workflow: w.id.clone(),
            initial_state: w.initial_state.clone(),
            cursor_speed_ms: s.env.cursor_speed_ms,
        })?;
        if let Err(e) = s.enter_state(0, &w, &w.initial_state) {
            s.end("start failed")?;
            return Err(e);
        }
        Ok(s)
    }

    /// Rebuilds a session from its log. New events continue the sequence.
    pub fn restore(env: SessionEnv, events: Vec<SessionEvent>, sinks: Vec<Box<dyn EventSink>>) -> Result<Self, EngineError> {
        let state = SessionState::replay(&events)?;
        Ok(Self {
            env,
            state,
            events,
            sinks,
        })
    }

    pub fn add_sink(&mut self, sink: Box<dyn EventSink>) {
        self.sinks.push(sink);
    }

    pub fn id(&self) -> &str {
        &self.state.session_id
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn env(&self) -> &SessionEnv {
        &self.env
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    /// Events with `seq > after`.
    pub fn events_after(&self, after: u64) -> &[SessionEvent] {
        let start = (after as usize).min(self.events.len());
        &self.events[start..]
    }

    pub fn log_text(&self) -> String {
        self.events.iter().map(|e| e.to_line() + "\n").collect()
    }

    fn workflow(&self, id: &str) -> Result<Arc<WorkflowDefinition>, EngineError> {
        self.env
            .catalog
            .get(id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownWorkflow(id.to_string()))
    }

    fn active(&self) -> Result<(usize, Arc<WorkflowDefinition>, String), EngineError> {
        let frame = self.state.top().ok_or(EngineError::SessionEnded)?;
        Ok((self.state.depth() - 1, self.workflow(&frame.workflow)?, frame.state.clone()))
    }

    pub fn current_state_def(&self) -> Option<StateDef> {
        let f = self.state.top()?;
        self.env.catalog.get(&f.workflow)?.state(&f.state).cloned()
    }

    pub fn admissible(&self) -> Result<Vec<AdmissibleTrigger>, EngineError> {
        let (_, w, state) = self.active()?;
        w.admissible_commands(&state, &self.env.globals)
            .map_err(|u| EngineError::UnknownState {
                workflow: u.workflow,
                state: u.state,
            })
    }

    /// True once the root workflow sits in a terminal state.
    pub fn is_complete(&self) -> bool {
        self.state.depth() == 1
            && self
                .state
                .top()
                .and_then(|f| self.env.catalog.get(&f.workflow).map(|w| w.is_terminal(&f.state)))
                .unwrap_or(false)
    }

    fn emit(&mut self, body: EventBody) -> Result<(), EngineError> {
        let event = SessionEvent {
            seq: self.state.seq + 1,
            timestamp: self.env.clock.now_ms(),
            session_id: self.state.session_id.clone(),
            body,
        };
        let mut next = self.state.clone();
        next.apply(&event)?;
        let line = event.to_line();
        for sink in &mut self.sinks {
            sink.append(&event, &line).map_err(|e| EngineError::EventLog(e.to_string()))?;
        }
        self.state = next;
        self.events.push(event);
        Ok(())
    }

    pub fn end(&mut self, reason: &str) -> Result<(), EngineError> {
        if self.state.ended {
            return Ok(());
        }
        self.emit(EventBody::SessionEnded {
            reason: reason.to_string(),
        })
    }

    fn fire_outcome(&self, trigger: &str, kind: TriggerKind) -> FireOutcome {
        let f = self.state.top().cloned().unwrap_or(Frame {
            workflow: String::new(),
            state: String::new(),
            pending: None,
        });
        FireOutcome {
            trigger: trigger.to_string(),
            kind,
            workflow: f.workflow,
            state: f.state,
            depth: self.state.depth(),
        }
    }

    /// Executes one admissible command in the active frame: a transition,
    /// a jump state, or a global command. On failure the active state is
    /// left as it was.
    pub fn fire(&mut self, trigger: &str, origin: FireOrigin) -> Result<FireOutcome, EngineError> {
        if self.state.ended {
            return Err(EngineError::SessionEnded);
        }
        let (frame, w, state) = self.active()?;
        let inadmissible = || EngineError::InadmissibleTransition {
            trigger: trigger.to_string(),
            workflow: w.id.clone(),
            state: state.clone(),
        };
        if self.state.jump_return.is_some() {
            return Err(inadmissible());
        }
        if let Some(t) = w.transition(&state, trigger) {
            let t = t.clone();
            self.fire_transition(frame, &w, &t, origin)?;
            Ok(self.fire_outcome(trigger, TriggerKind::Transition))
        } else if let Some(j) = w.jump(trigger) {
            let actions = j.actions.clone();
            self.run_jump(frame, &w, &state, trigger, TriggerKind::Jump, origin, &actions, None)?;
            Ok(self.fire_outcome(trigger, TriggerKind::Jump))
        } else if let Some(g) = self.env.globals.get(trigger) {
            let behavior = g.behavior;
            self.run_jump(frame, &w, &state, trigger, TriggerKind::Global, origin, &[], Some(behavior))?;
            Ok(self.fire_outcome(trigger, TriggerKind::Global))
        } else {
            Err(inadmissible())
        }
    }

    /// [`Session::fire`], then autopilot continuation when it is on.
    pub fn dispatch(&mut self, trigger: &str, origin: FireOrigin) -> Result<DispatchOutcome, EngineError> {
        let fired = self.fire(trigger, origin)?;
        let autopilot = if self.state.autopilot_enabled && !self.state.ended {
            Some(self.run_autopilot()?)
        } else {
            None
        };
        Ok(DispatchOutcome { fired, autopilot })
    }

    /// Matches `text` against the active state's commands, records the
    /// decision, and dispatches a match.
    pub fn submit_utterance(&mut self, text: &str, matcher: &IntentMatcher) -> Result<UtteranceOutcome, EngineError> {
        if self.state.ended {
            return Err(EngineError::SessionEnded);
        }
        let q = Utterance::new(text);
        let candidates = candidates_in_state(&self.state, &self.env.catalog, &self.env.globals)?;
        let decision = matcher.decide(&q, &candidates)?;
        match &decision.outcome {
            Outcome::Matched { trigger, branch } => {
                let scores = decision
                    .ranking
                    .iter()
                    .find(|r| &r.trigger == trigger)
                    .map(|r| r.scores)
                    .expect("matched trigger is ranked");
                self.emit(EventBody::IntentMatched {
                    utterance: q.raw.clone(),
                    normalized: q.normalized.clone(),
                    trigger: trigger.clone(),
                    branch: *branch,
                    scores,
                })?;
                let trigger = trigger.clone();
                let dispatch = Some(self.dispatch(&trigger, FireOrigin::Intent));
                Ok(UtteranceOutcome { decision, dispatch })
            }
            Outcome::Rejected { reason } => {
                self.emit(EventBody::IntentRejected {
                    utterance: q.raw.clone(),
                    normalized: q.normalized.clone(),
                    reason: *reason,
                    ranking: decision.ranking.clone(),
                })?;
                Ok(UtteranceOutcome {
                    decision,
                    dispatch: None,
                })
            }
        }
    }

    pub fn set_autopilot(&mut self, enabled: bool) -> Result<(), EngineError> {
        if self.state.ended {
            return Err(EngineError::SessionEnded);
        }
        if self.state.autopilot_enabled != enabled {
            self.emit(EventBody::AutopilotToggled { enabled })?;
        }
        Ok(())
    }

    /// Fires each state's autopilot transition until the root workflow is
    /// terminal, a state needs confirmation, or autopilot is switched off.
    pub fn run_autopilot(&mut self) -> Result<AutopilotOutcome, EngineError> {
        if !self.state.autopilot_enabled {
            return Err(EngineError::AutopilotDisabled);
        }
        let mut steps = 0;
        loop {
            if self.state.ended {
                return Err(EngineError::SessionEnded);
            }
            if !self.state.autopilot_enabled {
                return Ok(AutopilotOutcome {
                    steps,
                    stop: AutopilotStop::Disabled,
                });
            }
            let (frame, w, state) = self.active()?;
            if w.is_terminal(&state) {
                return Ok(AutopilotOutcome {
                    steps,
                    stop: AutopilotStop::Terminal,
                });
            }
            let needs_confirmation = w.state(&state).is_some_and(|s| s.requires_confirmation);
            if needs_confirmation && !self.state.confirmed {
                self.emit(EventBody::AutopilotPaused { frame, state })?;
                return Ok(AutopilotOutcome {
                    steps,
                    stop: AutopilotStop::Paused,
                });
            }
            let Some(t) = w.autopilot_transition(&state).cloned() else {
                return Err(EngineError::InadmissibleTransition {
                    trigger: String::new(),
                    workflow: w.id.clone(),
                    state,
                });
            };
            if steps >= self.env.limits.max_autopilot_steps {
                return Err(EngineError::AutopilotStepLimit(self.env.limits.max_autopilot_steps));
            }
            self.fire_transition(frame, &w, &t, FireOrigin::Autopilot)?;
            steps += 1;
        }
    }

    fn fire_transition(
        &mut self,
        frame: usize,
        w: &Arc<WorkflowDefinition>,
        t: &TransitionDef,
        origin: FireOrigin,
    ) -> Result<(), EngineError> {
        if let Some(guard) = &t.guard_check {
            let r = self.run_action(frame, w, &t.source, guard, true)?;
            if r.status == ExecStatus::CheckFailed {
                return Err(EngineError::GuardFailed {
                    trigger: t.trigger.clone(),
                    feedback: r.feedback,
                });
            }
        }
        self.emit(EventBody::TransitionFired {
            frame,
            workflow: w.id.clone(),
            trigger: t.trigger.clone(),
            source: t.source.clone(),
            destination: t.destination.clone(),
            origin,
        })?;
        self.continue_transition(frame, w, t, 0)
    }

    /// Runs `t.actions[start..]`, then enters the destination. A workflow
    /// call suspends the transition; the callee's return resumes it.
    fn continue_transition(
        &mut self,
        frame: usize,
        w: &Arc<WorkflowDefinition>,
        t: &TransitionDef,
        start: usize,
    ) -> Result<(), EngineError> {
        for (i, a) in t.actions.iter().enumerate().skip(start) {
            if a.kind == ActionKind::CallWorkflow {
                return self.call_workflow(frame, w, t, i, a);
            }
            self.run_action(frame, w, &t.source, a, false)?;
        }
        self.enter_state(frame, w, &t.destination)
    }

    fn call_workflow(
        &mut self,
        frame: usize,
        w: &Arc<WorkflowDefinition>,
        t: &TransitionDef,
        index: usize,
        a: &ActionSpec,
    ) -> Result<(), EngineError> {
        let fail = |s: &mut Self, e: EngineError| -> Result<(), EngineError> {
            s.emit(EventBody::ActionFailed {
                frame,
                kind: ActionKind::CallWorkflow,
                feedback: e.to_string(),
                duration_ms: 0,
            })?;
            Err(e)
        };
        if self.state.depth() >= self.env.limits.max_call_depth {
            return fail(self, EngineError::CallDepthExceeded(self.env.limits.max_call_depth));
        }
        let child = match self.workflow(&a.target) {
            Ok(c) => c,
            Err(e) => return fail(self, e),
        };
        let child_frame = self.state.depth();
        self.emit(EventBody::WorkflowCalled {
            frame: child_frame,
            caller: w.id.clone(),
            workflow: child.id.clone(),
            initial_state: child.initial_state.clone(),
            resume: PendingCall {
                trigger: t.trigger.clone(),
                source: t.source.clone(),
                destination: t.destination.clone(),
                resume_at: index + 1,
            },
        })?;
        let entered = self.enter_state_actions(child_frame, &child, &child.initial_state);
        if let Err(e) = entered {
            self.emit(EventBody::WorkflowReturned {
                frame: child_frame,
                workflow: child.id.clone(),
                status: CompletionStatus::Failed,
            })?;
            return Err(e);
        }
        self.settle(child_frame, &child, &child.initial_state)
    }

    /// Entry actions, `state_entered`, and the return to the caller when a
    /// called workflow reaches a terminal state.
    fn enter_state(&mut self, frame: usize, w: &Arc<WorkflowDefinition>, state: &str) -> Result<(), EngineError> {
        self.enter_state_actions(frame, w, state)?;
        self.settle(frame, w, state)
    }

    fn enter_state_actions(&mut self, frame: usize, w: &Arc<WorkflowDefinition>, state: &str) -> Result<(), EngineError> {
        let def = w.state(state).ok_or_else(|| EngineError::UnknownState {
            workflow: w.id.clone(),
            state: state.to_string(),
        })?;
        for a in def.entry_actions.clone() {
            self.run_action(frame, w, state, &a, false)?;
        }
        Ok(())
    }

    fn settle(&mut self, frame: usize, w: &Arc<WorkflowDefinition>, state: &str) -> Result<(), EngineError> {
        self.emit(EventBody::StateEntered {
            frame,
            workflow: w.id.clone(),
            state: state.to_string(),
        })?;
        if frame > 0 && w.is_terminal(state) {
            self.emit(EventBody::WorkflowReturned {
                frame,
                workflow: w.id.clone(),
                status: CompletionStatus::Completed,
            })?;
            let parent = frame - 1;
            let f = self.state.stack[parent].clone();
            let pending = f.pending.expect("a called frame's parent has a pending transition");
            let pw = self.workflow(&f.workflow)?;
            let t = pw
                .transition(&pending.source, &pending.trigger)
                .cloned()
                .ok_or_else(|| EngineError::InadmissibleTransition {
                    trigger: pending.trigger.clone(),
                    workflow: pw.id.clone(),
                    state: pending.source.clone(),
                })?;
            return self.continue_transition(parent, &pw, &t, pending.resume_at);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn run_jump(
        &mut self,
        frame: usize,
        w: &Arc<WorkflowDefinition>,
        state: &str,
        trigger: &str,
        kind: TriggerKind,
        origin: FireOrigin,
        actions: &[ActionSpec],
        behavior: Option<GlobalBehavior>,
    ) -> Result<(), EngineError> {
        self.emit(EventBody::JumpStarted {
            frame,
            state: state.to_string(),
            trigger: trigger.to_string(),
            kind,
            origin,
        })?;
        for a in actions {
            if let Err(e) = self.run_action(frame, w, state, a, false) {
                self.emit(EventBody::JumpReturned {
                    frame,
                    state: state.to_string(),
                    trigger: trigger.to_string(),
                    status: CompletionStatus::Failed,
                    behavior: None,
                    helper: None,
                })?;
                return Err(e);
            }
        }
        let mut helper = None;
        match behavior {
            Some(GlobalBehavior::AutopilotOn) => self.set_autopilot(true)?,
            Some(GlobalBehavior::AutopilotOff) => self.set_autopilot(false)?,
            Some(b) => helper = Some(next_helper(self.state.helper, b)),
            None => {}
        }
        // Confirmation alone leaves the helper cursor where it is.
        if behavior == Some(GlobalBehavior::Confirm) {
            helper = None;
        }
        self.emit(EventBody::JumpReturned {
            frame,
            state: state.to_string(),
            trigger: trigger.to_string(),
            status: CompletionStatus::Completed,
            behavior,
            helper,
        })
    }

    /// Runs one action with the cursor delay first. Executor failures (and
    /// failed checks outside guards) emit `action_failed` and become errors.
    fn run_action(
        &mut self,
        frame: usize,
        w: &Arc<WorkflowDefinition>,
        state: &str,
        a: &ActionSpec,
        as_guard: bool,
    ) -> Result<ExecutionResult, EngineError> {
        if self.state.cursor_speed_ms > 0 {
            self.env.clock.sleep_ms(self.state.cursor_speed_ms);
        }
        self.emit(EventBody::ActionStarted {
            frame,
            kind: a.kind,
            target: a.target.clone(),
        })?;
        let clock = self.env.clock.clone();
        let ctx = ActionContext {
            session_id: &self.state.session_id,
            workflow: &w.id,
            state,
            timeout_ms: 0,
            clock: clock.as_ref(),
        };
        let result = self.env.registry.execute(a, &ctx);
        let r = match result {
            Err(unbound) => {
                self.emit(EventBody::ActionFailed {
                    frame,
                    kind: a.kind,
                    feedback: unbound.to_string(),
                    duration_ms: 0,
                })?;
                return Err(EngineError::ExecutorUnavailable(a.kind));
            }
            Ok(r) => r,
        };
        let failed = r.is_failure() || (!as_guard && r.status == ExecStatus::CheckFailed);
        if failed {
            self.emit(EventBody::ActionFailed {
                frame,
                kind: a.kind,
                feedback: r.feedback.clone(),
                duration_ms: r.duration_ms,
            })?;
            return Err(EngineError::ActionFailed {
                kind: a.kind,
                target: a.target.clone(),
                feedback: r.feedback,
            });
        }
        self.emit(EventBody::ActionCompleted {
            frame,
            kind: a.kind,
            status: r.status,
            feedback: r.feedback.clone(),
            duration_ms: r.duration_ms,
        })?;
        Ok(r)
    }
}

fn next_helper(h: HelperCursor, b: GlobalBehavior) -> HelperCursor {
    use crate::helper::HelperMode;
    match b {
        GlobalBehavior::Help => HelperCursor::default(),
        GlobalBehavior::NextSlide => HelperCursor {
            slide: h.slide + 1,
            ..h
        },
        GlobalBehavior::PreviousSlide => HelperCursor {
            slide: h.slide.saturating_sub(1),
            ..h
        },
        GlobalBehavior::SkipMode => HelperCursor {
            slide: 0,
            mode: HelperMode::Skip,
        },
        GlobalBehavior::DetailMode => HelperCursor {
            slide: 0,
            mode: HelperMode::Detail,
        },
        GlobalBehavior::Confirm | GlobalBehavior::AutopilotOn | GlobalBehavior::AutopilotOff => h,
    }
}
