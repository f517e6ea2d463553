//! Random workflow families and a fail-on-demand executor for property tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};
use serde_json::{json, Value};

use statebuddy_core::engine::SessionEnv;
use statebuddy_core::exec::{ActionContext, ExecError, ExecutionResult, Executor, ExecutorRegistry};
use statebuddy_core::workflow::{load_workflow, ActionKind, ActionSpec, WorkflowCatalog, WorkflowDefinition};
use statebuddy_core::ManualClock;

pub const TRIGGERS: [&str; 5] = ["T0", "T1", "T2", "T3", "T4"];
pub const JUMPS: [&str; 2] = ["J0", "J1"];
/// Globals that do not start autopilot.
pub const QUIET_GLOBALS: [&str; 4] = ["Help", "NextSlide", "Ok", "Detail"];

/// Script actions succeed unless their target is `fail`.
pub struct Flaky;

impl Executor for Flaky {
    fn execute(&self, a: &ActionSpec, _: &ActionContext<'_>) -> Result<ExecutionResult, ExecError> {
        if a.target == "fail" {
            Err(ExecError::Failed("scripted failure".into()))
        } else {
            Ok(ExecutionResult::ok(a.target.clone()))
        }
    }
}

fn action(rng: &mut dyn RngCore, failures: bool) -> Value {
    match rng.random_range(0..4) {
        0 => json!({"kind": "wait", "target": rng.random_range(0..20).to_string()}),
        1 => json!({"kind": "none"}),
        2 if failures && rng.random_bool(0.15) => json!({"kind": "script", "target": "fail"}),
        _ => json!({"kind": "script", "target": "ok"}),
    }
}

pub struct FamilyOptions {
    pub max_workflows: usize,
    pub max_states: usize,
    pub calls: bool,
    pub failures: bool,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            max_workflows: 3,
            max_states: 7,
            calls: true,
            failures: true,
        }
    }
}

/// A valid workflow. Transitions may call any of `callees`.
pub fn random_workflow(rng: &mut dyn RngCore, id: &str, callees: &[String], o: &FamilyOptions) -> WorkflowDefinition {
    let n = rng.random_range(2..=o.max_states.max(2));
    let names: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    let mut terminal: BTreeSet<usize> = BTreeSet::from([n - 1]);
    for i in 1..n - 1 {
        if rng.random_bool(0.15) {
            terminal.insert(i);
        }
    }
    let mut states = Vec::new();
    for (i, s) in names.iter().enumerate() {
        // A failing root entry would stop the session before it starts.
        let fails = o.failures && !(i == 0 && id == "w0");
        let entry: Vec<Value> = (0..rng.random_range(0..=1)).map(|_| action(rng, fails)).collect();
        states.push(json!({
            "id": s,
            "terminal": terminal.contains(&i),
            "requires_confirmation": rng.random_bool(0.15),
            "entry_actions": entry,
        }));
    }
    let mut transitions = Vec::new();
    for (i, s) in names.iter().enumerate() {
        if terminal.contains(&i) {
            continue;
        }
        let k = rng.random_range(1..=3);
        let mut pool = TRIGGERS.to_vec();
        let default_at = rng.random_range(0..k + 1);
        for j in 0..k {
            let t = pool.remove(rng.random_range(0..pool.len()));
            let mut actions: Vec<Value> = (0..rng.random_range(0..=2)).map(|_| action(rng, o.failures)).collect();
            if o.calls && !callees.is_empty() && rng.random_bool(0.25) {
                let at = rng.random_range(0..=actions.len());
                actions.insert(at, json!({"kind": "call_workflow", "target": callees.choose(rng).unwrap()}));
            }
            transitions.push(json!({
                "trigger": t,
                "source": s,
                "destination": names[rng.random_range(0..n)],
                "actions": actions,
                "autopilot_default": j == default_at,
            }));
        }
    }
    let jumps: Vec<Value> = JUMPS[..rng.random_range(0..=2)]
        .iter()
        .map(|j| json!({"trigger": j, "actions": (0..rng.random_range(0..=2)).map(|_| action(rng, o.failures)).collect::<Vec<_>>()}))
        .collect();
    let doc = json!({
        "schema_version": "1",
        "id": id,
        "initial_state": "S0",
        "terminal_states": terminal.iter().map(|i| names[*i].clone()).collect::<Vec<_>>(),
        "states": states,
        "transitions": transitions,
        "jump_states": jumps,
    });
    load_workflow(&doc.to_string()).unwrap_or_else(|e| panic!("generator produced an invalid workflow: {e}\n{doc:#}"))
}

/// `w0` calls only later workflows, so every call chain is finite.
pub fn random_family(rng: &mut dyn RngCore, o: &FamilyOptions) -> Vec<WorkflowDefinition> {
    let k = rng.random_range(1..=o.max_workflows.max(1));
    let ids: Vec<String> = (0..k).map(|i| format!("w{i}")).collect();
    (0..k).map(|i| random_workflow(rng, &ids[i], &ids[i + 1..], o)).collect()
}

pub fn env_for(family: &[WorkflowDefinition]) -> (SessionEnv, Arc<ManualClock>) {
    let mut catalog = WorkflowCatalog::new();
    for w in family {
        catalog.insert(w.clone());
    }
    let clock = Arc::new(ManualClock::new(1_700_000_000_000));
    let mut registry = ExecutorRegistry::with_builtins();
    registry.bind(ActionKind::Script, Arc::new(Flaky));
    (SessionEnv::new(Arc::new(catalog), registry, clock.clone()), clock)
}

/// States reachable from the initial state along transitions (breadth first).
pub fn reachable(w: &WorkflowDefinition) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([w.initial_state.clone()]);
    let mut queue = VecDeque::from([w.initial_state.clone()]);
    while let Some(s) = queue.pop_front() {
        for t in &w.transitions {
            if t.source == s && seen.insert(t.destination.clone()) {
                queue.push_back(t.destination.clone());
            }
        }
    }
    seen
}

/// Shortest trigger path from the initial state to each reachable state.
pub fn paths(w: &WorkflowDefinition) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::from([(w.initial_state.clone(), Vec::new())]);
    let mut queue = VecDeque::from([w.initial_state.clone()]);
    while let Some(s) = queue.pop_front() {
        let base = out[&s].clone();
        for t in w.transitions.iter().filter(|t| t.source == s) {
            if !out.contains_key(&t.destination) {
                let mut p = base.clone();
                p.push(t.trigger.clone());
                out.insert(t.destination.clone(), p);
                queue.push_back(t.destination.clone());
            }
        }
    }
    out
}

pub fn random_command(rng: &mut dyn RngCore) -> &'static str {
    match rng.random_range(0..10) {
        0 => JUMPS.choose(rng).unwrap(),
        1 => QUIET_GLOBALS.choose(rng).unwrap(),
        2 => "Bogus",
        _ => TRIGGERS.choose(rng).unwrap(),
    }
}

#[allow(unused_imports)]
pub use checks::*;

mod checks {
    use rand::seq::IndexedRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use statebuddy_core::engine::{AutopilotStop, EngineError, EventBody, EventSink, FireOrigin, Session, SessionEvent, SessionState};
    use statebuddy_core::workflow::{ActionKind, WorkflowDefinition};

    use super::*;

    pub const AUTOPILOT_LIMIT: usize = 64;

    pub struct Run {
        pub family: Vec<WorkflowDefinition>,
        pub session: Session,
        pub commands: Vec<(String, Result<(), String>)>,
    }

    pub fn env_limited(family: &[WorkflowDefinition]) -> statebuddy_core::SessionEnv {
        let (mut env, _) = env_for(family);
        env.limits.max_autopilot_steps = AUTOPILOT_LIMIT;
        env
    }

    fn start(family: &[WorkflowDefinition], id: &str, sinks: Vec<Box<dyn EventSink>>) -> Session {
        Session::start(env_limited(family), id, "w0", sinks).expect("start")
    }

    fn workflow<'a>(family: &'a [WorkflowDefinition], id: &str) -> &'a WorkflowDefinition {
        family.iter().find(|w| w.id == id).expect("known workflow")
    }

    fn all_reachable(family: &[WorkflowDefinition], s: &SessionState) -> Result<(), String> {
        for f in &s.stack {
            if !reachable(workflow(family, &f.workflow)).contains(&f.state) {
                return Err(format!("{}:{} is not reachable from the initial state", f.workflow, f.state));
            }
        }
        Ok(())
    }

    /// Fires `steps` random commands, checking each outcome against the
    /// definitions. Returns the first violation.
    pub fn admissibility(seed: u64, steps: usize, o: &FamilyOptions) -> Result<Run, String> {
        admissibility_with(seed, steps, o, "prop", Vec::new())
    }

    pub fn admissibility_with(
        seed: u64,
        steps: usize,
        o: &FamilyOptions,
        id: &str,
        sinks: Vec<Box<dyn EventSink>>,
    ) -> Result<Run, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = random_family(&mut rng, o);
        let mut session = start(&family, id, sinks);
        let mut commands = Vec::new();
        all_reachable(&family, session.state())?;
        for _ in 0..steps {
            if session.state().ended {
                break;
            }
            let before = session.state().clone();
            let n_before = session.events().len();
            let top = before.top().expect("active frame").clone();
            let w = workflow(&family, &top.workflow);
            let defined: Vec<&str> =
                w.transitions.iter().filter(|t| t.source == top.state).map(|t| t.trigger.as_str()).collect();
            let cmd = match defined.choose(&mut rng) {
                Some(t) if rng.random_bool(0.5) => t,
                _ => random_command(&mut rng),
            };
            let transition = w.transitions.iter().find(|t| t.source == top.state && t.trigger == cmd);
            let is_jump = w.jump_states.iter().any(|j| j.trigger == cmd);
            let is_global = session.env().globals.contains(cmd);
            let r = session.fire(cmd, FireOrigin::Direct);
            let new = &session.events()[n_before..];
            let ctx = || format!("seed {seed}: `{cmd}` in {}:{}", top.workflow, top.state);
            match (&r, transition) {
                (Err(EngineError::InadmissibleTransition { .. }), None) if !is_jump && !is_global => {
                    if session.state() != &before || !new.is_empty() {
                        return Err(format!("{}: rejected command changed the session", ctx()));
                    }
                }
                (_, None) if !is_jump && !is_global => {
                    return Err(format!("{}: undefined command was not rejected: {r:?}", ctx()));
                }
                (Err(EngineError::InadmissibleTransition { .. }), _) => {
                    return Err(format!("{}: defined command was rejected", ctx()));
                }
                (_, Some(t)) => {
                    let fired = new.iter().find_map(|e| match &e.body {
                        EventBody::TransitionFired { workflow, trigger, source, destination, .. } => {
                            Some((workflow, trigger, source, destination))
                        }
                        _ => None,
                    });
                    if fired != Some((&w.id, &t.trigger, &t.source, &t.destination)) {
                        return Err(format!("{}: first transition_fired was {fired:?}", ctx()));
                    }
                    let plain = !t.actions.iter().any(|a| a.kind == ActionKind::CallWorkflow);
                    if r.is_ok() && plain && before.depth() == 1 && session.state().top().unwrap().state != t.destination {
                        return Err(format!("{}: expected to land in {}", ctx(), t.destination));
                    }
                    if r.is_err() && plain && before.depth() == 1 && session.state().stack != before.stack {
                        return Err(format!("{}: failed transition moved the session", ctx()));
                    }
                }
                (_, None) => {
                    // Jump or global: the stack comes back untouched.
                    if session.state().stack != before.stack {
                        return Err(format!("{}: jump did not return to its origin", ctx()));
                    }
                    if session.state().jump_return.is_some() {
                        return Err(format!("{}: jump left a return marker", ctx()));
                    }
                    let started = new.iter().filter(|e| matches!(e.body, EventBody::JumpStarted { .. })).count();
                    let returned = new.iter().filter(|e| matches!(e.body, EventBody::JumpReturned { .. })).count();
                    if (started, returned) != (1, 1) {
                        return Err(format!("{}: {started} jump starts, {returned} returns", ctx()));
                    }
                }
            }
            all_reachable(&family, session.state()).map_err(|e| format!("{}: {e}", ctx()))?;
            commands.push((cmd.to_string(), r.map(|_| ()).map_err(|e| e.code().to_string())));
        }
        Ok(Run { family, session, commands })
    }

    /// Calls and returns nest like brackets and the stack depth always equals
    /// one plus the number of open calls.
    pub fn bracket_balance(events: &[SessionEvent]) -> Result<(), String> {
        let mut state = SessionState::default();
        let mut open: Vec<String> = Vec::new();
        for e in events {
            match &e.body {
                EventBody::WorkflowCalled { workflow, .. } => open.push(workflow.clone()),
                EventBody::WorkflowReturned { workflow, .. } => match open.pop() {
                    Some(w) if &w == workflow => {}
                    other => return Err(format!("seq {}: {workflow} returned, open call was {other:?}", e.seq)),
                },
                _ => {}
            }
            state.apply(e).map_err(|err| err.to_string())?;
            if !state.stack.is_empty() && state.depth() != open.len() + 1 {
                return Err(format!("seq {}: depth {} with {} open calls", e.seq, state.depth(), open.len()));
            }
        }
        Ok(())
    }

    /// Autopilot from the current state stops within the step limit, and a
    /// stop reason always matches the state it stopped in.
    pub fn autopilot_terminates(run: &mut Run) -> Result<(), String> {
        let s = &mut run.session;
        if s.state().ended {
            return Ok(());
        }
        let n_before = s.events().len();
        s.set_autopilot(true).map_err(|e| e.to_string())?;
        let r = s.run_autopilot();
        let fired = s.events()[n_before..]
            .iter()
            .filter(|e| matches!(e.body, EventBody::TransitionFired { origin: FireOrigin::Autopilot, .. }))
            .count();
        if fired > AUTOPILOT_LIMIT {
            return Err(format!("autopilot fired {fired} transitions past a limit of {AUTOPILOT_LIMIT}"));
        }
        let top = s.state().top().unwrap().clone();
        let w = workflow(&run.family, &top.workflow);
        match r {
            Ok(out) => {
                if out.steps != fired {
                    return Err(format!("reported {} steps, fired {fired}", out.steps));
                }
                match out.stop {
                    AutopilotStop::Terminal if !s.is_complete() => Err("stopped as terminal before completion".into()),
                    AutopilotStop::Paused if !w.state(&top.state).is_some_and(|d| d.requires_confirmation) => {
                        Err(format!("paused in {} which needs no confirmation", top.state))
                    }
                    AutopilotStop::Disabled => Err("autopilot switched itself off".into()),
                    _ => Ok(()),
                }
            }
            Err(EngineError::AutopilotStepLimit(_)) if fired == AUTOPILOT_LIMIT => Ok(()),
            Err(EngineError::ActionFailed { .. }) => Ok(()),
            Err(e) => Err(format!("autopilot error after {fired} steps: {e}")),
        }
    }

    /// Where autopilot should stop in a workflow without calls or failures.
    pub fn predicted_autopilot(w: &WorkflowDefinition, from: &str, confirmed: bool) -> (usize, Option<AutopilotStop>) {
        let mut state = from.to_string();
        let mut steps = 0;
        let mut confirmed = confirmed;
        loop {
            if w.is_terminal(&state) {
                return (steps, Some(AutopilotStop::Terminal));
            }
            if w.state(&state).unwrap().requires_confirmation && !confirmed {
                return (steps, Some(AutopilotStop::Paused));
            }
            if steps == AUTOPILOT_LIMIT {
                return (steps, None);
            }
            let out: Vec<_> = w.transitions.iter().filter(|t| t.source == state).collect();
            let t = out.iter().find(|t| t.autopilot_default).unwrap_or(&out[0]);
            state = t.destination.clone();
            steps += 1;
            confirmed = false;
        }
    }

    /// Autopilot in a flat workflow follows exactly the predicted path.
    pub fn autopilot_matches_prediction(seed: u64) -> Result<(), String> {
        let o = FamilyOptions { max_workflows: 1, calls: false, failures: false, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = random_family(&mut rng, &o);
        let w = &family[0];
        let mut s = start(&family, "auto", Vec::new());
        for _ in 0..rng.random_range(0..6) {
            let _ = s.fire(random_command(&mut rng), FireOrigin::Direct);
        }
        let from = s.state().top().unwrap().state.clone();
        let (steps, stop) = predicted_autopilot(w, &from, s.state().confirmed);
        s.set_autopilot(true).map_err(|e| e.to_string())?;
        let got = s.run_autopilot();
        match (got, stop) {
            (Ok(out), Some(stop)) if out.steps == steps && out.stop == stop => Ok(()),
            (Err(EngineError::AutopilotStepLimit(_)), None) => Ok(()),
            (got, _) => Err(format!("seed {seed}: from {from} predicted {steps} steps to {stop:?}, got {got:?}")),
        }
    }
}

#[allow(unused_imports)]
pub use durability::*;

mod durability {
    use std::path::Path;
    use std::sync::Arc;

    use statebuddy_core::demo;
    use statebuddy_core::engine::{list_logs, log_path, read_log, JsonlSink, Session, SessionState};
    use statebuddy_core::transcript::{replay, Transcript};
    use statebuddy_core::{Deployment, ManualClock, SessionEnv};

    use super::*;

    pub const RANDOM_FIXTURES: u64 = 40;

    fn sink(dir: &Path, id: &str) -> Vec<Box<dyn statebuddy_core::engine::EventSink>> {
        vec![Box::new(JsonlSink::open(&log_path(dir, id)).expect("open log"))]
    }

    /// Writes every fixture session to `dir` and returns each one's final
    /// state and the env it needs, keyed by session id.
    pub fn write_fixture_sessions(dir: &Path) -> BTreeMap<String, (SessionState, SessionEnv)> {
        let mut out = BTreeMap::new();
        let d = Deployment::demo();
        for (id, root, text) in [
            ("impeller", demo::CHAIN_ROOT, demo::IMPELLER_TRANSCRIPT),
            ("components", "components", demo::COMPONENTS_TRANSCRIPT),
        ] {
            let env = d.env(Arc::new(ManualClock::new(1_700_000_000_000)));
            let mut s = Session::start(env.clone(), id, root, sink(dir, id)).expect("start demo session");
            replay(&mut s, &Transcript::parse(text), &d.matcher).expect("replay transcript");
            out.insert(id.to_string(), (s.state().clone(), env));
        }
        // One left open mid-run, without an end event.
        let env = d.env(Arc::new(ManualClock::new(1_700_000_000_000)));
        let mut s = Session::start(env.clone(), "open", demo::CHAIN_ROOT, sink(dir, "open")).expect("start");
        for line in demo::IMPELLER_TRANSCRIPT.lines().filter(|l| !l.starts_with('#')).take(9) {
            let _ = s.submit_utterance(line, &d.matcher);
        }
        out.insert("open".to_string(), (s.state().clone(), env));

        for seed in 0..RANDOM_FIXTURES {
            let id = format!("random-{seed:03}");
            let run = admissibility_with(seed, 50, &FamilyOptions::default(), &id, sink(dir, &id)).expect("random run");
            out.insert(id, (run.session.state().clone(), env_limited(&run.family)));
        }
        out
    }

    /// Reloads every log in `dir` and compares the rebuilt state with the
    /// one recorded before the restart. Returns the number of sessions.
    pub fn restore_and_compare(
        dir: &Path,
        expected: &BTreeMap<String, (SessionState, SessionEnv)>,
    ) -> Result<usize, String> {
        let logs = list_logs(dir).map_err(|e| e.to_string())?;
        if logs.len() != expected.len() {
            return Err(format!("{} logs on disk, {} sessions written", logs.len(), expected.len()));
        }
        for path in logs {
            let events = read_log(&path).map_err(|e| e.to_string())?;
            let id = events.first().map(|e| e.session_id.clone()).ok_or("empty log")?;
            let (want, env) = expected.get(&id).ok_or_else(|| format!("unexpected session {id}"))?;
            let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
            let s = Session::restore(env.clone(), events, Vec::new()).map_err(|e| format!("{id}: {e}"))?;
            if s.state() != want {
                return Err(format!("{id}: restored {:?}, expected {:?}", s.state(), want));
            }
            if s.log_text() != text {
                return Err(format!("{id}: re-serialized log differs from the file"));
            }
        }
        Ok(expected.len())
    }
}
