//! Declarative workflow definitions: states, transitions, jump states and the
//! actions they trigger.
//!
//! A definition is immutable once loaded. Definition order of states and
//! transitions is meaningful: it drives autopilot fallback, display order and
//! tie-breaking in the intent matcher.

mod catalog;
mod diagram;
mod load;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::GlobalCommandSet;

pub use catalog::{CatalogDiagnostic, Severity, WorkflowCatalog};
pub use diagram::export_diagram;
pub use load::{load_workflow, load_workflow_with, LoadError, LoadOptions, Loaded, ValidationErrors, ValidationIssue};

/// Current (and only) schema version understood by the loader.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowDefinition {
    pub schema_version: String,
    pub id: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub initial_state: String,
    #[serde(default)]
    pub terminal_states: BTreeSet<String>,
    pub states: Vec<StateDef>,
    #[serde(default)]
    pub transitions: Vec<TransitionDef>,
    #[serde(default)]
    pub jump_states: Vec<JumpStateDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDef {
    pub id: String,
    #[serde(default)]
    pub human_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helper_doc: Option<String>,
    #[serde(default)]
    pub entry_actions: Vec<ActionSpec>,
    /// Autopilot pauses here until the operator confirms.
    #[serde(default)]
    pub requires_confirmation: bool,
    #[serde(default)]
    pub terminal: bool,
}

impl StateDef {
    /// Display text, falling back to the id.
    pub fn label(&self) -> &str {
        if self.human_label.is_empty() {
            &self.id
        } else {
            &self.human_label
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDef {
    pub trigger: String,
    pub source: String,
    pub destination: String,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
    #[serde(default)]
    pub autopilot_default: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard_check: Option<ActionSpec>,
}

/// A globally triggerable action sequence that returns to the originating
/// state when it completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpStateDef {
    pub trigger: String,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    GuiClick,
    GuiCheck,
    Device,
    Script,
    Http,
    CallWorkflow,
    Wait,
    #[serde(rename = "none")]
    Noop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::GuiClick,
        ActionKind::GuiCheck,
        ActionKind::Device,
        ActionKind::Script,
        ActionKind::Http,
        ActionKind::CallWorkflow,
        ActionKind::Wait,
        ActionKind::Noop,
    ];

    /// Kinds whose result is a pass/fail check rather than an effect.
    pub fn is_check(self) -> bool {
        matches!(self, ActionKind::GuiCheck)
    }

    /// Kinds dispatched through the executor registry. Workflow calls are
    /// handled by the engine itself.
    pub fn needs_executor(self) -> bool {
        !matches!(self, ActionKind::CallWorkflow)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::GuiClick => "gui_click",
            ActionKind::GuiCheck => "gui_check",
            ActionKind::Device => "device",
            ActionKind::Script => "script",
            ActionKind::Http => "http",
            ActionKind::CallWorkflow => "call_workflow",
            ActionKind::Wait => "wait",
            ActionKind::Noop => "none",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A tool invocation: `target` is interpreted per kind (element id, screen
/// text, device command, program, URL, workflow id, milliseconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub kind: ActionKind,
    #[serde(default)]
    pub target: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl ActionSpec {
    pub fn new(kind: ActionKind, target: impl Into<String>) -> Self {
        Self {
            kind,
            target: target.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(Value::as_str)
    }

    /// Wait duration in milliseconds, if `target` parses as one.
    pub fn wait_ms(&self) -> Option<u64> {
        self.target.trim().parse().ok()
    }
}

/// Where a trigger available in a state comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    Transition,
    Jump,
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleTrigger {
    pub trigger: String,
    pub kind: TriggerKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown state `{state}` in workflow `{workflow}`")]
pub struct UnknownState {
    pub workflow: String,
    pub state: String,
}

impl WorkflowDefinition {
    pub fn state(&self, id: &str) -> Option<&StateDef> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn is_terminal(&self, id: &str) -> bool {
        self.terminal_states.contains(id) || self.state(id).is_some_and(|s| s.terminal)
    }

    pub fn title(&self) -> &str {
        self.metadata.get("title").map(String::as_str).unwrap_or(&self.id)
    }

    /// Transitions leaving `state`, in definition order.
    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a TransitionDef> + 'a {
        self.transitions.iter().filter(move |t| t.source == state)
    }

    pub fn transition(&self, state: &str, trigger: &str) -> Option<&TransitionDef> {
        self.transitions.iter().find(|t| t.source == state && t.trigger == trigger)
    }

    pub fn jump(&self, trigger: &str) -> Option<&JumpStateDef> {
        self.jump_states.iter().find(|j| j.trigger == trigger)
    }

    /// The transition autopilot takes from `state`: the flagged default, or
    /// the first listed one.
    pub fn autopilot_transition(&self, state: &str) -> Option<&TransitionDef> {
        let mut out = self.transitions.iter().filter(|t| t.source == state);
        let first = out.clone().next();
        out.find(|t| t.autopilot_default).or(first)
    }

    /// Commands available in `state`: its own transitions, then jump states,
    /// then global commands, each group in definition order.
    pub fn admissible_commands(
        &self,
        state: &str,
        globals: &GlobalCommandSet,
    ) -> Result<Vec<AdmissibleTrigger>, UnknownState> {
        if self.state(state).is_none() {
            return Err(UnknownState {
                workflow: self.id.clone(),
                state: state.to_string(),
            });
        }
        let mut out: Vec<AdmissibleTrigger> = Vec::new();
        let groups = self
            .outgoing(state)
            .map(|t| (t.trigger.as_str(), TriggerKind::Transition))
            .chain(self.jump_states.iter().map(|j| (j.trigger.as_str(), TriggerKind::Jump)))
            .chain(globals.triggers().map(|t| (t, TriggerKind::Global)));
        for (trigger, kind) in groups {
            if !out.iter().any(|a| a.trigger == trigger) {
                out.push(AdmissibleTrigger {
                    trigger: trigger.to_string(),
                    kind,
                });
            }
        }
        Ok(out)
    }

    pub fn admissible_triggers(
        &self,
        state: &str,
        globals: &GlobalCommandSet,
    ) -> Result<Vec<String>, UnknownState> {
        Ok(self
            .admissible_commands(state, globals)?
            .into_iter()
            .map(|a| a.trigger)
            .collect())
    }

    /// Every action in the definition, with workflow calls included.
    pub fn all_actions(&self) -> impl Iterator<Item = &ActionSpec> {
        self.states
            .iter()
            .flat_map(|s| s.entry_actions.iter())
            .chain(
                self.transitions
                    .iter()
                    .flat_map(|t| t.actions.iter().chain(t.guard_check.iter())),
            )
            .chain(self.jump_states.iter().flat_map(|j| j.actions.iter()))
    }

    /// Workflow ids this definition calls directly.
    pub fn called_workflows(&self) -> BTreeSet<&str> {
        self.all_actions()
            .filter(|a| a.kind == ActionKind::CallWorkflow)
            .map(|a| a.target.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workflow definitions always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn three_state() -> WorkflowDefinition {
        load_workflow(include_str!("../../tests/fixtures/three_state.json")).unwrap()
    }

    #[test]
    fn admissible_order_is_transitions_jumps_globals() {
        let w = three_state();
        let globals = GlobalCommandSet::standard();
        let got = w.admissible_triggers("Working", &globals).unwrap();
        let mut expected = vec!["NextState".to_string(), "BackState".to_string(), "KillAllStudios".to_string()];
        expected.extend(globals.triggers().map(String::from));
        assert_eq!(got, expected);
    }

    #[test]
    fn terminal_state_only_has_jumps_and_globals() {
        let w = three_state();
        let globals = GlobalCommandSet::standard();
        let got = w.admissible_commands("Done", &globals).unwrap();
        assert!(got.iter().all(|a| a.kind != TriggerKind::Transition));
        assert_eq!(got.len(), 1 + globals.len());
    }

    #[test]
    fn five_outgoing_transitions_are_counted() {
        let mut w = three_state();
        for (i, dest) in ["Ready", "Working", "Done", "Ready", "Done"].iter().enumerate() {
            w.transitions.push(TransitionDef {
                trigger: format!("Extra{i}"),
                source: "Hub".into(),
                destination: dest.to_string(),
                actions: vec![],
                autopilot_default: false,
                guard_check: None,
            });
        }
        w.states.push(StateDef {
            id: "Hub".into(),
            human_label: String::new(),
            helper_doc: None,
            entry_actions: vec![],
            requires_confirmation: false,
            terminal: false,
        });
        let globals = GlobalCommandSet::standard();
        let got = w.admissible_triggers("Hub", &globals).unwrap();
        assert_eq!(got.len(), 5 + w.jump_states.len() + globals.len());
    }

    #[test]
    fn unknown_state_is_an_error() {
        let w = three_state();
        let err = w.admissible_triggers("Nowhere", &GlobalCommandSet::standard()).unwrap_err();
        assert_eq!(err.state, "Nowhere");
    }

    #[test]
    fn autopilot_falls_back_to_first_listed() {
        let w = three_state();
        assert_eq!(w.autopilot_transition("Working").unwrap().trigger, "NextState");
        assert!(w.autopilot_transition("Done").is_none());
    }

    #[test]
    fn action_kind_names_round_trip() {
        for kind in ActionKind::ALL {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.as_str()));
            let back: ActionKind = serde_json::from_str(&json).unwrap();
            assert_eq!(back, kind);
        }
    }
}
