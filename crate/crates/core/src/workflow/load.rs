use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ActionKind, ActionSpec, WorkflowDefinition, SCHEMA_VERSION};
use crate::commands::GlobalCommandSet;

/// Context used to resolve cross-references while validating.
///
/// Each optional set is only checked when present: a loader with no known
/// workflow ids accepts any `call_workflow` target.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Accept unknown fields instead of reporting them.
    pub lenient: bool,
    pub known_workflows: Option<BTreeSet<String>>,
    /// Element ids defined by the configured virtual-GUI scenarios.
    pub gui_elements: Option<BTreeSet<String>>,
    /// Document keys available in the helper manifest.
    pub helper_docs: Option<BTreeSet<String>>,
    /// Global commands jump triggers must not collide with. Standard set when `None`.
    pub globals: Option<GlobalCommandSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub path: String,
    pub message: String,
}

impl ValidationIssue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// All invariant violations found in one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<ValidationIssue>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for issue in &self.0 {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Validation(ValidationErrors),
}

impl LoadError {
    pub fn issues(&self) -> Vec<ValidationIssue> {
        match self {
            LoadError::Parse { line, column, message } => {
                vec![ValidationIssue::new(format!("line {line}, column {column}"), message.clone())]
            }
            LoadError::Validation(v) => v.0.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub definition: WorkflowDefinition,
    /// Non-fatal findings, such as helper documents that do not resolve.
    pub warnings: Vec<ValidationIssue>,
}

/// Parses and validates a workflow document in strict mode.
pub fn load_workflow(source: &str) -> Result<WorkflowDefinition, LoadError> {
    load_workflow_with(source, &LoadOptions::default()).map(|l| l.definition)
}

pub fn load_workflow_with(source: &str, opts: &LoadOptions) -> Result<Loaded, LoadError> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(source);
    let parsed: Result<WorkflowDefinition, _> =
        serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string()));
    let definition = parsed.and_then(|d| de.end().map(|_| d)).map_err(|e| LoadError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut issues: Vec<ValidationIssue> = Vec::new();
    if !opts.lenient {
        issues.extend(unknown.into_iter().map(|p| ValidationIssue::new(p, "unknown field")));
    }
    let standard = GlobalCommandSet::standard();
    let globals = opts.globals.as_ref().unwrap_or(&standard);
    let mut warnings = Vec::new();
    validate(&definition, opts, globals, &mut issues, &mut warnings);

    if issues.is_empty() {
        Ok(Loaded { definition, warnings })
    } else {
        Err(LoadError::Validation(ValidationErrors(issues)))
    }
}

fn validate(
    w: &WorkflowDefinition,
    opts: &LoadOptions,
    globals: &GlobalCommandSet,
    issues: &mut Vec<ValidationIssue>,
    warnings: &mut Vec<ValidationIssue>,
) {
    if w.schema_version != SCHEMA_VERSION {
        issues.push(ValidationIssue::new(
            "schema_version",
            format!("unsupported schema version `{}` (expected `{SCHEMA_VERSION}`)", w.schema_version),
        ));
    }
    if w.id.trim().is_empty() {
        issues.push(ValidationIssue::new("id", "workflow id must not be empty"));
    }
    if w.states.is_empty() {
        issues.push(ValidationIssue::new("states", "workflow has no states"));
    }

    let mut ids: HashSet<&str> = HashSet::new();
    for (i, s) in w.states.iter().enumerate() {
        let path = format!("states[{i}]");
        if s.id.is_empty() {
            issues.push(ValidationIssue::new(format!("{path}.id"), "state id must not be empty"));
        } else if !ids.insert(&s.id) {
            issues.push(ValidationIssue::new(format!("{path}.id"), format!("duplicate state id `{}`", s.id)));
        }
        if s.terminal != w.terminal_states.contains(&s.id) {
            issues.push(ValidationIssue::new(
                format!("{path}.terminal"),
                format!("state `{}` terminal flag disagrees with terminal_states", s.id),
            ));
        }
        if let (Some(doc), Some(known)) = (&s.helper_doc, &opts.helper_docs) {
            if !known.contains(doc) {
                warnings.push(ValidationIssue::new(
                    format!("{path}.helper_doc"),
                    format!("helper document `{doc}` not found in helper manifest"),
                ));
            }
        }
        for (j, a) in s.entry_actions.iter().enumerate() {
            let apath = format!("{path}.entry_actions[{j}]");
            if a.kind == ActionKind::CallWorkflow {
                issues.push(ValidationIssue::new(
                    format!("{apath}.kind"),
                    "entry actions cannot call workflows; call from a transition instead",
                ));
            }
            validate_action(a, &apath, opts, issues);
        }
    }

    if !ids.contains(w.initial_state.as_str()) {
        issues.push(ValidationIssue::new(
            "initial_state",
            format!("initial state `{}` is not defined", w.initial_state),
        ));
    }
    for t in &w.terminal_states {
        if !ids.contains(t.as_str()) {
            issues.push(ValidationIssue::new("terminal_states", format!("terminal state `{t}` is not defined")));
        }
    }

    let mut per_source: HashSet<(&str, &str)> = HashSet::new();
    let mut autopilot_sources: HashSet<&str> = HashSet::new();
    let mut transition_triggers: HashSet<&str> = HashSet::new();
    for (i, t) in w.transitions.iter().enumerate() {
        let path = format!("transitions[{i}]");
        if t.trigger.trim().is_empty() {
            issues.push(ValidationIssue::new(format!("{path}.trigger"), "trigger must not be empty"));
        }
        transition_triggers.insert(&t.trigger);
        if !ids.contains(t.source.as_str()) {
            issues.push(ValidationIssue::new(
                format!("{path}.source"),
                format!("transition `{}` leaves undefined state `{}`", t.trigger, t.source),
            ));
        }
        if !ids.contains(t.destination.as_str()) {
            issues.push(ValidationIssue::new(
                format!("{path}.destination"),
                format!("transition `{}` from `{}` targets undefined state `{}`", t.trigger, t.source, t.destination),
            ));
        }
        if !per_source.insert((&t.source, &t.trigger)) {
            issues.push(ValidationIssue::new(
                format!("{path}.trigger"),
                format!("trigger `{}` defined twice from state `{}`", t.trigger, t.source),
            ));
        }
        if w.is_terminal(&t.source) && ids.contains(t.source.as_str()) {
            issues.push(ValidationIssue::new(
                format!("{path}.source"),
                format!("terminal state `{}` must not have outgoing transitions", t.source),
            ));
        }
        if t.autopilot_default && !autopilot_sources.insert(&t.source) {
            issues.push(ValidationIssue::new(
                format!("{path}.autopilot_default"),
                format!("state `{}` has more than one autopilot default transition", t.source),
            ));
        }
        if globals.contains(&t.trigger) {
            issues.push(ValidationIssue::new(
                format!("{path}.trigger"),
                format!("trigger `{}` shadows a global command", t.trigger),
            ));
        }
        if let Some(g) = &t.guard_check {
            if !g.kind.is_check() {
                issues.push(ValidationIssue::new(
                    format!("{path}.guard_check.kind"),
                    format!("guard check must be a check action, got `{}`", g.kind),
                ));
            }
            validate_action(g, &format!("{path}.guard_check"), opts, issues);
        }
        for (j, a) in t.actions.iter().enumerate() {
            validate_action(a, &format!("{path}.actions[{j}]"), opts, issues);
        }
    }

    for s in &w.states {
        if !w.is_terminal(&s.id) && w.outgoing(&s.id).next().is_none() {
            issues.push(ValidationIssue::new(
                format!("states[{}]", w.states.iter().position(|x| x.id == s.id).unwrap_or(0)),
                format!("non-terminal state `{}` has no outgoing transition", s.id),
            ));
        }
    }

    let mut jump_triggers: HashSet<&str> = HashSet::new();
    for (i, j) in w.jump_states.iter().enumerate() {
        let path = format!("jump_states[{i}]");
        if j.trigger.trim().is_empty() {
            issues.push(ValidationIssue::new(format!("{path}.trigger"), "trigger must not be empty"));
        }
        if !jump_triggers.insert(&j.trigger) {
            issues.push(ValidationIssue::new(
                format!("{path}.trigger"),
                format!("duplicate jump trigger `{}`", j.trigger),
            ));
        }
        if globals.contains(&j.trigger) {
            issues.push(ValidationIssue::new(
                format!("{path}.trigger"),
                format!("jump trigger `{}` collides with a global command", j.trigger),
            ));
        }
        if transition_triggers.contains(j.trigger.as_str()) {
            issues.push(ValidationIssue::new(
                format!("{path}.trigger"),
                format!("jump trigger `{}` collides with a state transition trigger", j.trigger),
            ));
        }
        for (k, a) in j.actions.iter().enumerate() {
            let apath = format!("{path}.actions[{k}]");
            if a.kind == ActionKind::CallWorkflow {
                issues.push(ValidationIssue::new(
                    format!("{apath}.kind"),
                    "jump states cannot call workflows",
                ));
            }
            validate_action(a, &apath, opts, issues);
        }
    }
}

fn validate_action(a: &ActionSpec, path: &str, opts: &LoadOptions, issues: &mut Vec<ValidationIssue>) {
    match a.kind {
        ActionKind::Wait => {
            if a.wait_ms().is_none() {
                issues.push(ValidationIssue::new(
                    format!("{path}.target"),
                    format!("wait duration `{}` is not a non-negative integer of milliseconds", a.target),
                ));
            }
        }
        ActionKind::CallWorkflow => {
            if a.target.is_empty() {
                issues.push(ValidationIssue::new(format!("{path}.target"), "call_workflow needs a workflow id"));
            } else if let Some(known) = &opts.known_workflows {
                if !known.contains(&a.target) {
                    issues.push(ValidationIssue::new(
                        format!("{path}.target"),
                        format!("called workflow `{}` is not loadable", a.target),
                    ));
                }
            }
        }
        ActionKind::GuiClick => {
            if a.target.is_empty() {
                issues.push(ValidationIssue::new(format!("{path}.target"), "gui_click needs an element id"));
            } else if let Some(elements) = &opts.gui_elements {
                if !elements.contains(&a.target) {
                    issues.push(ValidationIssue::new(
                        format!("{path}.target"),
                        format!("element `{}` is not defined by any configured GUI scenario", a.target),
                    ));
                }
            }
        }
        ActionKind::Device | ActionKind::Script | ActionKind::Http => {
            if a.target.is_empty() {
                issues.push(ValidationIssue::new(format!("{path}.target"), format!("{} action needs a target", a.kind)));
            }
        }
        ActionKind::GuiCheck | ActionKind::Noop => {}
    }
}
