//! State-independent commands that every session accepts regardless of the
//! active state.

use serde::{Deserialize, Serialize};

/// Built-in behavior attached to a global command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalBehavior {
    AutopilotOn,
    AutopilotOff,
    Help,
    NextSlide,
    PreviousSlide,
    Confirm,
    SkipMode,
    DetailMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalCommand {
    pub trigger: String,
    pub behavior: GlobalBehavior,
}

/// Ordered set of global commands. Triggers are unique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalCommandSet {
    entries: Vec<GlobalCommand>,
}

impl GlobalCommandSet {
    /// Autopilot toggles, documentation, and helper slide navigation.
    pub fn standard() -> Self {
        use GlobalBehavior::*;
        let entries = [
            ("AutoPilotOn", AutopilotOn),
            ("AutoPilotOff", AutopilotOff),
            ("Help", Help),
            ("NextSlide", NextSlide),
            ("PreviousSlide", PreviousSlide),
            ("Ok", Confirm),
            ("Skip", SkipMode),
            ("Detail", DetailMode),
        ]
        .into_iter()
        .map(|(trigger, behavior)| GlobalCommand {
            trigger: trigger.to_string(),
            behavior,
        })
        .collect();
        Self { entries }
    }

    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Builds a set from explicit entries, dropping later duplicates of a trigger.
    pub fn from_entries(entries: impl IntoIterator<Item = GlobalCommand>) -> Self {
        let mut out: Vec<GlobalCommand> = Vec::new();
        for e in entries {
            if !out.iter().any(|o| o.trigger == e.trigger) {
                out.push(e);
            }
        }
        Self { entries: out }
    }

    pub fn entries(&self) -> &[GlobalCommand] {
        &self.entries
    }

    pub fn triggers(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.trigger.as_str())
    }

    pub fn get(&self, trigger: &str) -> Option<&GlobalCommand> {
        self.entries.iter().find(|e| e.trigger == trigger)
    }

    pub fn contains(&self, trigger: &str) -> bool {
        self.get(trigger).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for GlobalCommandSet {
    fn default() -> Self {
        Self::standard()
    }
}
