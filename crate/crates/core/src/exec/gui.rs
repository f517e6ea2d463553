//! Declarative stand-in for a third-party GUI application.
//!
//! Element ids play the role of UI template images: a click succeeds when the
//! element is on the current screen, and may move the app to another screen.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ActionContext, ExecError, ExecutionResult, Executor};
use crate::workflow::{ActionKind, ActionSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenDef {
    #[serde(default)]
    pub elements: BTreeSet<String>,
    #[serde(default)]
    pub visible_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDef {
    screen: String,
    element: String,
    next: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    app_id: String,
    screens: BTreeMap<String, ScreenDef>,
    #[serde(default)]
    edges: Vec<EdgeDef>,
    initial_screen: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuiInteraction {
    Click {
        screen: String,
        element: String,
        status: super::ExecStatus,
    },
    Check {
        screen: String,
        needle: String,
        found: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario document: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("element `{0}` is not defined anywhere in the scenario")]
    UnknownElement(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualGuiScenario {
    app_id: String,
    screens: BTreeMap<String, ScreenDef>,
    edges: BTreeMap<(String, String), String>,
    initial_screen: String,
    current_screen: String,
    action_log: Vec<GuiInteraction>,
}

impl VirtualGuiScenario {
    pub fn parse(source: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(source).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if !file.screens.contains_key(&file.initial_screen) {
            return Err(ScenarioError::Invalid(format!(
                "initial screen `{}` is not defined",
                file.initial_screen
            )));
        }
        let mut edges = BTreeMap::new();
        for e in file.edges {
            let Some(screen) = file.screens.get(&e.screen) else {
                return Err(ScenarioError::Invalid(format!("edge from undefined screen `{}`", e.screen)));
            };
            if !file.screens.contains_key(&e.next) {
                return Err(ScenarioError::Invalid(format!("edge to undefined screen `{}`", e.next)));
            }
            if !screen.elements.contains(&e.element) {
                return Err(ScenarioError::Invalid(format!(
                    "edge element `{}` is not on screen `{}`",
                    e.element, e.screen
                )));
            }
            edges.insert((e.screen, e.element), e.next);
        }
        Ok(Self {
            app_id: file.app_id,
            screens: file.screens,
            edges,
            current_screen: file.initial_screen.clone(),
            initial_screen: file.initial_screen,
            action_log: Vec::new(),
        })
    }

    pub fn app_id(&self) -> &str {
        &self.app_id
    }

    pub fn current_screen(&self) -> &str {
        &self.current_screen
    }

    pub fn visible_text(&self) -> &str {
        &self.screens[&self.current_screen].visible_text
    }

    pub fn action_log(&self) -> &[GuiInteraction] {
        &self.action_log
    }

    /// Every element id on any screen.
    pub fn elements(&self) -> BTreeSet<String> {
        self.screens.values().flat_map(|s| s.elements.iter().cloned()).collect()
    }

    pub fn defines(&self, element: &str) -> bool {
        self.screens.values().any(|s| s.elements.contains(element))
    }

    /// Back to the initial screen with an empty log.
    pub fn reset(&mut self) {
        self.current_screen = self.initial_screen.clone();
        self.action_log.clear();
    }

    pub fn gui_click(&mut self, element: &str) -> Result<ExecutionResult, ScenarioError> {
        if !self.defines(element) {
            return Err(ScenarioError::UnknownElement(element.to_string()));
        }
        let screen = self.current_screen.clone();
        let visible = self.screens[&screen].elements.contains(element);
        let result = if !visible {
            ExecutionResult::failed("element not visible")
        } else if let Some(next) = self.edges.get(&(screen.clone(), element.to_string())) {
            self.current_screen = next.clone();
            ExecutionResult::ok(format!("clicked `{element}`, now on `{next}`"))
        } else {
            ExecutionResult::ok(format!("clicked `{element}`"))
        };
        self.action_log.push(GuiInteraction::Click {
            screen,
            element: element.to_string(),
            status: result.status,
        });
        Ok(result)
    }

    /// Case-sensitive substring search in the current screen's text.
    pub fn gui_check(&mut self, needle: &str) -> ExecutionResult {
        let found = self.visible_text().contains(needle);
        self.action_log.push(GuiInteraction::Check {
            screen: self.current_screen.clone(),
            needle: needle.to_string(),
            found,
        });
        if found {
            ExecutionResult::check(true, format!("found `{needle}`"))
        } else {
            ExecutionResult::check(false, format!("`{needle}` not on screen `{}`", self.current_screen))
        }
    }
}

/// Executes `gui_click` / `gui_check` against a set of scenarios keyed by app
/// id. Actions pick their app with the `app` param; it may be omitted when
/// only one scenario is loaded.
#[derive(Debug, Default)]
pub struct GuiExecutor {
    scenarios: Mutex<BTreeMap<String, VirtualGuiScenario>>,
}

impl GuiExecutor {
    pub fn new(scenarios: impl IntoIterator<Item = VirtualGuiScenario>) -> Self {
        Self {
            scenarios: Mutex::new(scenarios.into_iter().map(|s| (s.app_id.clone(), s)).collect()),
        }
    }

    pub fn scenario(&self, app_id: &str) -> Option<VirtualGuiScenario> {
        self.scenarios.lock().unwrap().get(app_id).cloned()
    }

    /// Current screen per app.
    pub fn screens(&self) -> BTreeMap<String, String> {
        self.scenarios
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| (k.clone(), v.current_screen.clone()))
            .collect()
    }
}

impl Executor for GuiExecutor {
    fn execute(&self, action: &ActionSpec, _ctx: &ActionContext<'_>) -> Result<ExecutionResult, ExecError> {
        let mut scenarios = self.scenarios.lock().unwrap();
        let scenario = match action.param_str("app") {
            Some(app) => scenarios
                .get_mut(app)
                .ok_or_else(|| ExecError::Failed(format!("no GUI scenario for app `{app}`")))?,
            None if scenarios.len() == 1 => scenarios.values_mut().next().expect("one scenario"),
            None => return Err(ExecError::Failed("action must name its `app`".into())),
        };
        match action.kind {
            ActionKind::GuiClick => scenario
                .gui_click(&action.target)
                .map_err(|e| ExecError::Failed(e.to_string())),
            ActionKind::GuiCheck => Ok(scenario.gui_check(&action.target)),
            other => Err(ExecError::Failed(format!("GUI executor cannot run `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::ExecStatus;

    const STUDIO: &str = r#"{
        "app_id": "studio",
        "initial_screen": "home",
        "screens": {
            "home": {"elements": ["open_preview", "help"], "visible_text": "3D Studio ready"},
            "preview": {"elements": ["record_button", "close"], "visible_text": "Preview running"},
            "recording": {"elements": ["stop_button"], "visible_text": "Recording"},
            "done": {"elements": ["close"], "visible_text": "Processing complete"}
        },
        "edges": [
            {"screen": "home", "element": "open_preview", "next": "preview"},
            {"screen": "preview", "element": "record_button", "next": "recording"},
            {"screen": "recording", "element": "stop_button", "next": "done"}
        ]
    }"#;

    #[test]
    fn click_advances_along_edges() {
        let mut s = VirtualGuiScenario::parse(STUDIO).unwrap();
        assert_eq!(s.gui_click("open_preview").unwrap().status, ExecStatus::Ok);
        assert_eq!(s.gui_click("record_button").unwrap().status, ExecStatus::Ok);
        assert_eq!(s.current_screen(), "recording");
    }

    #[test]
    fn click_on_wrong_screen_fails() {
        let mut s = VirtualGuiScenario::parse(STUDIO).unwrap();
        let r = s.gui_click("record_button").unwrap();
        assert_eq!(r.status, ExecStatus::Failed);
        assert_eq!(r.feedback, "element not visible");
        assert_eq!(s.current_screen(), "home");
        assert_eq!(s.action_log().len(), 1);
    }

    #[test]
    fn visible_element_without_edge_keeps_screen() {
        let mut s = VirtualGuiScenario::parse(STUDIO).unwrap();
        assert_eq!(s.gui_click("help").unwrap().status, ExecStatus::Ok);
        assert_eq!(s.current_screen(), "home");
    }

    #[test]
    fn unknown_element_is_an_authoring_error() {
        let mut s = VirtualGuiScenario::parse(STUDIO).unwrap();
        assert_eq!(s.gui_click("nope"), Err(ScenarioError::UnknownElement("nope".into())));
    }

    #[test]
    fn check_searches_current_screen_text() {
        let mut s = VirtualGuiScenario::parse(STUDIO).unwrap();
        for e in ["open_preview", "record_button", "stop_button"] {
            s.gui_click(e).unwrap();
        }
        assert_eq!(s.gui_check("complete").status, ExecStatus::CheckPassed);
        assert_eq!(s.gui_check("").status, ExecStatus::CheckPassed);
        assert_eq!(s.gui_check("Complete").status, ExecStatus::CheckFailed);
        assert_eq!(s.gui_check("error").status, ExecStatus::CheckFailed);
    }

    #[test]
    fn replay_is_deterministic() {
        let clicks = ["help", "open_preview", "close", "record_button", "stop_button", "close"];
        let run = || {
            let mut s = VirtualGuiScenario::parse(STUDIO).unwrap();
            for c in clicks {
                s.gui_click(c).unwrap();
            }
            s
        };
        let (a, b) = (run(), run());
        assert_eq!(a.current_screen(), b.current_screen());
        assert_eq!(a.action_log(), b.action_log());
        let mut c = a.clone();
        c.reset();
        assert_eq!(c.current_screen(), "home");
    }

    #[test]
    fn rejects_dangling_edges() {
        let bad = STUDIO.replace("\"next\": \"done\"", "\"next\": \"void\"");
        assert!(matches!(VirtualGuiScenario::parse(&bad), Err(ScenarioError::Invalid(_))));
    }
}
