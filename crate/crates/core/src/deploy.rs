//! Everything a process needs to run sessions, assembled from a [`Config`].

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use crate::clock::Clock;
use crate::commands::GlobalCommandSet;
use crate::config::{Config, ConfigError, DeviceConfig, EmbeddingConfig};
use crate::demo;
use crate::engine::{EngineLimits, SessionEnv};
use crate::exec::{
    DeviceExecutor, DeviceGateway, ExecutorRegistry, GuiExecutor, HttpExecutor, ScenarioError, ScriptExecutor,
    StubTransport, TcpTransport, VirtualGuiScenario,
};
use crate::helper::HelperManifest;
use crate::intent::{EmbeddingProvider, HashEmbedding, HttpEmbedding, IntentMatcher, TableEmbedding, TableLoadError};
use crate::workflow::{ActionKind, CatalogDiagnostic, LoadOptions, WorkflowCatalog};

#[derive(Debug, thiserror::Error)]
pub enum DeployError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Scenario { path: String, source: ScenarioError },
    #[error("embedding table: {0}")]
    Embedding(#[from] TableLoadError),
}

fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> DeployError + '_ {
    move |source| DeployError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub struct Deployment {
    pub config: Config,
    pub catalog: Arc<WorkflowCatalog>,
    /// Load findings for workflow files; invalid files are excluded from the catalog.
    pub diagnostics: Vec<CatalogDiagnostic>,
    pub helper: Arc<HelperManifest>,
    /// Pristine copies; each session gets its own.
    pub scenarios: Vec<VirtualGuiScenario>,
    pub device: Arc<DeviceGateway>,
    pub matcher: IntentMatcher,
    pub globals: GlobalCommandSet,
}

impl std::fmt::Debug for Deployment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Deployment")
            .field("workflows", &self.catalog.ids().collect::<Vec<_>>())
            .field("diagnostics", &self.diagnostics.len())
            .field("matcher", &self.matcher)
            .finish()
    }
}

impl Deployment {
    pub fn from_config(config: Config) -> Result<Self, DeployError> {
        let helper = match &config.helper_dir {
            Some(dir) => HelperManifest::load(dir).map_err(io(dir))?,
            None => demo::helper(),
        };
        let scenarios = match &config.scenario_files {
            Some(files) => files.iter().map(load_scenario).collect::<Result<Vec<_>, _>>()?,
            None => demo::scenarios(),
        };
        let gui_elements: BTreeSet<String> = scenarios.iter().flat_map(|s| s.elements()).collect();
        let opts = LoadOptions {
            lenient: config.lenient,
            known_workflows: None,
            gui_elements: Some(gui_elements),
            helper_docs: Some(helper.keys()),
            globals: None,
        };
        let (catalog, diagnostics) = match &config.workflow_dir {
            Some(dir) => WorkflowCatalog::load_dir(dir, &opts).map_err(io(dir))?,
            None => demo::catalog(&opts),
        };
        let provider: Arc<dyn EmbeddingProvider> = match &config.embedding {
            EmbeddingConfig::Hash => Arc::new(HashEmbedding),
            EmbeddingConfig::Table { path } => Arc::new(TableEmbedding::load(path)?),
            EmbeddingConfig::Http { url, timeout_ms } => {
                Arc::new(HttpEmbedding::new(url.clone(), Duration::from_millis(*timeout_ms)))
            }
        };
        let device = match &config.device {
            DeviceConfig::Stub => DeviceGateway::new(Arc::new(StubTransport::new())),
            DeviceConfig::Tcp { addr } => DeviceGateway::new(Arc::new(TcpTransport::new(addr.clone()))),
        };
        Ok(Self {
            matcher: IntentMatcher::new(config.matcher_config()?, provider),
            catalog: Arc::new(catalog),
            diagnostics,
            helper: Arc::new(helper),
            scenarios,
            device: Arc::new(device),
            globals: GlobalCommandSet::standard(),
            config,
        })
    }

    /// The bundled demo with default settings.
    pub fn demo() -> Self {
        Self::from_config(Config::default()).expect("bundled demo deploys")
    }

    /// A registry with every kind bound. GUI scenarios start fresh.
    pub fn registry(&self) -> ExecutorRegistry {
        let mut r = ExecutorRegistry::with_builtins();
        let gui = Arc::new(GuiExecutor::new(self.scenarios.iter().cloned()));
        r.bind(ActionKind::GuiClick, gui.clone());
        r.bind(ActionKind::GuiCheck, gui);
        r.bind(ActionKind::Device, Arc::new(DeviceExecutor::new(self.device.clone())));
        r.bind(ActionKind::Script, Arc::new(ScriptExecutor::new()));
        r.bind(ActionKind::Http, Arc::new(HttpExecutor::new()));
        for (kind, ms) in self.config.action_timeouts() {
            r.set_timeout(kind, ms);
        }
        r
    }

    pub fn env(&self, clock: Arc<dyn Clock>) -> SessionEnv {
        SessionEnv {
            catalog: self.catalog.clone(),
            registry: self.registry(),
            globals: self.globals.clone(),
            clock,
            limits: EngineLimits {
                max_call_depth: self.config.max_call_depth,
                max_autopilot_steps: self.config.max_autopilot_steps,
            },
            cursor_speed_ms: self.config.cursor_speed_ms,
        }
    }

    pub fn log_dir(&self) -> &PathBuf {
        &self.config.log_dir
    }
}

fn load_scenario(path: &PathBuf) -> Result<VirtualGuiScenario, DeployError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    VirtualGuiScenario::parse(&text).map_err(|source| DeployError::Scenario {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;
    use crate::engine::{FireOrigin, Session};

    #[test]
    fn demo_sessions_get_independent_gui_state() {
        let d = Deployment::demo();
        assert_eq!(d.catalog.len(), 6);
        let clock = Arc::new(ManualClock::new(0));
        let mut a = Session::start(d.env(clock.clone()), "a", "preview", vec![]).unwrap();
        a.fire("LaunchStudio", FireOrigin::Direct).unwrap();
        // A second session still sees the studio's home screen.
        let mut b = Session::start(d.env(clock), "b", "preview", vec![]).unwrap();
        b.fire("LaunchStudio", FireOrigin::Direct).unwrap();
        assert_eq!(b.state().top().unwrap().state, "StudioOpen");
    }

    #[test]
    fn directory_config() {
        let dir = tempfile::tempdir().unwrap();
        let flows = dir.path().join("flows");
        std::fs::create_dir(&flows).unwrap();
        for (name, src) in demo::WORKFLOWS {
            if *name == "components.json" {
                std::fs::write(flows.join(name), src).unwrap();
            }
        }
        std::fs::write(flows.join("broken.json"), "{").unwrap();
        let config = Config {
            workflow_dir: Some(flows),
            ..Config::default()
        };
        let d = Deployment::from_config(config).unwrap();
        assert_eq!(d.catalog.ids().collect::<Vec<_>>(), ["components"]);
        assert_eq!(d.diagnostics.len(), 1);
        assert!(d.diagnostics[0].source.ends_with("broken.json"));
    }
}
