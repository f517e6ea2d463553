//! Voice-guided workflow engine: workflow definitions, the session state
//! machine, intent matching, and tool executors.

pub mod clock;
pub mod commands;
pub mod config;
pub mod demo;
pub mod deploy;
pub mod engine;
pub mod exec;
pub mod helper;
pub mod intent;
pub mod report;
pub mod transcript;
pub mod workflow;

pub use clock::{Clock, ManualClock, SystemClock};
pub use config::Config;
pub use commands::{GlobalBehavior, GlobalCommand, GlobalCommandSet};
pub use engine::{EngineError, FireOrigin, Session, SessionEnv, SessionEvent, SessionState};
pub use deploy::Deployment;
pub use intent::{IntentDecision, IntentMatcher, MatcherConfig, Thresholds};
pub use workflow::{WorkflowCatalog, WorkflowDefinition};
