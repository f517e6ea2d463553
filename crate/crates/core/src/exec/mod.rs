//! Tool executors and the registry that dispatches actions to them by kind.
//!
//! Executors never see session state: they get a read-only [`ActionContext`]
//! and report an [`ExecutionResult`], which the engine turns into events.

mod device;
mod gui;
mod http;
mod script;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::workflow::{ActionKind, ActionSpec};

pub use device::{
    send_device_command, DeviceAck, DeviceCommand, DeviceError, DeviceExecutor, DeviceGateway, DeviceTransport,
    StubTransport, TcpTransport,
};
pub use gui::{GuiExecutor, GuiInteraction, ScenarioError, ScreenDef, VirtualGuiScenario};
pub use http::HttpExecutor;
pub use script::ScriptExecutor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    Failed,
    CheckPassed,
    CheckFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub feedback: String,
    pub duration_ms: u64,
}

impl ExecutionResult {
    pub fn ok(feedback: impl Into<String>) -> Self {
        Self::with(ExecStatus::Ok, feedback)
    }

    pub fn failed(feedback: impl Into<String>) -> Self {
        Self::with(ExecStatus::Failed, feedback)
    }

    pub fn check(passed: bool, feedback: impl Into<String>) -> Self {
        let status = if passed {
            ExecStatus::CheckPassed
        } else {
            ExecStatus::CheckFailed
        };
        Self::with(status, feedback)
    }

    fn with(status: ExecStatus, feedback: impl Into<String>) -> Self {
        Self {
            status,
            feedback: feedback.into(),
            duration_ms: 0,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.status == ExecStatus::Failed
    }
}

/// What an executor may know about the invocation. Borrowed, read-only.
#[derive(Clone, Copy)]
pub struct ActionContext<'a> {
    pub session_id: &'a str,
    pub workflow: &'a str,
    pub state: &'a str,
    pub timeout_ms: u64,
    pub clock: &'a dyn Clock,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("timed out after {0} ms")]
    Timeout(u64),
    #[error("{0}")]
    Failed(String),
}

pub trait Executor: Send + Sync {
    fn execute(&self, action: &ActionSpec, ctx: &ActionContext<'_>) -> Result<ExecutionResult, ExecError>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no executor bound for action kind `{0}`")]
pub struct UnboundKind(pub ActionKind);

/// Sleeps for `target` milliseconds on the context clock.
#[derive(Debug, Default)]
pub struct WaitExecutor;

impl Executor for WaitExecutor {
    fn execute(&self, action: &ActionSpec, ctx: &ActionContext<'_>) -> Result<ExecutionResult, ExecError> {
        let ms = action
            .wait_ms()
            .ok_or_else(|| ExecError::Failed(format!("invalid wait duration `{}`", action.target)))?;
        if ms > ctx.timeout_ms {
            ctx.clock.sleep_ms(ctx.timeout_ms);
            return Err(ExecError::Timeout(ctx.timeout_ms));
        }
        ctx.clock.sleep_ms(ms);
        Ok(ExecutionResult::ok(format!("waited {ms} ms")))
    }
}

#[derive(Debug, Default)]
pub struct NoopExecutor;

impl Executor for NoopExecutor {
    fn execute(&self, _: &ActionSpec, _: &ActionContext<'_>) -> Result<ExecutionResult, ExecError> {
        Ok(ExecutionResult::ok(""))
    }
}

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

/// Action kind to executor bindings, with a timeout per kind.
#[derive(Clone, Default)]
pub struct ExecutorRegistry {
    bindings: BTreeMap<ActionKind, Arc<dyn Executor>>,
    timeouts: BTreeMap<ActionKind, u64>,
}

impl ExecutorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with `wait` and `none` bound.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.bind(ActionKind::Wait, Arc::new(WaitExecutor));
        r.bind(ActionKind::Noop, Arc::new(NoopExecutor));
        r
    }

    pub fn bind(&mut self, kind: ActionKind, executor: Arc<dyn Executor>) -> &mut Self {
        self.bindings.insert(kind, executor);
        self
    }

    pub fn set_timeout(&mut self, kind: ActionKind, ms: u64) -> &mut Self {
        self.timeouts.insert(kind, ms);
        self
    }

    pub fn timeout(&self, kind: ActionKind) -> u64 {
        self.timeouts.get(&kind).copied().unwrap_or(DEFAULT_TIMEOUT_MS)
    }

    pub fn is_bound(&self, kind: ActionKind) -> bool {
        self.bindings.contains_key(&kind)
    }

    pub fn bound_kinds(&self) -> impl Iterator<Item = ActionKind> + '_ {
        self.bindings.keys().copied()
    }

    /// Dispatches `action` to its executor. Unbound kinds fail before any
    /// side effect; executor errors and overruns become failed results.
    pub fn execute(&self, action: &ActionSpec, ctx: &ActionContext<'_>) -> Result<ExecutionResult, UnboundKind> {
        let executor = self.bindings.get(&action.kind).ok_or(UnboundKind(action.kind))?;
        let timeout_ms = self.timeout(action.kind);
        let ctx = ActionContext { timeout_ms, ..*ctx };
        let started = ctx.clock.now_ms();
        let mut result = match executor.execute(action, &ctx) {
            Ok(r) => r,
            Err(e) => ExecutionResult::failed(e.to_string()),
        };
        result.duration_ms = ctx.clock.now_ms().saturating_sub(started);
        if result.duration_ms > timeout_ms && !result.is_failure() {
            result = ExecutionResult {
                status: ExecStatus::Failed,
                feedback: ExecError::Timeout(timeout_ms).to_string(),
                duration_ms: result.duration_ms,
            };
        }
        if !action.kind.is_check() && matches!(result.status, ExecStatus::CheckPassed | ExecStatus::CheckFailed) {
            result.status = ExecStatus::Ok;
        }
        Ok(result)
    }
}

impl std::fmt::Debug for ExecutorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExecutorRegistry")
            .field("kinds", &self.bindings.keys().collect::<Vec<_>>())
            .field("timeouts", &self.timeouts)
            .finish()
    }
}
