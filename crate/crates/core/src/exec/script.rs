use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{ActionContext, ExecError, ExecutionResult, Executor};
use crate::workflow::ActionSpec;

/// Runs `target` as a program with the string array in the `args` param.
/// Exit status zero is success; trimmed stdout (or stderr on failure) is the
/// feedback.
#[derive(Debug, Default)]
pub struct ScriptExecutor {
    working_dir: Option<std::path::PathBuf>,
}

impl ScriptExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn in_dir(dir: impl Into<std::path::PathBuf>) -> Self {
        Self {
            working_dir: Some(dir.into()),
        }
    }
}

impl Executor for ScriptExecutor {
    fn execute(&self, action: &ActionSpec, ctx: &ActionContext<'_>) -> Result<ExecutionResult, ExecError> {
        let args: Vec<String> = match action.params.get("args") {
            None => Vec::new(),
            Some(v) => v
                .as_array()
                .and_then(|a| a.iter().map(|x| x.as_str().map(String::from)).collect())
                .ok_or_else(|| ExecError::Failed("`args` must be an array of strings".into()))?,
        };
        let mut cmd = Command::new(&action.target);
        cmd.args(&args)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .env("STATEBUDDY_SESSION", ctx.session_id)
            .env("STATEBUDDY_WORKFLOW", ctx.workflow)
            .env("STATEBUDDY_STATE", ctx.state);
        if let Some(dir) = &self.working_dir {
            cmd.current_dir(dir);
        }
        let mut child = cmd
            .spawn()
            .map_err(|e| ExecError::Failed(format!("cannot start `{}`: {e}", action.target)))?;

        let deadline = Instant::now() + Duration::from_millis(ctx.timeout_ms);
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ExecError::Timeout(ctx.timeout_ms));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(ExecError::Failed(e.to_string())),
            }
        }
        let out = child.wait_with_output().map_err(|e| ExecError::Failed(e.to_string()))?;
        let stdout = String::from_utf8_lossy(&out.stdout).trim().to_string();
        if out.status.success() {
            Ok(ExecutionResult::ok(stdout))
        } else {
            let stderr = String::from_utf8_lossy(&out.stderr).trim().to_string();
            Ok(ExecutionResult::failed(format!(
                "`{}` exited with {}: {}",
                action.target,
                out.status,
                if stderr.is_empty() { stdout } else { stderr }
            )))
        }
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::clock::ManualClock;
    use crate::exec::{tests::ctx, ExecStatus};
    use crate::workflow::ActionKind;

    #[test]
    fn runs_program_with_args() {
        let clock = ManualClock::new(0);
        let a = ActionSpec::new(ActionKind::Script, "echo").with_param("args", serde_json::json!(["fused", "mesh"]));
        let r = ScriptExecutor::new().execute(&a, &ctx(&clock)).unwrap();
        assert_eq!(r.status, ExecStatus::Ok);
        assert_eq!(r.feedback, "fused mesh");
    }

    #[test]
    fn nonzero_exit_fails() {
        let clock = ManualClock::new(0);
        let a = ActionSpec::new(ActionKind::Script, "false");
        let r = ScriptExecutor::new().execute(&a, &ctx(&clock)).unwrap();
        assert_eq!(r.status, ExecStatus::Failed);
    }

    #[test]
    fn missing_program_and_timeout() {
        let clock = ManualClock::new(0);
        let a = ActionSpec::new(ActionKind::Script, "/definitely/not/here");
        assert!(ScriptExecutor::new().execute(&a, &ctx(&clock)).is_err());
        let a = ActionSpec::new(ActionKind::Script, "sleep").with_param("args", serde_json::json!(["5"]));
        let mut c = ctx(&clock);
        c.timeout_ms = 50;
        assert_eq!(ScriptExecutor::new().execute(&a, &c), Err(ExecError::Timeout(50)));
    }
}
