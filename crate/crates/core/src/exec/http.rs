use std::time::Duration;

use super::{ActionContext, ExecError, ExecutionResult, Executor};
use crate::workflow::ActionSpec;

const FEEDBACK_LIMIT: usize = 512;

/// Calls `target` as a URL. `method` param defaults to GET (POST when a
/// `body` param is present); `body` is sent as JSON. 2xx is success.
#[derive(Debug, Default)]
pub struct HttpExecutor;

impl HttpExecutor {
    pub fn new() -> Self {
        Self
    }
}

fn truncate(mut s: String) -> String {
    if s.len() > FEEDBACK_LIMIT {
        let mut cut = FEEDBACK_LIMIT;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push('…');
    }
    s
}

impl Executor for HttpExecutor {
    fn execute(&self, action: &ActionSpec, ctx: &ActionContext<'_>) -> Result<ExecutionResult, ExecError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(ctx.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let body = action.params.get("body");
        let method = action
            .param_str("method")
            .map(str::to_ascii_uppercase)
            .unwrap_or_else(|| if body.is_some() { "POST".into() } else { "GET".into() });
        let url = action.target.as_str();
        let sent = match (method.as_str(), body) {
            ("GET", _) => agent.get(url).call(),
            ("DELETE", _) => agent.delete(url).call(),
            ("POST", Some(b)) => agent.post(url).send_json(b),
            ("POST", None) => agent.post(url).send_empty(),
            ("PUT", Some(b)) => agent.put(url).send_json(b),
            ("PUT", None) => agent.put(url).send_empty(),
            (other, _) => return Err(ExecError::Failed(format!("unsupported HTTP method `{other}`"))),
        };
        let resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(ExecError::Timeout(ctx.timeout_ms)),
            Err(e) => return Err(ExecError::Failed(format!("{method} {url}: {e}"))),
        };
        let status = resp.status().as_u16();
        let text = resp.into_body().read_to_string().unwrap_or_default();
        let feedback = truncate(format!("{status} {}", text.trim()));
        Ok(if (200..300).contains(&status) {
            ExecutionResult::ok(feedback)
        } else {
            ExecutionResult::failed(feedback)
        })
    }
}
