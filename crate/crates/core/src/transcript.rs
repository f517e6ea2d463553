//! Replay of utterance transcripts: one utterance per line, `#` comments,
//! and `#expect: StateA, workflow:StateB` headers naming acceptable final states.

use serde::{Deserialize, Serialize};

use crate::engine::{EngineError, Session};
use crate::intent::IntentMatcher;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub expect: Vec<String>,
    /// `(line number, utterance)`.
    pub lines: Vec<(usize, String)>,
}

impl Transcript {
    pub fn parse(text: &str) -> Self {
        let mut t = Transcript::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("#expect:") {
                t.expect.extend(
                    rest.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from),
                );
            } else if !line.is_empty() && !line.starts_with('#') {
                t.lines.push((i + 1, line.to_string()));
            }
        }
        t
    }

    /// No header means no constraint.
    pub fn accepts(&self, workflow: &str, state: &str) -> bool {
        self.expect.is_empty()
            || self.expect.iter().any(|e| match e.split_once(':') {
                Some((w, s)) => w == workflow && s == state,
                None => e == state,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineOutcome {
    pub line: usize,
    pub utterance: String,
    pub matched: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub workflow: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub workflow: String,
    pub state: String,
    pub depth: usize,
    pub rejected: usize,
    pub errors: usize,
    pub accepted: bool,
    pub lines: Vec<LineOutcome>,
}

/// Feeds every line to the session (errors and rejections do not stop the
/// run), then ends it.
pub fn replay(session: &mut Session, transcript: &Transcript, matcher: &IntentMatcher) -> Result<ReplayReport, EngineError> {
    let mut lines = Vec::new();
    let (mut rejected, mut errors) = (0, 0);
    for (n, text) in &transcript.lines {
        let (matched, error) = match session.submit_utterance(text, matcher) {
            Ok(out) => {
                let matched = out.decision.matched_trigger().map(String::from);
                if matched.is_none() {
                    rejected += 1;
                }
                let error = out.dispatch.and_then(|d| d.err()).map(|e| e.to_string());
                (matched, error)
            }
            Err(EngineError::SessionEnded) => return Err(EngineError::SessionEnded),
            Err(e) => (None, Some(e.to_string())),
        };
        if error.is_some() {
            errors += 1;
        }
        let f = session.state().top().cloned().expect("live session has a frame");
        lines.push(LineOutcome {
            line: *n,
            utterance: text.clone(),
            matched,
            error,
            workflow: f.workflow,
            state: f.state,
        });
    }
    let f = session.state().top().cloned().expect("live session has a frame");
    let depth = session.state().depth();
    session.end("transcript complete")?;
    Ok(ReplayReport {
        accepted: transcript.accepts(&f.workflow, &f.state),
        workflow: f.workflow,
        state: f.state,
        depth,
        rejected,
        errors,
        lines,
    })
}
