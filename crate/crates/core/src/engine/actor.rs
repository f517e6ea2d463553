use std::sync::mpsc;
use std::thread;

use super::Session;

type Job = Box<dyn FnOnce(&mut Session) + Send>;

/// Owns a [`Session`] on its own thread and runs submitted closures one at a
/// time, in arrival order. Clones share the same queue.
#[derive(Debug, Clone)]
pub struct SessionHandle {
    id: String,
    tx: mpsc::Sender<Job>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("session worker has stopped")]
pub struct SessionClosed;

impl SessionHandle {
    pub fn spawn(mut session: Session) -> Self {
        let id = session.id().to_string();
        let (tx, rx) = mpsc::channel::<Job>();
        thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || {
                for job in rx {
                    job(&mut session);
                }
            })
            .expect("spawn session worker");
        Self { id, tx }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Runs `f` on the session and waits for its result.
    pub fn call<R: Send + 'static>(
        &self,
        f: impl FnOnce(&mut Session) -> R + Send + 'static,
    ) -> Result<R, SessionClosed> {
        let (reply_tx, reply_rx) = mpsc::sync_channel(1);
        self.tx
            .send(Box::new(move |s: &mut Session| {
                let _ = reply_tx.send(f(s));
            }))
            .map_err(|_| SessionClosed)?;
        reply_rx.recv().map_err(|_| SessionClosed)
    }
}
