//! Event sinks and on-disk logs (`<session_id>.events.jsonl`, one event per line).

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::event::SessionEvent;

pub const LOG_SUFFIX: &str = ".events.jsonl";

pub fn log_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}{LOG_SUFFIX}"))
}

/// Receives every event after it has been applied.
pub trait EventSink: Send {
    fn append(&mut self, event: &SessionEvent, line: &str) -> std::io::Result<()>;
}

/// Appends lines to a file, flushing each one.
#[derive(Debug)]
pub struct JsonlSink {
    file: File,
}

impl JsonlSink {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file })
    }
}

impl EventSink for JsonlSink {
    fn append(&mut self, _: &SessionEvent, line: &str) -> std::io::Result<()> {
        self.file.write_all(line.as_bytes())?;
        self.file.write_all(b"\n")?;
        self.file.flush()
    }
}

/// Collects lines in memory; clones share the buffer.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    lines: Arc<Mutex<Vec<String>>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lines(&self) -> Vec<String> {
        self.lines.lock().unwrap().clone()
    }

    pub fn text(&self) -> String {
        self.lines().iter().map(|l| format!("{l}\n")).collect()
    }
}

impl EventSink for MemorySink {
    fn append(&mut self, _: &SessionEvent, line: &str) -> std::io::Result<()> {
        self.lines.lock().unwrap().push(line.to_string());
        Ok(())
    }
}

/// Forwards events to a callback, e.g. a broadcast channel.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&SessionEvent) + Send> EventSink for FnSink<F> {
    fn append(&mut self, event: &SessionEvent, _: &str) -> std::io::Result<()> {
        (self.0)(event);
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

/// Reads a log file. A final line without its newline is a torn write and is
/// dropped; malformed lines elsewhere are errors.
pub fn read_log(path: &Path) -> Result<Vec<SessionEvent>, LogError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|source| LogError::Io { path: p.clone(), source })?;
    let mut out = Vec::new();
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut n = 0;
    loop {
        line.clear();
        let read = reader
            .read_line(&mut line)
            .map_err(|source| LogError::Io { path: p.clone(), source })?;
        if read == 0 {
            break;
        }
        n += 1;
        let complete = line.ends_with('\n');
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match SessionEvent::from_line(text) {
            Ok(e) => out.push(e),
            Err(_) if !complete => break,
            Err(e) => {
                return Err(LogError::Parse {
                    path: p,
                    line: n,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// All `*.events.jsonl` files in `dir`, sorted by name.
pub fn list_logs(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for e in std::fs::read_dir(dir)? {
        let path = e?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(LOG_SUFFIX)) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
