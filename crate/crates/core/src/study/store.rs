use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::events::SessionEvent;
use crate::error::{Error, Result};

/// Append-only persistence for session events.
pub trait EventStore: Send + Sync {
    /// Durably appends one event. Returns only once the event is persisted.
    fn append(&self, session_id: &str, event: &SessionEvent) -> Result<()>;
    fn load(&self, session_id: &str) -> Result<Vec<SessionEvent>>;
    fn session_ids(&self) -> Result<Vec<String>>;
}

/// Session ids become file names, so they are restricted to a safe alphabet.
pub fn validate_session_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("invalid session id {id:?}")))
    }
}

/// One JSON event per line in `<dir>/<session>.jsonl`.
///
/// Each append is a single write followed by `fsync`. A crash can therefore
/// leave at most one torn line at the end of a file; loading drops it and
/// truncates the file so later appends start on a clean line. A malformed
/// line anywhere else is reported as corruption.
#[derive(Debug)]
pub struct JsonlStore {
    dir: PathBuf,
    // Serialises appends and repairs within this process.
    lock: Mutex<()>,
}

impl JsonlStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session_id: &str) -> Result<PathBuf> {
        validate_session_id(session_id)?;
        Ok(self.dir.join(format!("{session_id}.jsonl")))
    }
}

impl EventStore for JsonlStore {
    fn append(&self, session_id: &str, event: &SessionEvent) -> Result<()> {
        let path = self.path_for(session_id)?;
        let mut line = serde_json::to_string(event)?;
        line.push('\n');
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }

    fn load(&self, session_id: &str) -> Result<Vec<SessionEvent>> {
        let path = self.path_for(session_id)?;
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let text = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::UnknownSession(session_id.to_string()));
            }
            Err(e) => return Err(e.into()),
        };
        let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            log::warn!(
                "{}: dropping {} bytes of a torn final record",
                path.display(),
                text.len() - complete
            );
            let file = OpenOptions::new().write(true).open(&path)?;
            file.set_len(complete as u64)?;
            file.sync_data()?;
        }
        let body = std::str::from_utf8(&text[..complete]).map_err(|e| Error::CorruptLog {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        body.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::CorruptLog {
                    path: path.clone(),
                    reason: format!("line {}: {e}", i + 1),
                })
            })
            .collect()
    }

    fn session_ids(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    if validate_session_id(stem).is_ok() {
                        ids.push(stem.to_string());
                    }
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// Volatile store for tests and dry runs. Events are kept serialised so that
/// reloads go through the same round trip as on disk.
#[derive(Debug, Default)]
pub struct MemoryStore {
    logs: Mutex<HashMap<String, Vec<String>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EventStore for MemoryStore {
    fn append(&self, session_id: &str, event: &SessionEvent) -> Result<()> {
        validate_session_id(session_id)?;
        let line = serde_json::to_string(event)?;
        let mut logs = self.logs.lock().unwrap_or_else(|e| e.into_inner());
        logs.entry(session_id.to_string()).or_default().push(line);
        Ok(())
    }

    fn load(&self, session_id: &str) -> Result<Vec<SessionEvent>> {
        let logs = self.logs.lock().unwrap_or_else(|e| e.into_inner());
        let lines = logs
            .get(session_id)
            .ok_or_else(|| Error::UnknownSession(session_id.to_string()))?;
        lines.iter().map(|l| Ok(serde_json::from_str(l)?)).collect()
    }

    fn session_ids(&self) -> Result<Vec<String>> {
        let logs = self.logs.lock().unwrap_or_else(|e| e.into_inner());
        let mut ids: Vec<String> = logs.keys().cloned().collect();
        ids.sort();
        Ok(ids)
    }
}
