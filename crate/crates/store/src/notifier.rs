use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::PathBuf;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub to: String,
    pub subject: String,
    pub share_url: String,
}

/// Outgoing message channel for share links.
pub trait Notifier: Send + Sync {
    fn send(&self, message: &Notification) -> io::Result<()>;
}

/// Appends one JSON object per line to an outbox file.
#[derive(Debug)]
pub struct OutboxNotifier {
    path: PathBuf,
    lock: Mutex<()>,
}

impl OutboxNotifier {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        OutboxNotifier { path: path.into(), lock: Mutex::new(()) }
    }

    pub fn read_all(&self) -> io::Result<Vec<Notification>> {
        let text = match std::fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(io::Error::other))
            .collect()
    }
}

impl Notifier for OutboxNotifier {
    fn send(&self, message: &Notification) -> io::Result<()> {
        let _guard = self.lock.lock();
        let mut line = serde_json::to_vec(message).map_err(io::Error::other)?;
        line.push(b'\n');
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        file.write_all(&line)?;
        file.sync_data()
    }
}

#[derive(Debug, Default)]
pub struct MemoryNotifier(Mutex<Vec<Notification>>);

impl MemoryNotifier {
    pub fn sent(&self) -> Vec<Notification> {
        self.0.lock().clone()
    }
}

impl Notifier for MemoryNotifier {
    fn send(&self, message: &Notification) -> io::Result<()> {
        self.0.lock().push(message.clone());
        Ok(())
    }
}
