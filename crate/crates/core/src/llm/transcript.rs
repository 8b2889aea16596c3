use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatRequest, Role};

/// One persisted request/response exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub key: String,
    /// Case the exchange belongs to.
    pub scope: String,
    pub role: Role,
    pub endpoint: String,
    pub request: ChatRequest,
    pub response: String,
}

struct Inner {
    file: Option<File>,
    responses: HashMap<String, String>,
}

/// Append-only NDJSON log of exchanges, doubling as the response cache.
///
/// Every entry is flushed and synced before `append` returns. On open, a
/// torn final line left by a crash is cut off.
pub struct TranscriptStore {
    inner: Mutex<Inner>,
}

impl TranscriptStore {
    pub fn in_memory() -> Self {
        Self { inner: Mutex::new(Inner { file: None, responses: HashMap::new() }) }
    }

    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut responses = HashMap::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&mut file);
        let mut line = String::new();
        let mut lineno = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 || !line.ends_with('\n') {
                break;
            }
            lineno += 1;
            match serde_json::from_str::<TranscriptEntry>(&line) {
                Ok(e) => {
                    responses.insert(e.key, e.response);
                }
                Err(err) => log::warn!("{}:{lineno}: skipping unreadable transcript entry: {err}", path.display()),
            }
            good_len += n as u64;
        }
        drop(reader);
        if file.seek(SeekFrom::End(0))? != good_len {
            log::warn!("{}: dropping incomplete trailing entry", path.display());
            file.set_len(good_len)?;
        }
        Ok(Self { inner: Mutex::new(Inner { file: Some(file), responses }) })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.inner.lock().unwrap().responses.get(key).cloned()
    }

    pub fn append(&self, entry: &TranscriptEntry) -> io::Result<()> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(f) = inner.file.as_mut() {
            let mut line = serde_json::to_vec(entry)?;
            line.push(b'\n');
            f.write_all(&line)?;
            f.flush()?;
            f.sync_data()?;
        }
        inner.responses.insert(entry.key.clone(), entry.response.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
