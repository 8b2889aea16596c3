//! Pipeline stages. Each reads the artifacts of earlier stages from
//! `<output_dir>/<stage>/` and writes only its own directory.

pub mod analyze;
pub mod classify;
pub mod mine;
pub mod sample;

use std::io;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Artifact files of every stage, by stage directory.
pub const ARTIFACTS: [(&str, &[&str]); 4] = [
    (mine::DIR, &mine::FILES),
    (sample::DIR, &sample::FILES),
    (classify::DIR, &classify::FILES),
    (analyze::DIR, &analyze::FILES),
];

pub(crate) fn require(path: PathBuf) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingStageInput(path))
    }
}

/// Replaces `path` through a temporary sibling so readers never see a
/// half-written file.
pub(crate) fn write_output(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::from)?;
    bytes.push(b'\n');
    write_output(path, &bytes)
}

pub(crate) fn ndjson<T: serde::Serialize>(items: &[T]) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it).map_err(io::Error::from)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub(crate) fn read_ndjson<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1)))
        .collect()
}

pub(crate) fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
