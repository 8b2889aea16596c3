//! Commit-history mining.
//!
//! [`stream_commits`] walks a repository oldest-first and yields one
//! [`CommitRecord`] per commit with per-file line deltas. Merge commits are
//! diffed against their first parent only.

mod author;
mod eloc;
mod git;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use author::normalize_author;
pub use eloc::{count_effective_loc, count_lines, Language};
pub use git::{commit_context, stream_commits, CommitStream, MinerOptions};

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("not a readable git repository: {0}")]
    RepoNotFound(PathBuf),
    #[error("corrupt history at {hash}: {detail}")]
    CorruptHistory { hash: String, detail: String },
    #[error("author identity has neither name nor email")]
    EmptyIdentity,
    #[error("failed to run git: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
    Renamed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_path: Option<String>,
    pub lines_added: u64,
    pub lines_deleted: u64,
    /// Line count of the file in the parent revision.
    pub lines_before: u64,
    pub change_kind: ChangeKind,
    /// No textual diff was available (git reports `-`/`-`).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub binary: bool,
}

impl FileChange {
    pub fn churn(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }

    /// Line count after the change, derived from the delta.
    pub fn lines_after(&self) -> u64 {
        (self.lines_before + self.lines_added).saturating_sub(self.lines_deleted)
    }

    /// Path the file had before this commit, if it existed.
    pub fn prior_path(&self) -> Option<&str> {
        match self.change_kind {
            ChangeKind::Added => None,
            ChangeKind::Renamed => self.old_path.as_deref(),
            ChangeKind::Modified | ChangeKind::Deleted => Some(&self.path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    pub author_id: String,
    /// Author timestamp, seconds since the epoch (UTC).
    pub timestamp: i64,
    pub message: String,
    pub parent_ids: Vec<String>,
    pub changes: Vec<FileChange>,
}

impl CommitRecord {
    pub fn is_merge(&self) -> bool {
        self.parent_ids.len() > 1
    }
}
