//! Commit stream backed by the `git` command-line plumbing.
//!
//! Metadata comes from one `git log` call; diffs from a single long-running
//! `git diff-tree --stdin` process and parent-revision blob sizes from
//! `git cat-file --batch`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::thread::JoinHandle;

use super::{count_lines, normalize_author, ChangeKind, CommitRecord, FileChange, HistoryError};

const SUBMODULE_MODE: &str = "160000";

#[derive(Debug, Clone)]
pub struct MinerOptions {
    /// Minimum content similarity (percent) for rename detection.
    pub rename_threshold: u8,
    pub git: PathBuf,
}

impl Default for MinerOptions {
    fn default() -> Self {
        Self { rename_threshold: 50, git: PathBuf::from("git") }
    }
}

struct CommitMeta {
    id: String,
    parents: Vec<String>,
    author_id: String,
    timestamp: i64,
    message: String,
}

/// Streams every commit reachable from `HEAD`, oldest first, in
/// topological-then-date order.
///
/// Repositories without any commit yield an empty stream.
pub fn stream_commits(repo: &Path, opts: &MinerOptions) -> Result<CommitStream, HistoryError> {
    let git = |args: &[&str]| {
        let mut cmd = Command::new(&opts.git);
        cmd.arg("-C").arg(repo).args(args);
        cmd
    };

    let probe = git(&["rev-parse", "--git-dir"]).stderr(Stdio::null()).output();
    match probe {
        Ok(out) if out.status.success() => {}
        _ => return Err(HistoryError::RepoNotFound(repo.to_path_buf())),
    }
    let head = git(&["rev-parse", "--verify", "-q", "HEAD"]).stderr(Stdio::null()).output()?;
    if !head.status.success() {
        return Ok(CommitStream::empty());
    }

    let log = git(&[
        "log",
        "--reverse",
        "--date-order",
        "-z",
        "--no-color",
        "--format=%H%x00%P%x00%an%x00%ae%x00%at%x00%B",
        "HEAD",
    ])
    .output()?;
    if !log.status.success() {
        return Err(corrupt_from_stderr(&log.stderr));
    }
    let metas = parse_log(&log.stdout)?;

    let mut diff_tree = git(&[
        "diff-tree",
        "--stdin",
        "-r",
        "-z",
        "--raw",
        "--numstat",
        "--no-abbrev",
        "--root",
        "--no-color",
        "--diff-merges=first-parent",
        &format!("-M{}%", opts.rename_threshold),
    ])
    .stdin(Stdio::piped())
    .stdout(Stdio::piped())
    .stderr(Stdio::piped())
    .spawn()?;
    let mut stdin = diff_tree.stdin.take().expect("piped stdin");
    let ids: Vec<String> = metas.iter().map(|m| m.id.clone()).collect();
    let feeder = std::thread::spawn(move || -> std::io::Result<()> {
        for id in ids {
            writeln!(stdin, "{id}")?;
        }
        Ok(())
    });
    let stdout = diff_tree.stdout.take().expect("piped stdout");

    let blobs = BlobReader::spawn(&opts.git, repo)?;

    Ok(CommitStream {
        metas: metas.into_iter(),
        tokens: Some(TokenReader { inner: BufReader::new(stdout), peeked: None }),
        diff_tree: Some(diff_tree),
        feeder: Some(feeder),
        blobs: Some(blobs),
        failed: false,
    })
}

/// Message and unified diff of one commit, the diff limited to `paths`
/// (all files when empty). Merge commits are diffed against their first
/// parent.
pub fn commit_context(
    repo: &Path,
    commit: &str,
    paths: &[&str],
    opts: &MinerOptions,
) -> Result<(String, String), HistoryError> {
    let run = |args: &[&str]| -> Result<String, HistoryError> {
        let out = Command::new(&opts.git).arg("-C").arg(repo).args(args).stderr(Stdio::piped()).output()?;
        if !out.status.success() {
            return Err(corrupt_from_stderr(&out.stderr));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    };
    let message = run(&["log", "-1", "--no-color", "--format=%B", commit, "--"])?;
    let rename = format!("-M{}%", opts.rename_threshold);
    let mut args = vec![
        "show",
        "--no-color",
        "--no-ext-diff",
        "--format=",
        "--diff-merges=first-parent",
        &rename,
        commit,
        "--",
    ];
    args.extend_from_slice(paths);
    let diff = run(&args)?;
    Ok((message.trim_end_matches('\n').to_string(), diff))
}

fn parse_log(raw: &[u8]) -> Result<Vec<CommitMeta>, HistoryError> {
    let text = String::from_utf8_lossy(raw);
    let mut fields = text.split('\0');
    let mut out = Vec::new();
    while let Some(id) = fields.next() {
        let id = id.trim_start_matches('\n');
        if id.is_empty() {
            break;
        }
        let mut next = || {
            fields.next().ok_or_else(|| HistoryError::CorruptHistory {
                hash: id.to_string(),
                detail: "truncated log record".into(),
            })
        };
        let parents = next()?;
        let name = next()?;
        let email = next()?;
        let stamp = next()?;
        let body = next()?;
        let timestamp: i64 = stamp.trim().parse().map_err(|_| HistoryError::CorruptHistory {
            hash: id.to_string(),
            detail: format!("bad author timestamp {stamp:?}"),
        })?;
        if timestamp < 0 {
            return Err(HistoryError::CorruptHistory {
                hash: id.to_string(),
                detail: "negative author timestamp".into(),
            });
        }
        let author_id = normalize_author(name, email).map_err(|e| HistoryError::CorruptHistory {
            hash: id.to_string(),
            detail: e.to_string(),
        })?;
        out.push(CommitMeta {
            id: id.to_string(),
            parents: parents.split_whitespace().map(str::to_string).collect(),
            author_id,
            timestamp,
            message: body.trim_end_matches('\n').to_string(),
        });
    }
    Ok(out)
}

fn corrupt_from_stderr(stderr: &[u8]) -> HistoryError {
    let text = String::from_utf8_lossy(stderr).trim().to_string();
    let hash = text
        .split(|c: char| !c.is_ascii_hexdigit())
        .find(|w| w.len() == 40 || w.len() == 64)
        .unwrap_or("unknown")
        .to_string();
    HistoryError::CorruptHistory { hash, detail: text }
}

/// Ordered, single-pass stream of commits. Dropping it early terminates the
/// underlying git processes.
pub struct CommitStream {
    metas: std::vec::IntoIter<CommitMeta>,
    tokens: Option<TokenReader>,
    diff_tree: Option<Child>,
    feeder: Option<JoinHandle<std::io::Result<()>>>,
    blobs: Option<BlobReader>,
    failed: bool,
}

impl CommitStream {
    fn empty() -> Self {
        Self {
            metas: Vec::new().into_iter(),
            tokens: None,
            diff_tree: None,
            feeder: None,
            blobs: None,
            failed: false,
        }
    }

    fn next_record(&mut self, meta: CommitMeta) -> Result<CommitRecord, HistoryError> {
        let tokens = self.tokens.as_mut().expect("non-empty stream has a reader");
        let entries = match tokens.peek()? {
            Some(tok) if tok == meta.id => {
                tokens.next()?;
                read_entries(tokens, &meta.id)?
            }
            _ => Vec::new(),
        };
        let blobs = self.blobs.as_mut().expect("non-empty stream has a blob reader");
        let mut changes = Vec::with_capacity(entries.len());
        for e in entries {
            let lines_before = match e.kind {
                ChangeKind::Added => 0,
                _ => blobs.line_count(&e.old_blob).map_err(|detail| {
                    HistoryError::CorruptHistory { hash: meta.id.clone(), detail }
                })?,
            };
            changes.push(FileChange {
                path: e.path,
                old_path: e.old_path,
                lines_added: e.added,
                lines_deleted: e.deleted,
                lines_before,
                change_kind: e.kind,
                binary: e.binary,
            });
        }
        Ok(CommitRecord {
            id: meta.id,
            author_id: meta.author_id,
            timestamp: meta.timestamp,
            message: meta.message,
            parent_ids: meta.parents,
            changes,
        })
    }

    fn finish(&mut self) -> Result<(), HistoryError> {
        if let Some(feeder) = self.feeder.take() {
            let _ = feeder.join();
        }
        if let Some(mut child) = self.diff_tree.take() {
            let mut stderr = Vec::new();
            if let Some(mut e) = child.stderr.take() {
                let _ = e.read_to_end(&mut stderr);
            }
            let status = child.wait()?;
            if !status.success() {
                return Err(corrupt_from_stderr(&stderr));
            }
        }
        self.blobs.take();
        Ok(())
    }
}

impl Iterator for CommitStream {
    type Item = Result<CommitRecord, HistoryError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.metas.next() {
            Some(meta) => {
                let r = self.next_record(meta);
                if r.is_err() {
                    self.failed = true;
                }
                Some(r)
            }
            None => match self.finish() {
                Ok(()) => None,
                Err(e) => {
                    self.failed = true;
                    Some(Err(e))
                }
            },
        }
    }
}

impl Drop for CommitStream {
    fn drop(&mut self) {
        if let Some(mut child) = self.diff_tree.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

struct RawEntry {
    path: String,
    old_path: Option<String>,
    old_blob: String,
    kind: ChangeKind,
    added: u64,
    deleted: u64,
    binary: bool,
}

struct TokenReader {
    inner: BufReader<ChildStdout>,
    peeked: Option<String>,
}

impl TokenReader {
    fn read_token(&mut self) -> std::io::Result<Option<String>> {
        let mut buf = Vec::new();
        let n = self.inner.read_until(0, &mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        if buf.last() == Some(&0) {
            buf.pop();
        }
        Ok(Some(String::from_utf8_lossy(&buf).into_owned()))
    }

    fn peek(&mut self) -> std::io::Result<Option<&str>> {
        if self.peeked.is_none() {
            self.peeked = self.read_token()?;
        }
        Ok(self.peeked.as_deref())
    }

    fn next(&mut self) -> std::io::Result<Option<String>> {
        match self.peeked.take() {
            Some(t) => Ok(Some(t)),
            None => self.read_token(),
        }
    }

    fn expect(&mut self, commit: &str) -> Result<String, HistoryError> {
        self.next()?.ok_or_else(|| HistoryError::CorruptHistory {
            hash: commit.to_string(),
            detail: "truncated diff-tree output".into(),
        })
    }
}

fn parse_numstat(tok: &str) -> Option<(Option<(u64, u64)>, &str)> {
    let mut parts = tok.splitn(3, '\t');
    let a = parts.next()?;
    let d = parts.next()?;
    let rest = parts.next()?;
    let counts = match (a, d) {
        ("-", "-") => None,
        _ => Some((a.parse().ok()?, d.parse().ok()?)),
    };
    Some((counts, rest))
}

fn read_entries(tokens: &mut TokenReader, commit: &str) -> Result<Vec<RawEntry>, HistoryError> {
    let mut raw: Vec<RawEntry> = Vec::new();
    let mut stats: HashMap<String, Option<(u64, u64)>> = HashMap::new();
    let corrupt = |detail: String| HistoryError::CorruptHistory { hash: commit.to_string(), detail };

    loop {
        let Some(tok) = tokens.peek()? else { break };
        if let Some(header) = tok.strip_prefix(':') {
            let header = header.to_string();
            tokens.next()?;
            let fields: Vec<&str> = header.split(' ').collect();
            if fields.len() < 5 {
                return Err(corrupt(format!("bad raw diff entry {header:?}")));
            }
            let (old_mode, new_mode, old_blob, status) = (fields[0], fields[1], fields[2], fields[4]);
            let first = tokens.expect(commit)?;
            let (path, old_path, kind) = match status.as_bytes().first() {
                Some(b'A') => (first, None, ChangeKind::Added),
                Some(b'D') => (first, None, ChangeKind::Deleted),
                Some(b'M') | Some(b'T') => (first, None, ChangeKind::Modified),
                Some(b'R') => {
                    let to = tokens.expect(commit)?;
                    (to, Some(first), ChangeKind::Renamed)
                }
                Some(b'C') => {
                    let to = tokens.expect(commit)?;
                    (to, None, ChangeKind::Added)
                }
                _ => return Err(corrupt(format!("unsupported diff status {status:?}"))),
            };
            if old_mode == SUBMODULE_MODE || new_mode == SUBMODULE_MODE {
                continue;
            }
            raw.push(RawEntry {
                path,
                old_path,
                old_blob: old_blob.to_string(),
                kind,
                added: 0,
                deleted: 0,
                binary: false,
            });
        } else if let Some((counts, rest)) = parse_numstat(tok) {
            let rest = rest.to_string();
            tokens.next()?;
            let path = if rest.is_empty() {
                let _from = tokens.expect(commit)?;
                tokens.expect(commit)?
            } else {
                rest
            };
            stats.insert(path, counts);
        } else {
            break;
        }
    }

    for e in &mut raw {
        match stats.get(&e.path) {
            Some(Some((a, d))) => {
                e.added = *a;
                e.deleted = *d;
            }
            Some(None) => e.binary = true,
            None => {}
        }
    }
    Ok(raw)
}

struct BlobReader {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    cache: HashMap<String, u64>,
}

impl BlobReader {
    fn spawn(git: &Path, repo: &Path) -> std::io::Result<Self> {
        let mut child = Command::new(git)
            .arg("-C")
            .arg(repo)
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self { child, stdin, stdout, cache: HashMap::new() })
    }

    fn line_count(&mut self, blob: &str) -> Result<u64, String> {
        if let Some(&n) = self.cache.get(blob) {
            return Ok(n);
        }
        let io = |e: std::io::Error| e.to_string();
        writeln!(self.stdin, "{blob}").map_err(io)?;
        self.stdin.flush().map_err(io)?;
        let mut header = String::new();
        self.stdout.read_line(&mut header).map_err(io)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(format!("unreadable object {blob}: {}", header.trim()));
        }
        let size: usize = parts[2].parse().map_err(|_| format!("bad object header {header:?}"))?;
        let mut content = vec![0u8; size + 1];
        self.stdout.read_exact(&mut content).map_err(io)?;
        content.pop();
        let n = count_lines(&content);
        self.cache.insert(blob.to_string(), n);
        Ok(n)
    }
}

impl Drop for BlobReader {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
