//! Builds small deterministic git repositories from declarative commit specs.
//!
//! A fixture directory holds one sub-directory per commit (`01`, `02`, ...),
//! each with a `commit.toml` and an optional `files/` tree of full file
//! contents written at that commit.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
struct CommitToml {
    author: String,
    email: String,
    timestamp: i64,
    #[serde(default)]
    message: String,
    #[serde(default)]
    rename: Vec<(String, String)>,
    #[serde(default)]
    delete: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommitSpec {
    pub author: String,
    pub email: String,
    pub timestamp: i64,
    pub message: String,
    /// `(from, to)` pairs applied with `git mv` before files are written.
    pub renames: Vec<(String, String)>,
    pub deletes: Vec<String>,
    /// Full contents of files written (created or overwritten) by the commit.
    pub files: BTreeMap<String, Vec<u8>>,
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walk stays under root");
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.insert(rel, std::fs::read(&path)?);
        }
    }
    Ok(())
}

/// Loads every commit spec of a fixture directory, in directory-name order.
pub fn load_fixture(dir: &Path) -> io::Result<Vec<CommitSpec>> {
    let mut dirs: Vec<PathBuf> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    let mut out = Vec::with_capacity(dirs.len());
    for d in dirs {
        let raw = std::fs::read_to_string(d.join("commit.toml"))?;
        let meta: CommitToml = toml::from_str(&raw).map_err(|e| invalid(format!("{}: {e}", d.display())))?;
        let mut files = BTreeMap::new();
        let fdir = d.join("files");
        if fdir.is_dir() {
            collect_files(&fdir, &fdir, &mut files)?;
        }
        out.push(CommitSpec {
            author: meta.author,
            email: meta.email,
            timestamp: meta.timestamp,
            message: meta.message,
            renames: meta.rename,
            deletes: meta.delete,
            files,
        });
    }
    Ok(out)
}

fn git(repo: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(repo)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_TERMINAL_PROMPT", "0")
        .args(["-c", "core.autocrlf=false", "-c", "commit.gpgsign=false", "-c", "init.defaultBranch=main"]);
    cmd
}

fn run(mut cmd: Command) -> io::Result<String> {
    let out = cmd.output()?;
    if !out.status.success() {
        return Err(io::Error::other(format!(
            "{:?} failed: {}",
            cmd,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

/// Creates a repository at `dest` (which must not exist or be empty) and
/// replays `commits`. Returns the commit hashes in order.
pub fn build_repo(commits: &[CommitSpec], dest: &Path) -> io::Result<Vec<String>> {
    std::fs::create_dir_all(dest)?;
    let mut init = git(dest);
    init.args(["init", "-q"]);
    run(init)?;
    let mut ids = Vec::with_capacity(commits.len());
    for c in commits {
        for (from, to) in &c.renames {
            if let Some(parent) = Path::new(to).parent() {
                std::fs::create_dir_all(dest.join(parent))?;
            }
            let mut mv = git(dest);
            mv.args(["mv", "--", from, to]);
            run(mv)?;
        }
        for path in &c.deletes {
            let mut rm = git(dest);
            rm.args(["rm", "-q", "--", path]);
            run(rm)?;
        }
        for (path, content) in &c.files {
            let target = dest.join(path);
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(target, content)?;
        }
        let mut add = git(dest);
        add.args(["add", "-A"]);
        run(add)?;
        let date = format!("@{} +0000", c.timestamp);
        let mut commit = git(dest);
        commit
            .env("GIT_AUTHOR_NAME", &c.author)
            .env("GIT_AUTHOR_EMAIL", &c.email)
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_NAME", &c.author)
            .env("GIT_COMMITTER_EMAIL", &c.email)
            .env("GIT_COMMITTER_DATE", &date)
            .args(["commit", "-q", "--allow-empty", "--allow-empty-message", "--no-verify", "-m", &c.message]);
        run(commit)?;
        let mut head = git(dest);
        head.args(["rev-parse", "HEAD"]);
        ids.push(run(head)?);
    }
    Ok(ids)
}

/// Location of the bundled 20-commit Java fixture.
pub fn mini_java_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini-java")
}

/// Builds the bundled fixture under `dest`.
pub fn build_mini_java(dest: &Path) -> io::Result<Vec<String>> {
    build_repo(&load_fixture(&mini_java_dir())?, dest)
}
