//! Brute-force reference implementation of file deltas and process metrics,
//! computed from fixture specs alone (no git, no incremental state).
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use refwhy_core::testkit::CommitSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct OChange {
    pub path: String,
    pub old_path: Option<String>,
    pub kind: &'static str,
    pub la: u64,
    pub ld: u64,
    pub lt: u64,
    pub binary: bool,
}

#[derive(Debug, Clone)]
pub struct OCommit {
    pub author: String,
    pub t: i64,
    pub message: String,
    pub changes: Vec<OChange>,
}

pub fn is_binary(b: &[u8]) -> bool {
    b.iter().take(8000).any(|&x| x == 0)
}

pub fn split_lines(b: &[u8]) -> Vec<&[u8]> {
    if b.is_empty() {
        return vec![];
    }
    let mut v: Vec<&[u8]> = b.split(|&c| c == b'\n').collect();
    if b.ends_with(b"\n") {
        v.pop();
    }
    v
}

fn lcs(a: &[&[u8]], b: &[&[u8]]) -> u64 {
    let mut dp = vec![vec![0u64; b.len() + 1]; a.len() + 1];
    for i in 0..a.len() {
        for j in 0..b.len() {
            dp[i + 1][j + 1] = if a[i] == b[j] { dp[i][j] + 1 } else { dp[i][j + 1].max(dp[i + 1][j]) };
        }
    }
    dp[a.len()][b.len()]
}

fn delta(old: &[u8], new: &[u8]) -> (u64, u64, bool) {
    if is_binary(old) || is_binary(new) {
        return (0, 0, true);
    }
    let (a, b) = (split_lines(old), split_lines(new));
    let common = lcs(&a, &b);
    (b.len() as u64 - common, a.len() as u64 - common, false)
}

/// Tree snapshots after each commit.
pub fn trees(specs: &[CommitSpec]) -> Vec<BTreeMap<String, Vec<u8>>> {
    let mut cur: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut out = vec![];
    for s in specs {
        for (from, to) in &s.renames {
            let c = cur.remove(from).expect("rename source exists");
            cur.insert(to.clone(), c);
        }
        for d in &s.deletes {
            cur.remove(d);
        }
        for (p, c) in &s.files {
            cur.insert(p.clone(), c.clone());
        }
        out.push(cur.clone());
    }
    out
}

pub fn changes(specs: &[CommitSpec]) -> Vec<OCommit> {
    let snaps = trees(specs);
    let empty = BTreeMap::new();
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let before = if i == 0 { &empty } else { &snaps[i - 1] };
            let after = &snaps[i];
            let mut out = vec![];
            let targets: BTreeSet<&String> = s.renames.iter().map(|(_, t)| t).collect();
            let sources: BTreeSet<&String> = s.renames.iter().map(|(f, _)| f).collect();
            for (from, to) in &s.renames {
                let (la, ld, binary) = delta(&before[from], &after[to]);
                let lt = split_lines(&before[from]).len() as u64;
                out.push(OChange { path: to.clone(), old_path: Some(from.clone()), kind: "renamed", la, ld, lt, binary });
            }
            for (p, old) in before {
                if sources.contains(p) {
                    continue;
                }
                let lt = split_lines(old).len() as u64;
                match after.get(p) {
                    None => out.push(OChange {
                        path: p.clone(),
                        old_path: None,
                        kind: "deleted",
                        la: 0,
                        ld: if is_binary(old) { 0 } else { lt },
                        lt,
                        binary: is_binary(old),
                    }),
                    Some(new) if new != old => {
                        let (la, ld, binary) = delta(old, new);
                        out.push(OChange { path: p.clone(), old_path: None, kind: "modified", la, ld, lt, binary });
                    }
                    _ => {}
                }
            }
            for (p, new) in after {
                if !before.contains_key(p) && !targets.contains(p) {
                    let (la, ld, binary) = delta(b"", new);
                    out.push(OChange { path: p.clone(), old_path: None, kind: "added", la, ld, lt: 0, binary });
                }
            }
            out.sort_by(|a, b| a.path.cmp(&b.path));
            OCommit { author: s.email.trim().to_lowercase(), t: s.timestamp, message: s.message.clone(), changes: out }
        })
        .collect()
}

fn dir(p: &str) -> &str {
    match p.rfind('/') {
        Some(i) => &p[..i],
        None => "",
    }
}

fn top(p: &str) -> &str {
    dir(p).split('/').next().unwrap()
}

/// Commits (before `i`) on the lineage that `change` of commit `i` continues.
fn history_before(cs: &[OCommit], i: usize, change: &OChange) -> Vec<usize> {
    if change.kind == "added" {
        return vec![];
    }
    let mut p = change.old_path.clone().unwrap_or_else(|| change.path.clone());
    let mut out = vec![];
    for j in (0..i).rev() {
        if let Some(c) = cs[j].changes.iter().find(|c| c.path == p) {
            out.push(j);
            match c.kind {
                "added" => break,
                "renamed" => p = c.old_path.clone().unwrap(),
                _ => {}
            }
        }
    }
    out.reverse();
    out
}

/// All commits before `limit` on the lineage containing `path` at commit `j`.
fn lineage_commits_at(cs: &[OCommit], j: usize, path: &str, limit: usize) -> BTreeSet<usize> {
    let c = cs[j].changes.iter().find(|c| c.path == path).unwrap();
    let mut set: BTreeSet<usize> = history_before(cs, j, c).into_iter().collect();
    set.insert(j);
    if c.kind == "deleted" {
        return set;
    }
    let mut p = path.to_string();
    for k in j + 1..limit {
        if let Some(c) = cs[k].changes.iter().find(|c| c.kind != "added" && c.old_path.as_deref().unwrap_or(&c.path) == p) {
            set.insert(k);
            match c.kind {
                "deleted" => break,
                "renamed" => p = c.path.clone(),
                _ => {}
            }
        }
    }
    set
}

pub fn is_fix(msg: &str) -> bool {
    const KW: [&str; 8] = ["fix", "fixes", "fixed", "bug", "bugs", "defect", "defects", "patch"];
    msg.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).any(|w| KW.contains(&w.to_lowercase().as_str()))
}

pub const PROCESS: [&str; 28] = [
    "COMM", "ADEV", "DDEV", "ADD", "DELE", "OWN", "MINOR", "SCTR", "NADEV", "NDDEV", "NCOMM", "NSCTR", "OEXP",
    "EXP", "ND", "NS", "NF", "ENTROPY", "LA", "LD", "LT", "FIX", "NDEV", "AGE", "NUC", "CEXP", "REXP", "SEXP",
];

/// Metrics row for every (commit, change) in order, keyed by column name.
pub fn metrics(cs: &[OCommit]) -> Vec<(usize, String, BTreeMap<&'static str, f64>)> {
    const DAY: i64 = 86_400;
    let mut rows = vec![];
    for (i, c) in cs.iter().enumerate() {
        let t = c.t;
        let dirs: BTreeSet<&str> = c.changes.iter().map(|x| dir(&x.path)).collect();
        let subs: BTreeSet<&str> = c.changes.iter().map(|x| top(&x.path)).collect();
        let churn: Vec<f64> = c.changes.iter().map(|x| (x.la + x.ld) as f64).filter(|&v| v > 0.0).collect();
        let entropy = if churn.len() < 2 {
            0.0
        } else {
            let tot: f64 = churn.iter().sum();
            churn.iter().map(|v| -(v / tot) * (v / tot).log2()).sum::<f64>() / (churn.len() as f64).log2()
        };
        let proj_added: u64 = cs[..i].iter().flat_map(|c| &c.changes).map(|x| x.la).sum();
        let oexp_of = |a: &str| {
            if proj_added == 0 {
                return 0.0;
            }
            let mine: u64 = cs[..i].iter().filter(|c| c.author == a).flat_map(|c| &c.changes).map(|x| x.la).sum();
            100.0 * mine as f64 / proj_added as f64
        };
        let prior_authors: BTreeSet<&str> = cs[..i].iter().map(|c| c.author.as_str()).collect();
        let exp = if prior_authors.is_empty() {
            0.0
        } else {
            prior_authors.iter().map(|a| oexp_of(a)).sum::<f64>() / prior_authors.len() as f64
        };
        let hists: Vec<Vec<usize>> = c.changes.iter().map(|x| history_before(cs, i, x)).collect();
        let ndev: BTreeSet<&str> = hists.iter().flatten().map(|&j| cs[j].author.as_str()).collect();

        for (x, hist) in c.changes.iter().zip(&hists) {
            let mut m: BTreeMap<&'static str, f64> = BTreeMap::new();
            let authors: BTreeSet<&str> = hist.iter().map(|&j| cs[j].author.as_str()).collect();
            let active: BTreeSet<&str> =
                hist.iter().filter(|&&j| cs[j].t >= t - 180 * DAY).map(|&j| cs[j].author.as_str()).collect();
            // lines this lineage received per author
            let mut added: BTreeMap<&str, u64> = authors.iter().map(|a| (*a, 0)).collect();
            let mut p = x.old_path.clone().unwrap_or(x.path.clone());
            for &j in hist.iter().rev() {
                let ch = cs[j].changes.iter().find(|c| c.path == p).unwrap();
                *added.get_mut(cs[j].author.as_str()).unwrap() += ch.la;
                if let Some(o) = &ch.old_path {
                    p = o.clone();
                }
            }
            let total: u64 = added.values().sum();
            let (own, minor) = if total == 0 {
                (0.0, 0.0)
            } else {
                let shares: Vec<f64> = added.values().map(|&v| v as f64 / total as f64).collect();
                (shares.iter().cloned().fold(0.0, f64::max), shares.iter().filter(|&&s| s < 0.05).count() as f64)
            };
            // co-change neighbourhood
            let mut ncommits: BTreeSet<usize> = BTreeSet::new();
            for &j in hist {
                for other in &cs[j].changes {
                    ncommits.extend(lineage_commits_at(cs, j, &other.path, i));
                }
            }
            let nddev: BTreeSet<&str> = ncommits.iter().map(|&j| cs[j].author.as_str()).collect();
            let nadev: BTreeSet<&str> =
                ncommits.iter().filter(|&&j| cs[j].t >= t - 180 * DAY).map(|&j| cs[j].author.as_str()).collect();
            let mut nsctr: BTreeSet<&str> = BTreeSet::new();
            for &j in hist.iter().filter(|&&j| cs[j].author == c.author) {
                nsctr.extend(cs[j].changes.iter().map(|y| dir(&y.path)));
            }
            let mine: Vec<usize> = hist.iter().copied().filter(|&j| cs[j].author == c.author).collect();
            let sexp = cs[..i]
                .iter()
                .filter(|o| o.author == c.author && o.changes.iter().any(|y| dir(&y.path) == dir(&x.path)))
                .count();
            let denom = x.lt.max(1) as f64;

            m.insert("COMM", hist.len() as f64);
            m.insert("NUC", hist.len() as f64);
            m.insert("DDEV", authors.len() as f64);
            m.insert("ADEV", active.len() as f64);
            m.insert("ADD", x.la as f64 / denom);
            m.insert("DELE", x.ld as f64 / denom);
            m.insert("OWN", own);
            m.insert("MINOR", minor);
            m.insert("SCTR", dirs.len() as f64);
            m.insert("ND", dirs.len() as f64);
            m.insert("NS", subs.len() as f64);
            m.insert("NF", c.changes.len() as f64);
            m.insert("NADEV", nadev.len() as f64);
            m.insert("NDDEV", nddev.len() as f64);
            m.insert("NCOMM", ncommits.len() as f64);
            m.insert("NSCTR", nsctr.len() as f64);
            m.insert("OEXP", oexp_of(&c.author));
            m.insert("EXP", exp);
            m.insert("ENTROPY", entropy);
            m.insert("LA", x.la as f64);
            m.insert("LD", x.ld as f64);
            m.insert("LT", x.lt as f64);
            m.insert("FIX", if is_fix(&c.message) { 1.0 } else { 0.0 });
            m.insert("NDEV", ndev.len() as f64);
            m.insert("AGE", hist.last().map_or(0.0, |&j| (t - cs[j].t).max(0) as f64 / DAY as f64));
            m.insert("CEXP", mine.len() as f64);
            m.insert("REXP", mine.iter().filter(|&&j| cs[j].t >= t - 30 * DAY).count() as f64);
            m.insert("SEXP", sexp as f64);
            assert_eq!(m.len(), 28);
            rows.push((i, x.path.clone(), m));
        }
    }
    rows
}
