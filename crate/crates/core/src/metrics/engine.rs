use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::formulas::{entropy, ownership, FixDetector, DEFAULT_FIX_KEYWORDS};
use super::MetricVector;
use crate::history::{ChangeKind, CommitRecord};

const DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// Trailing window defining an "active" developer (ADEV, NADEV).
    pub adev_window_days: u32,
    /// Trailing window for recent experience (REXP).
    pub rexp_window_days: u32,
    /// Timestamp regressions beyond this many seconds raise a warning.
    pub clock_skew_tolerance: i64,
    pub fix_keywords: Vec<String>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            adev_window_days: 180,
            rexp_window_days: 30,
            clock_skew_tolerance: 86_400,
            fix_keywords: DEFAULT_FIX_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Non-fatal anomalies noticed while folding the stream.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricsWarning {
    OutOfOrderCommit { commit: String, timestamp: i64, latest: i64 },
    UnknownParentState { commit: String, path: String },
}

type Id = u32;

#[derive(Default)]
struct AuthorOnFile {
    added: u64,
    touches: Vec<i64>,
}

#[derive(Default)]
struct Lineage {
    commits: Vec<Id>,
    last_touch: Option<i64>,
    authors: BTreeMap<Id, AuthorOnFile>,
    /// Lineages ever co-modified with this one, itself included once touched.
    neighbors: BTreeSet<Id>,
}

struct CommitInfo {
    author: Id,
    timestamp: i64,
    dirs: Vec<Id>,
}

#[derive(Default)]
struct AuthorState {
    commits: u64,
    added: u64,
    dir_commits: HashMap<Id, u64>,
}

/// Streaming fold computing process metrics per (commit, file).
///
/// Feed commits oldest first; every "up to" metric describes the state
/// strictly before the commit being processed.
pub struct MetricsEngine {
    cfg: MetricsConfig,
    fix: FixDetector,
    authors: Interner,
    dirs: Interner,
    author_state: Vec<AuthorState>,
    lineages: Vec<Lineage>,
    live: HashMap<String, Id>,
    commits: Vec<CommitInfo>,
    project_added: u64,
    latest: Option<i64>,
    warnings: Vec<MetricsWarning>,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, Id>,
}

impl Interner {
    fn get(&mut self, s: &str) -> Id {
        let next = self.ids.len() as Id;
        *self.ids.entry(s.to_string()).or_insert(next)
    }
}

pub(crate) fn parent_dir(path: &str) -> &str {
    path.rsplit_once('/').map_or("", |(d, _)| d)
}

pub(crate) fn subsystem(path: &str) -> &str {
    let dir = parent_dir(path);
    dir.split('/').next().unwrap_or("")
}

impl MetricsEngine {
    pub fn new(cfg: MetricsConfig) -> Self {
        let fix = FixDetector::new(&cfg.fix_keywords);
        Self {
            cfg,
            fix,
            authors: Interner::default(),
            dirs: Interner::default(),
            author_state: Vec::new(),
            lineages: Vec::new(),
            live: HashMap::new(),
            commits: Vec::new(),
            project_added: 0,
            latest: None,
            warnings: Vec::new(),
        }
    }

    pub fn warnings(&self) -> &[MetricsWarning] {
        &self.warnings
    }

    fn warn(&mut self, w: MetricsWarning) {
        log::warn!("{w:?}");
        self.warnings.push(w);
    }

    fn new_lineage(&mut self) -> Id {
        self.lineages.push(Lineage::default());
        (self.lineages.len() - 1) as Id
    }

    /// Emits one vector per file change of `commit`, then folds the commit
    /// into the running state.
    pub fn accumulate(&mut self, commit: &CommitRecord) -> Vec<MetricVector> {
        let t = commit.timestamp;
        if let Some(latest) = self.latest {
            if t < latest - self.cfg.clock_skew_tolerance {
                self.warn(MetricsWarning::OutOfOrderCommit { commit: commit.id.clone(), timestamp: t, latest });
            }
        }
        self.latest = Some(self.latest.map_or(t, |l| l.max(t)));

        let author = self.authors.get(&commit.author_id);
        if self.author_state.len() <= author as usize {
            self.author_state.resize_with(author as usize + 1, AuthorState::default);
        }

        // Resolve each change to a lineage using the pre-commit path map.
        let mut ids = Vec::with_capacity(commit.changes.len());
        for ch in &commit.changes {
            let prior = match ch.change_kind {
                ChangeKind::Added => None,
                _ => ch.prior_path().and_then(|p| self.live.get(p)).copied(),
            };
            let id = match prior {
                Some(id) => id,
                None => {
                    if ch.change_kind != ChangeKind::Added {
                        self.warn(MetricsWarning::UnknownParentState {
                            commit: commit.id.clone(),
                            path: ch.prior_path().unwrap_or(&ch.path).to_string(),
                        });
                    }
                    self.new_lineage()
                }
            };
            ids.push(id);
        }

        let dir_names: BTreeSet<&str> = commit.changes.iter().map(|c| parent_dir(&c.path)).collect();
        let subsystems: BTreeSet<&str> = commit.changes.iter().map(|c| subsystem(&c.path)).collect();
        let dir_ids: Vec<Id> = dir_names.iter().map(|d| self.dirs.get(d)).collect();
        let nd = dir_names.len() as u64;
        let ns = subsystems.len() as u64;
        let nf = commit.changes.len() as u64;
        let churns: Vec<u64> =
            commit.changes.iter().map(|c| if c.binary { 0 } else { c.churn() }).collect();
        let ent = entropy(&churns);
        let fix = self.fix.is_fix(&commit.message);

        let adev_from = t - i64::from(self.cfg.adev_window_days) * 86_400;
        let rexp_from = t - i64::from(self.cfg.rexp_window_days) * 86_400;

        let ndev = {
            let mut devs = HashSet::new();
            for &id in &ids {
                devs.extend(self.lineages[id as usize].authors.keys().copied());
            }
            devs.len() as u64
        };

        let (oexp, exp) = {
            let share = |a: &AuthorState| {
                if self.project_added == 0 {
                    0.0
                } else {
                    100.0 * a.added as f64 / self.project_added as f64
                }
            };
            let oexp = share(&self.author_state[author as usize]);
            let known: Vec<&AuthorState> = self.author_state.iter().filter(|a| a.commits > 0).collect();
            let exp = if known.is_empty() {
                0.0
            } else {
                known.iter().map(|a| share(a)).sum::<f64>() / known.len() as f64
            };
            (oexp, exp)
        };

        let sexp_of = |path: &str, dirs: &Interner, st: &AuthorState| -> u64 {
            dirs.ids.get(parent_dir(path)).and_then(|d| st.dir_commits.get(d)).copied().unwrap_or(0)
        };

        let mut out = Vec::with_capacity(commit.changes.len());
        for (ch, &id) in commit.changes.iter().zip(&ids) {
            let lin = &self.lineages[id as usize];
            let comm = lin.commits.len() as u64;
            let ddev = lin.authors.len() as u64;
            let adev = lin
                .authors
                .values()
                .filter(|a| a.touches.iter().any(|&ts| ts >= adev_from))
                .count() as u64;
            let totals: BTreeMap<Id, u64> = lin.authors.iter().map(|(k, v)| (*k, v.added)).collect();
            let (own, minor) = ownership(&totals);

            let mut neighbor_commits: BTreeSet<Id> = BTreeSet::new();
            for &n in &lin.neighbors {
                neighbor_commits.extend(self.lineages[n as usize].commits.iter().copied());
            }
            let mut nddev = HashSet::new();
            let mut nadev = HashSet::new();
            for &c in &neighbor_commits {
                let info = &self.commits[c as usize];
                nddev.insert(info.author);
                if info.timestamp >= adev_from {
                    nadev.insert(info.author);
                }
            }
            let mut nsctr = HashSet::new();
            for &c in &lin.commits {
                let info = &self.commits[c as usize];
                if info.author == author {
                    nsctr.extend(info.dirs.iter().copied());
                }
            }

            let mine = lin.authors.get(&author);
            let cexp = mine.map_or(0, |a| a.touches.len() as u64);
            let rexp = mine.map_or(0, |a| a.touches.iter().filter(|&&ts| ts >= rexp_from).count() as u64);
            let age = lin.last_touch.map_or(0.0, |prev| ((t - prev).max(0)) as f64 / DAY);
            let lt = ch.lines_before;
            let denom = lt.max(1) as f64;

            out.push(MetricVector {
                commit_id: commit.id.clone(),
                file_path: ch.path.clone(),
                comm,
                adev,
                ddev,
                add: ch.lines_added as f64 / denom,
                dele: ch.lines_deleted as f64 / denom,
                own,
                minor,
                sctr: nd,
                nadev: nadev.len() as u64,
                nddev: nddev.len() as u64,
                ncomm: neighbor_commits.len() as u64,
                nsctr: nsctr.len() as u64,
                oexp,
                exp,
                nd,
                ns,
                nf,
                entropy: ent,
                la: ch.lines_added,
                ld: ch.lines_deleted,
                lt,
                fix,
                ndev,
                age,
                nuc: comm,
                cexp,
                rexp,
                sexp: sexp_of(&ch.path, &self.dirs, &self.author_state[author as usize]),
                product: None,
            });
        }

        self.fold(commit, author, &ids, dir_ids);
        out
    }

    fn fold(&mut self, commit: &CommitRecord, author: Id, ids: &[Id], dir_ids: Vec<Id>) {
        let t = commit.timestamp;
        let cid = self.commits.len() as Id;
        let touched: BTreeSet<Id> = ids.iter().copied().collect();
        for (ch, &id) in commit.changes.iter().zip(ids) {
            let lin = &mut self.lineages[id as usize];
            if lin.commits.last() != Some(&cid) {
                lin.commits.push(cid);
                let a = lin.authors.entry(author).or_default();
                a.touches.push(t);
            }
            lin.authors.get_mut(&author).expect("inserted above").added += ch.lines_added;
            lin.last_touch = Some(lin.last_touch.map_or(t, |p| p.max(t)));
            lin.neighbors.extend(touched.iter().copied());
            self.author_state[author as usize].added += ch.lines_added;
            self.project_added += ch.lines_added;
        }
        for ch in &commit.changes {
            if matches!(ch.change_kind, ChangeKind::Renamed | ChangeKind::Deleted) {
                if let Some(old) = ch.prior_path() {
                    self.live.remove(old);
                }
            }
        }
        for (ch, &id) in commit.changes.iter().zip(ids) {
            if ch.change_kind != ChangeKind::Deleted {
                self.live.insert(ch.path.clone(), id);
            }
        }
        let st = &mut self.author_state[author as usize];
        st.commits += 1;
        for &d in &dir_ids {
            *st.dir_commits.entry(d).or_default() += 1;
        }
        self.commits.push(CommitInfo { author, timestamp: t, dirs: dir_ids });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::FileChange;

    fn change(path: &str, kind: ChangeKind, la: u64, ld: u64, lt: u64) -> FileChange {
        FileChange {
            path: path.into(),
            old_path: None,
            lines_added: la,
            lines_deleted: ld,
            lines_before: lt,
            change_kind: kind,
            binary: false,
        }
    }

    fn commit(id: &str, author: &str, t: i64, msg: &str, changes: Vec<FileChange>) -> CommitRecord {
        CommitRecord {
            id: id.into(),
            author_id: author.into(),
            timestamp: t,
            message: msg.into(),
            parent_ids: vec![],
            changes,
        }
    }

    #[test]
    fn first_touch_is_empty_history() {
        let mut e = MetricsEngine::new(MetricsConfig::default());
        let v = e.accumulate(&commit("c1", "a", 100, "init", vec![change("src/F.java", ChangeKind::Added, 10, 0, 0)]));
        let v = &v[0];
        assert_eq!((v.comm, v.adev, v.ddev, v.cexp), (0, 0, 0, 0));
        assert_eq!((v.own, v.age), (0.0, 0.0));
        assert_eq!((v.entropy, v.nf, v.nd, v.ns), (0.0, 1, 1, 1));
        assert_eq!(v.add, 10.0);
    }

    #[test]
    fn second_touch_sees_prior_state() {
        let mut e = MetricsEngine::new(MetricsConfig::default());
        e.accumulate(&commit("c1", "a", 0, "init", vec![change("F", ChangeKind::Added, 10, 0, 0)]));
        let v = e.accumulate(&commit(
            "c2",
            "b",
            2 * 86_400,
            "fix it",
            vec![change("F", ChangeKind::Modified, 2, 5, 10), change("d/G", ChangeKind::Added, 6, 0, 0)],
        ));
        let f = &v[0];
        assert_eq!((f.comm, f.ddev, f.adev, f.nuc, f.ndev), (1, 1, 1, 1, 1));
        assert_eq!((f.own, f.minor), (1.0, 0));
        assert_eq!(f.age, 2.0);
        assert_eq!(f.dele, 0.5);
        assert_eq!(f.oexp, 0.0);
        assert_eq!(f.exp, 100.0);
        assert!(f.fix);
        assert_eq!((f.nd, f.ns, f.nf), (2, 2, 2));
        let g = &v[1];
        assert_eq!((g.comm, g.ncomm), (0, 0));
    }

    #[test]
    fn rename_keeps_lineage_and_delete_ends_it() {
        let mut e = MetricsEngine::new(MetricsConfig::default());
        e.accumulate(&commit("c1", "a", 0, "", vec![change("A", ChangeKind::Added, 3, 0, 0)]));
        let mut r = change("B", ChangeKind::Renamed, 0, 0, 3);
        r.old_path = Some("A".into());
        let v = e.accumulate(&commit("c2", "a", 10, "", vec![r]));
        assert_eq!(v[0].comm, 1);
        let v = e.accumulate(&commit("c3", "a", 20, "", vec![change("B", ChangeKind::Deleted, 0, 3, 3)]));
        assert_eq!(v[0].comm, 2);
        let v = e.accumulate(&commit("c4", "a", 30, "", vec![change("B", ChangeKind::Added, 1, 0, 0)]));
        assert_eq!(v[0].comm, 0);
        assert!(e.warnings().is_empty());
    }

    #[test]
    fn warnings_are_not_fatal() {
        let mut e = MetricsEngine::new(MetricsConfig::default());
        e.accumulate(&commit("c1", "a", 1_000_000, "", vec![change("A", ChangeKind::Added, 3, 0, 0)]));
        let v = e.accumulate(&commit("c2", "a", 0, "", vec![change("Z", ChangeKind::Modified, 1, 0, 4)]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].comm, 0);
        assert_eq!(e.warnings().len(), 2);
    }

    #[test]
    fn path_helpers() {
        assert_eq!(parent_dir("a/b/C.java"), "a/b");
        assert_eq!(parent_dir("README"), "");
        assert_eq!(subsystem("a/b/C.java"), "a");
        assert_eq!(subsystem("README"), "");
    }
}
