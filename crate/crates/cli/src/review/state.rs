use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use refwhy_core::llm::{Alignment, Decision, Role, ValidationCase};
use refwhy_core::reference::AGREEMENT_LABELS;
use refwhy_core::report::{summarize_agreement, AgreementSummary};
use refwhy_core::stats::ContingencyTable;
use serde::{Deserialize, Serialize};

/// Reviewers needed before a case is resolved by majority vote.
pub const QUORUM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewVerdict {
    pub case_id: String,
    pub reviewer: String,
    /// Whether the reviewer agrees with the extracted motivation.
    pub decision: Decision,
    #[serde(default)]
    pub correct_models: BTreeSet<Role>,
    #[serde(default)]
    pub note: String,
    /// The reviewer's own judgement of alignment with the reported
    /// motivation, for cases that carry one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<Alignment>,
    /// Milliseconds since the epoch, set by the service on receipt.
    #[serde(default)]
    pub timestamp: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum VerdictError {
    #[error("unknown case {0}")]
    UnknownCase(String),
    #[error("reviewer {0:?} is not on the reviewer list")]
    UnknownReviewer(String),
    #[error("reviewer id is empty")]
    EmptyReviewer,
}

/// Latest verdict per (case, reviewer) over a fixed batch.
#[derive(Debug, Clone)]
pub struct ReviewState {
    cases: Vec<ValidationCase>,
    index: HashMap<String, usize>,
    reviewers: Vec<String>,
    latest: BTreeMap<(usize, String), ReviewVerdict>,
    logged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    /// Cases with at least one verdict.
    pub reviewed: usize,
    /// Cases with a quorum of reviewers.
    pub resolved: usize,
    /// Two reviewers so far and they disagree.
    pub needs_third: Vec<String>,
    pub per_reviewer: BTreeMap<String, usize>,
    /// Verdicts received, superseded ones included.
    pub verdicts_logged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub reviewers: [String; 2],
    pub shared_cases: usize,
    pub summary: Option<AgreementSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmAgreement {
    /// Reviewer id, or `majority` for quorum-resolved cases.
    pub rater: String,
    pub summary: AgreementSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityCounts {
    pub resolved: usize,
    pub agree: usize,
    pub disagree: usize,
    pub tied: usize,
}

/// Live agreement tables. Reviewer pairs compare agree/disagree decisions;
/// model-vs-human tables put the model's alignment label in rows and the
/// human one in columns, both reduced to related (Yes) or not (No).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub reviewer_pairs: Vec<PairAgreement>,
    pub llm_vs_reviewer: Vec<LlmAgreement>,
    pub llm_vs_majority: Option<LlmAgreement>,
    pub majority: MajorityCounts,
}

const DECISIONS: [&str; 2] = ["agree", "disagree"];

fn decision_index(d: Decision) -> usize {
    match d {
        Decision::Agree => 0,
        Decision::Disagree => 1,
    }
}

fn related_index(a: Alignment) -> usize {
    usize::from(a.is_related())
}

fn majority<T: Ord + Copy>(votes: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    let mut n = 0;
    for v in votes {
        *counts.entry(v).or_insert(0) += 1;
        n += 1;
    }
    counts.into_iter().find(|(_, c)| 2 * c > n).map(|(v, _)| v)
}

impl ReviewState {
    /// `reviewers` restricts who may post; empty accepts anyone.
    pub fn new(cases: Vec<ValidationCase>, reviewers: Vec<String>) -> Self {
        let index = cases.iter().enumerate().map(|(i, c)| (c.case_id.clone(), i)).collect();
        Self { cases, index, reviewers, latest: BTreeMap::new(), logged: 0 }
    }

    pub fn cases(&self) -> &[ValidationCase] {
        &self.cases
    }

    pub fn case(&self, id: &str) -> Option<&ValidationCase> {
        self.index.get(id).map(|&i| &self.cases[i])
    }

    pub fn check(&self, v: &ReviewVerdict) -> Result<(), VerdictError> {
        if v.reviewer.trim().is_empty() {
            return Err(VerdictError::EmptyReviewer);
        }
        if !self.reviewers.is_empty() && !self.reviewers.contains(&v.reviewer) {
            return Err(VerdictError::UnknownReviewer(v.reviewer.clone()));
        }
        if !self.index.contains_key(&v.case_id) {
            return Err(VerdictError::UnknownCase(v.case_id.clone()));
        }
        Ok(())
    }

    /// Records a verdict, replacing the reviewer's earlier one on the case.
    /// Returns whether an earlier one existed.
    pub fn apply(&mut self, v: ReviewVerdict) -> Result<bool, VerdictError> {
        self.check(&v)?;
        let i = self.index[&v.case_id];
        self.logged += 1;
        Ok(self.latest.insert((i, v.reviewer.clone()), v).is_some())
    }

    fn verdicts_on(&self, case: usize) -> impl Iterator<Item = &ReviewVerdict> {
        self.latest.range((case, String::new())..).take_while(move |((c, _), _)| *c == case).map(|(_, v)| v)
    }

    pub fn verdicts_for(&self, case_id: &str) -> Vec<&ReviewVerdict> {
        self.index.get(case_id).map(|&i| self.verdicts_on(i).collect()).unwrap_or_default()
    }

    pub fn verdict(&self, case_id: &str, reviewer: &str) -> Option<&ReviewVerdict> {
        let i = *self.index.get(case_id)?;
        self.latest.get(&(i, reviewer.to_string()))
    }

    /// Next case the reviewer has not judged: fewest verdicts first, then
    /// batch order, so reviewers spread over the batch.
    pub fn next_case(&self, reviewer: &str) -> Option<&ValidationCase> {
        (0..self.cases.len())
            .filter(|&i| !self.latest.contains_key(&(i, reviewer.to_string())))
            .min_by_key(|&i| (self.verdicts_on(i).count(), i))
            .map(|i| &self.cases[i])
    }

    pub fn remaining(&self, reviewer: &str) -> usize {
        (0..self.cases.len()).filter(|&i| !self.latest.contains_key(&(i, reviewer.to_string()))).count()
    }

    /// Majority decision once a quorum has judged the case.
    pub fn resolution(&self, case_id: &str) -> Option<Decision> {
        let v = self.verdicts_for(case_id);
        if v.len() < QUORUM {
            return None;
        }
        majority(v.iter().map(|v| decision_index(v.decision))).map(|i| [Decision::Agree, Decision::Disagree][i])
    }

    pub fn progress(&self) -> Progress {
        let mut per_reviewer = BTreeMap::new();
        for (_, r) in self.latest.keys() {
            *per_reviewer.entry(r.clone()).or_insert(0) += 1;
        }
        let mut reviewed = 0;
        let mut resolved = 0;
        let mut needs_third = Vec::new();
        for (i, c) in self.cases.iter().enumerate() {
            let v: Vec<_> = self.verdicts_on(i).collect();
            reviewed += usize::from(!v.is_empty());
            resolved += usize::from(v.len() >= QUORUM);
            if v.len() == 2 && v[0].decision != v[1].decision {
                needs_third.push(c.case_id.clone());
            }
        }
        Progress {
            total: self.cases.len(),
            reviewed,
            resolved,
            needs_third,
            per_reviewer,
            verdicts_logged: self.logged,
        }
    }

    pub fn agreement(&self) -> AgreementReport {
        let by_reviewer: BTreeMap<&str, BTreeMap<usize, &ReviewVerdict>> =
            self.latest.iter().fold(BTreeMap::new(), |mut m, ((i, r), v)| {
                m.entry(r.as_str()).or_default().insert(*i, v);
                m
            });
        let names: Vec<&str> = by_reviewer.keys().copied().collect();

        let mut reviewer_pairs = Vec::new();
        for (a, ra) in names.iter().enumerate() {
            for rb in &names[a + 1..] {
                let (va, vb) = (&by_reviewer[ra], &by_reviewer[rb]);
                let pairs: Vec<(usize, usize)> = va
                    .iter()
                    .filter_map(|(i, x)| vb.get(i).map(|y| (decision_index(x.decision), decision_index(y.decision))))
                    .collect();
                reviewer_pairs.push(PairAgreement {
                    reviewers: [ra.to_string(), rb.to_string()],
                    shared_cases: pairs.len(),
                    summary: ContingencyTable::from_pairs(&DECISIONS, &pairs).ok().map(|t| summarize_agreement(&t)),
                });
            }
        }

        let llm_table = |pairs: &[(usize, usize)]| {
            ContingencyTable::from_pairs(&AGREEMENT_LABELS, pairs).ok().map(|t| summarize_agreement(&t))
        };
        let mut llm_vs_reviewer = Vec::new();
        for (r, verdicts) in &by_reviewer {
            let pairs: Vec<(usize, usize)> = verdicts
                .iter()
                .filter_map(|(i, v)| Some((related_index(self.cases[*i].llm_alignment?), related_index(v.alignment?))))
                .collect();
            if let Some(summary) = llm_table(&pairs) {
                llm_vs_reviewer.push(LlmAgreement { rater: r.to_string(), summary });
            }
        }

        let mut counts = MajorityCounts { resolved: 0, agree: 0, disagree: 0, tied: 0 };
        let mut majority_pairs = Vec::new();
        for (i, c) in self.cases.iter().enumerate() {
            let v: Vec<_> = self.verdicts_on(i).collect();
            if v.len() < QUORUM {
                continue;
            }
            counts.resolved += 1;
            match self.resolution(&c.case_id) {
                Some(Decision::Agree) => counts.agree += 1,
                Some(Decision::Disagree) => counts.disagree += 1,
                None => counts.tied += 1,
            }
            let human = majority(v.iter().filter_map(|v| v.alignment.map(related_index)));
            if let (Some(llm), Some(h)) = (c.llm_alignment, human) {
                majority_pairs.push((related_index(llm), h));
            }
        }
        AgreementReport {
            reviewer_pairs,
            llm_vs_reviewer,
            llm_vs_majority: llm_table(&majority_pairs).map(|summary| LlmAgreement { rater: "majority".into(), summary }),
            majority: counts,
        }
    }
}

/// Append-only NDJSON log of every verdict received.
#[derive(Debug)]
pub struct VerdictLog {
    path: PathBuf,
    file: File,
}

impl VerdictLog {
    /// Opens (creating if needed) the log and returns the verdicts in it. A
    /// torn final line left by a crash is cut off.
    pub fn open(path: &Path) -> io::Result<(Self, Vec<ReviewVerdict>)> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let (verdicts, good_len) = if path.exists() { read_log(path)? } else { (Vec::new(), 0) };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        if file.metadata()?.len() != good_len {
            log::warn!("{}: dropping a torn trailing record", path.display());
            file.set_len(good_len)?;
        }
        Ok((Self { path: path.to_path_buf(), file }, verdicts))
    }

    /// Reads the complete records of a log without touching the file.
    pub fn read(path: &Path) -> io::Result<Vec<ReviewVerdict>> {
        read_log(path).map(|(v, _)| v)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one verdict and syncs it to disk before returning.
    pub fn append(&mut self, v: &ReviewVerdict) -> io::Result<()> {
        let mut line = serde_json::to_vec(v).map_err(io::Error::from)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }
}

/// Complete records and the byte length they span.
fn read_log(path: &Path) -> io::Result<(Vec<ReviewVerdict>, u64)> {
    let mut verdicts = Vec::new();
    let mut good_len = 0u64;
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 || !line.ends_with('\n') {
            break;
        }
        match serde_json::from_str::<ReviewVerdict>(line.trim_end()) {
            Ok(v) => verdicts.push(v),
            Err(e) if line.trim().is_empty() => log::debug!("blank log line: {e}"),
            Err(e) => return Err(io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))),
        }
        good_len += n as u64;
    }
    Ok((verdicts, good_len))
}

/// Rebuilds the state from a log, skipping verdicts the batch no longer
/// accepts.
pub fn replay(state: &mut ReviewState, verdicts: Vec<ReviewVerdict>) -> usize {
    let mut skipped = 0;
    for v in verdicts {
        if let Err(e) = state.apply(v) {
            log::warn!("ignoring logged verdict: {e}");
            skipped += 1;
        }
    }
    skipped
}
