//! RefactoringMiner JSON ingestion.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RefactoringType;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed RefactoringMiner JSON: {0}")]
    MalformedJson(#[from] serde_json::Error),
    #[error("unknown refactoring type {name:?} in commit {commit}")]
    UnknownRefactoringType { name: String, commit: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// Wire shapes, field names as emitted by RefactoringMiner 3.x.
#[derive(Deserialize, Serialize)]
struct RmDocument {
    commits: Vec<RmCommit>,
}

#[derive(Deserialize, Serialize)]
struct RmCommit {
    sha1: String,
    #[serde(default)]
    refactorings: Vec<RmRefactoring>,
}

#[derive(Deserialize, Serialize)]
#[serde(rename_all = "camelCase")]
struct RmRefactoring {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    left_side_locations: Vec<RmLocation>,
    #[serde(default)]
    right_side_locations: Vec<RmLocation>,
}

#[derive(Deserialize, Serialize)]
#[serde(rename_all = "camelCase")]
struct RmLocation {
    file_path: String,
    #[serde(default)]
    code_element_type: Option<String>,
    #[serde(default)]
    code_element: Option<String>,
}

/// An opaque (path, element kind, element name) triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub file_path: String,
    pub element_kind: String,
    pub element_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefactoringInstance {
    /// `project:sha1:index`, index being the position within the commit.
    pub id: String,
    pub project: String,
    pub commit_id: String,
    #[serde(rename = "type")]
    pub refactoring_type: RefactoringType,
    pub description: String,
    pub left: Vec<Location>,
    pub right: Vec<Location>,
}

impl RefactoringInstance {
    /// Files named on either side, deduplicated, left side first.
    pub fn files(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for l in self.left.iter().chain(&self.right) {
            if !out.contains(&l.file_path.as_str()) {
                out.push(&l.file_path);
            }
        }
        out
    }
}

/// Result of one ingestion: instances plus commits dropped for carrying no
/// refactoring.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RmParse {
    pub instances: Vec<RefactoringInstance>,
    pub discarded_commits: Vec<String>,
}

fn to_location(l: RmLocation) -> Location {
    Location {
        file_path: l.file_path,
        element_kind: l.code_element_type.unwrap_or_default(),
        element_name: l.code_element.unwrap_or_default(),
    }
}

pub fn parse_rm_str(json: &str, project: &str) -> Result<RmParse, IngestError> {
    let doc: RmDocument = serde_json::from_str(json)?;
    let mut out = RmParse::default();
    for c in doc.commits {
        if c.refactorings.is_empty() {
            out.discarded_commits.push(c.sha1);
            continue;
        }
        for (i, r) in c.refactorings.into_iter().enumerate() {
            let ty = RefactoringType::from_name(&r.kind).ok_or_else(|| IngestError::UnknownRefactoringType {
                name: r.kind.clone(),
                commit: c.sha1.clone(),
            })?;
            out.instances.push(RefactoringInstance {
                id: format!("{project}:{}:{i}", c.sha1),
                project: project.to_string(),
                commit_id: c.sha1.clone(),
                refactoring_type: ty,
                description: r.description,
                left: r.left_side_locations.into_iter().map(to_location).collect(),
                right: r.right_side_locations.into_iter().map(to_location).collect(),
            });
        }
    }
    Ok(out)
}

/// Parses a RefactoringMiner output file. Commits without refactorings are
/// dropped; unknown type names are rejected.
pub fn parse_rm_json(path: &Path, project: &str) -> Result<RmParse, IngestError> {
    parse_rm_str(&std::fs::read_to_string(path)?, project)
}

/// Renders instances back into RefactoringMiner's document shape, grouping
/// consecutive instances of the same commit.
pub fn to_rm_json(instances: &[RefactoringInstance]) -> String {
    let from = |l: &Location| RmLocation {
        file_path: l.file_path.clone(),
        code_element_type: Some(l.element_kind.clone()),
        code_element: Some(l.element_name.clone()),
    };
    let mut commits: Vec<RmCommit> = Vec::new();
    for inst in instances {
        if commits.last().is_none_or(|c| c.sha1 != inst.commit_id) {
            commits.push(RmCommit { sha1: inst.commit_id.clone(), refactorings: Vec::new() });
        }
        commits.last_mut().expect("pushed above").refactorings.push(RmRefactoring {
            kind: inst.refactoring_type.name().to_string(),
            description: inst.description.clone(),
            left_side_locations: inst.left.iter().map(from).collect(),
            right_side_locations: inst.right.iter().map(from).collect(),
        });
    }
    serde_json::to_string_pretty(&RmDocument { commits }).expect("plain data serializes")
}

/// Exact per-type counts; [`FrequencyTable::count`] is 0 for absent types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: BTreeMap<RefactoringType, u64>,
}

impl FrequencyTable {
    pub fn count(&self, ty: RefactoringType) -> u64 {
        self.counts.get(&ty).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Every catalogue type with its count, zeros included, in catalogue order.
    pub fn rows(&self) -> impl Iterator<Item = (RefactoringType, u64)> + '_ {
        RefactoringType::all().map(|t| (t, self.count(t)))
    }
}

pub fn frequency_table(instances: &[RefactoringInstance]) -> FrequencyTable {
    let mut counts = BTreeMap::new();
    for i in instances {
        *counts.entry(i.refactoring_type).or_insert(0) += 1;
    }
    FrequencyTable { counts }
}

pub fn write_instances_ndjson<W: Write>(mut out: W, instances: &[RefactoringInstance]) -> std::io::Result<()> {
    for i in instances {
        serde_json::to_writer(&mut out, i)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_instances_ndjson<R: BufRead>(input: R) -> Result<Vec<RefactoringInstance>, IngestError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinReport {
    /// `(instance index, commit index)` pairs.
    pub joined: Vec<(usize, usize)>,
    /// Ids of instances whose commit is not in the mined stream.
    pub unresolved: Vec<String>,
}

/// Resolves each instance against mined commit ids.
pub fn join_to_commits<S: AsRef<str>>(instances: &[RefactoringInstance], commit_ids: &[S]) -> JoinReport {
    let index: HashMap<&str, usize> = commit_ids.iter().enumerate().map(|(i, c)| (c.as_ref(), i)).collect();
    let mut report = JoinReport::default();
    for (i, inst) in instances.iter().enumerate() {
        match index.get(inst.commit_id.as_str()) {
            Some(&c) => report.joined.push((i, c)),
            None => report.unresolved.push(inst.id.clone()),
        }
    }
    if !report.unresolved.is_empty() {
        log::warn!("{} refactorings reference commits outside the mined history", report.unresolved.len());
    }
    report
}
