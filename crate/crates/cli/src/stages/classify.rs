//! LLM consensus over the sampled instances, alignment with reported
//! motivations, open coding and the human-validation batch.
//!
//! The ground-truth file is a JSON array of
//! `{"instance_id": ..., "motivation": ..., "explanation": ...}` objects.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Duration;

use anyhow::Context;
use refwhy_core::history::{commit_context, MinerOptions};
use refwhy_core::llm::{
    export_validation_batch, Alignment, AlignmentLabel, ChatBackend, ConsensusRecord, GroundTruth, HttpBackend,
    MotivationCase, OpenCoding, Orchestrator, OrchestratorConfig, Resolution, SyntheticBackend, Templates,
    TranscriptStore, ValidationCase,
};
use refwhy_core::reference::{MOTIVATION_PAIRS, VALIDATED_PAIRS};
use refwhy_core::refactoring::{read_instances_ndjson, RefactoringInstance};
use refwhy_core::report::{label_shares, LabelShare};
use refwhy_core::sampler::{cochran_n, read_manifest};
use serde::{Deserialize, Serialize};

use super::{mine, ndjson, require, sample, write_json, write_output};
use crate::config::{project_name, PipelineConfig};
use crate::error::CliError;

pub const DIR: &str = "classify";
pub const CASES: &str = "cases.ndjson";
pub const CONSENSUS: &str = "consensus.ndjson";
pub const ALIGNMENT: &str = "alignment.ndjson";
pub const CODING: &str = "coding.json";
pub const BATCH: &str = "validation_batch.ndjson";
pub const TRANSCRIPTS: &str = "transcripts.ndjson";
pub const REPORT: &str = "report.json";
pub const FILES: [&str; 7] = [CASES, CONSENSUS, ALIGNMENT, CODING, BATCH, TRANSCRIPTS, REPORT];

#[derive(Debug, Clone, Deserialize)]
struct GroundTruthRow {
    instance_id: String,
    motivation: String,
    #[serde(default)]
    explanation: String,
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub case_id: String,
    pub step: &'static str,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct ValidationSizing {
    pub available: usize,
    pub exported: usize,
    /// Cochran's n for the catalogued motivation pairs, next to the number
    /// actually validated in the reference study.
    pub reference_pairs: u64,
    pub reference_cochran: u64,
    pub reference_validated: u64,
}

#[derive(Debug, Serialize)]
pub struct ClassifyReport {
    pub sampled: usize,
    pub cases: usize,
    pub records: usize,
    pub arbiter_invocations: usize,
    pub v3_overrides: usize,
    pub alignment: Vec<LabelShare>,
    pub categories: usize,
    pub resolutions: BTreeMap<String, usize>,
    pub validation: ValidationSizing,
    pub failures: Vec<Failure>,
}

fn load_ground_truth(path: Option<&Path>) -> anyhow::Result<HashMap<String, GroundTruth>> {
    let Some(path) = path else { return Ok(HashMap::new()) };
    let rows: Vec<GroundTruthRow> = serde_json::from_reader(BufReader::new(File::open(path)?))
        .with_context(|| format!("reading ground truth {}", path.display()))?;
    Ok(rows
        .into_iter()
        .map(|r| (r.instance_id, GroundTruth { motivation: r.motivation, explanation: r.explanation }))
        .collect())
}

fn build_case(
    repos: &HashMap<String, &Path>,
    inst: &RefactoringInstance,
    truth: &HashMap<String, GroundTruth>,
) -> anyhow::Result<MotivationCase> {
    let repo = repos.get(&inst.project).with_context(|| format!("no repository configured for {}", inst.project))?;
    let (message, diff) = commit_context(repo, &inst.commit_id, &inst.files(), &MinerOptions::default())?;
    Ok(MotivationCase {
        instance: inst.clone(),
        commit_message: message,
        code_diff: diff,
        ground_truth: truth.get(&inst.id).cloned(),
    })
}

fn resolution_name(r: Resolution) -> &'static str {
    match r {
        Resolution::Shared => "shared",
        Resolution::V1 => "v1",
        Resolution::V2 => "v2",
        Resolution::Arbiter => "arbiter",
    }
}

pub fn run(cfg: &PipelineConfig, mock: bool) -> Result<ClassifyReport, CliError> {
    let manifest_path = require(cfg.stage_dir(sample::DIR).join(sample::MANIFEST))?;
    let instances_path = require(cfg.stage_dir(mine::DIR).join(mine::INSTANCES))?;
    let manifest = read_manifest(File::open(&manifest_path)?).context("reading the sample manifest")?;
    let instances = read_instances_ndjson(BufReader::new(File::open(&instances_path)?))
        .with_context(|| format!("reading {}", instances_path.display()))?;
    let by_id: HashMap<&str, &RefactoringInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let truth = load_ground_truth(cfg.ground_truth.as_deref())?;
    let repos: HashMap<String, &Path> = cfg.repos.iter().map(|r| (project_name(r), r.as_path())).collect();

    let mut failures = Vec::new();
    let mut cases = Vec::new();
    for (id, _) in &manifest {
        let inst = by_id.get(id.as_str()).with_context(|| format!("sampled instance {id} is not among the mined ones"))?;
        match build_case(&repos, inst, &truth) {
            Ok(c) => cases.push(c),
            Err(e) => failures.push(Failure { case_id: id.clone(), step: "context", error: format!("{e:#}") }),
        }
    }

    let dir = cfg.stage_dir(DIR);
    std::fs::create_dir_all(&dir)?;
    let mut ocfg = OrchestratorConfig::new(cfg.role_set());
    if let Some(t) = &cfg.templates_dir {
        ocfg.templates = Templates::load(t).context("loading prompt templates")?;
    }
    ocfg.align_role = cfg.llm.align_role;
    ocfg.retry_base_delay = Duration::from_millis(cfg.llm.retry_base_delay_ms);
    ocfg.bytes_per_token = cfg.llm.bytes_per_token;
    ocfg.workers = cfg.llm.workers;
    let backend: Box<dyn ChatBackend> = if mock {
        Box::new(SyntheticBackend::new())
    } else {
        Box::new(HttpBackend::new(cfg.llm.max_in_flight, Duration::from_millis(cfg.llm.min_interval_ms)))
    };
    let store = TranscriptStore::open(&dir.join(TRANSCRIPTS)).context("opening the transcript store")?;
    let orch = Orchestrator::new(ocfg, backend, store);

    let mut kept = Vec::new();
    let mut records: Vec<ConsensusRecord> = Vec::new();
    for (case, result) in cases.iter().zip(orch.extract_all(&cases)) {
        match result {
            Ok(r) => {
                kept.push(case);
                records.push(r);
            }
            Err(e) => failures.push(Failure { case_id: case.id().to_string(), step: "consensus", error: e.to_string() }),
        }
    }

    let mut labels: Vec<AlignmentLabel> = Vec::new();
    for (case, record) in kept.iter().zip(&records) {
        if case.ground_truth.is_none() {
            continue;
        }
        match orch.classify_alignment(case, record) {
            Ok(l) => labels.push(l),
            Err(e) => failures.push(Failure { case_id: case.id().to_string(), step: "alignment", error: e.to_string() }),
        }
    }

    let coding = if records.is_empty() {
        OpenCoding { assignments: Vec::new(), pool: Default::default() }
    } else {
        orch.open_code(&records).context("open coding")?
    };
    log::info!("classify: {} model calls, {} cached exchanges", orch.network_calls(), orch.store().len());

    write_output(&dir.join(CASES), &ndjson(&cases)?)?;
    write_output(&dir.join(CONSENSUS), &ndjson(&records)?)?;
    write_output(&dir.join(ALIGNMENT), &ndjson(&labels)?)?;
    write_json(&dir.join(CODING), &coding)?;

    let label_of: HashMap<&str, &AlignmentLabel> = labels.iter().map(|l| (l.case_id.as_str(), l)).collect();
    let validation: Vec<ValidationCase> = kept
        .iter()
        .zip(&records)
        .map(|(c, r)| ValidationCase::new(c, r, label_of.get(c.id()).copied()))
        .collect();
    let n = match cfg.llm.validation_sample {
        Some(n) => n,
        None if validation.is_empty() => 0,
        None => cochran_n(0.95, 0.05, Some(validation.len() as u64)).context("validation sizing")? as usize,
    };
    let mut batch = Vec::new();
    let exported = export_validation_batch(&validation, n, cfg.seed, &mut batch).context("exporting the batch")?;
    write_output(&dir.join(BATCH), &batch)?;

    let mut resolutions = BTreeMap::new();
    for a in &coding.assignments {
        *resolutions.entry(resolution_name(a.resolution).to_string()).or_insert(0) += 1;
    }
    let count = |v: Alignment| labels.iter().filter(|l| l.value == v).count() as u64;
    let report = ClassifyReport {
        sampled: manifest.len(),
        cases: cases.len(),
        records: records.len(),
        arbiter_invocations: records.iter().filter(|r| r.v3_verdict.is_some()).count(),
        v3_overrides: records.iter().filter(|r| r.final_source == refwhy_core::llm::FinalSource::V3).count(),
        alignment: label_shares(&[
            ("yes", count(Alignment::Yes)),
            ("no", count(Alignment::No)),
            ("extends", count(Alignment::Extends)),
        ]),
        categories: coding.pool.len(),
        resolutions,
        validation: ValidationSizing {
            available: validation.len(),
            exported: exported.len(),
            reference_pairs: MOTIVATION_PAIRS,
            reference_cochran: cochran_n(0.95, 0.05, Some(MOTIVATION_PAIRS)).expect("valid constants"),
            reference_validated: VALIDATED_PAIRS,
        },
        failures,
    };
    write_json(&dir.join(REPORT), &report)?;
    if !report.failures.is_empty() {
        return Err(anyhow::anyhow!("{} case(s) failed, see {}", report.failures.len(), dir.join(REPORT).display()).into());
    }
    Ok(report)
}
