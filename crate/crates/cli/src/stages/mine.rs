//! History mining: commit stream, process metrics, product-metric join and
//! RefactoringMiner ingestion, one repository at a time.

use std::path::Path;

use anyhow::Context;
use refwhy_core::history::{stream_commits, MinerOptions};
use refwhy_core::metrics::{ingest_product_metrics, write_metrics_csv, MetricVector, MetricsEngine};
use refwhy_core::refactoring::{join_to_commits, parse_rm_json, write_instances_ndjson, RefactoringInstance};
use refwhy_core::Execution;
use serde::Serialize;

use super::{unix_now, write_json, write_output};
use crate::config::{project_name, PipelineConfig};
use crate::error::CliError;

pub const DIR: &str = "mine";
pub const METRICS: &str = "metrics.csv";
pub const INSTANCES: &str = "instances.ndjson";
pub const MANIFEST: &str = "manifest.json";
pub const FILES: [&str; 3] = [METRICS, INSTANCES, MANIFEST];

#[derive(Debug, Clone, Default, Serialize)]
pub struct RepoSummary {
    pub project: String,
    pub path: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub commits: usize,
    pub metric_rows: usize,
    pub metrics_warnings: usize,
    pub instances: usize,
    /// Instances whose commit is not in the mined history.
    pub unresolved_instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_rows_joined: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    git: String,
    seed: u64,
    started_at: u64,
    finished_at: u64,
    thresholds: &'a crate::config::Thresholds,
    repos: &'a [RepoSummary],
}

struct RepoOutput {
    rows: Vec<MetricVector>,
    instances: Vec<RefactoringInstance>,
}

fn mine_repo(cfg: &PipelineConfig, repo: &Path, summary: &mut RepoSummary) -> anyhow::Result<RepoOutput> {
    let project = &summary.project;
    let mut engine = MetricsEngine::new(cfg.metrics_config());
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for rec in stream_commits(repo, &MinerOptions::default())? {
        let rec = rec?;
        rows.extend(engine.accumulate(&rec));
        ids.push(rec.id);
    }
    summary.commits = ids.len();
    summary.metric_rows = rows.len();
    summary.metrics_warnings = engine.warnings().len();

    if let Some(dir) = &cfg.product_metrics_dir {
        let csv = dir.join(format!("{project}.csv"));
        if csv.is_file() {
            let report = ingest_product_metrics(&csv, &mut rows, cfg.comread())
                .with_context(|| format!("product metrics {}", csv.display()))?;
            summary.product_rows_joined = Some(report.joined);
            if !report.skipped.is_empty() {
                summary.notes.push(format!("{} product rows skipped", report.skipped.len()));
            }
        } else {
            summary.notes.push(format!("no product metrics at {}", csv.display()));
        }
    }

    let rm = cfg.rm_json_dir.join(format!("{project}.json"));
    let instances = if rm.is_file() {
        let parsed = parse_rm_json(&rm, project).with_context(|| format!("refactorings {}", rm.display()))?;
        summary.unresolved_instances = join_to_commits(&parsed.instances, &ids).unresolved.len();
        parsed.instances
    } else {
        summary.notes.push(format!("no refactorings at {}", rm.display()));
        Vec::new()
    };
    summary.instances = instances.len();
    Ok(RepoOutput { rows, instances })
}

fn git_version() -> String {
    std::process::Command::new("git")
        .arg("--version")
        .output()
        .ok()
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_default()
}

/// Mines every configured repository. A failing repository is recorded in
/// the manifest and the others still complete; the stage then reports a
/// runtime failure.
pub fn run(cfg: &PipelineConfig) -> Result<Vec<RepoSummary>, CliError> {
    let started_at = unix_now();
    let dir = cfg.stage_dir(DIR);
    std::fs::create_dir_all(&dir)?;

    let results = Execution::Parallel.map_range(cfg.repos.len(), |i| {
        let repo = &cfg.repos[i];
        let mut summary =
            RepoSummary { project: project_name(repo), path: repo.display().to_string(), ..Default::default() };
        let out = mine_repo(cfg, repo, &mut summary);
        (summary, out)
    });

    let mut rows = Vec::new();
    let mut instances = Vec::new();
    let mut summaries = Vec::new();
    for (mut summary, out) in results {
        match out {
            Ok(o) => {
                summary.ok = true;
                rows.extend(o.rows);
                instances.extend(o.instances);
            }
            Err(e) => {
                log::error!("{}: {e:#}", summary.project);
                summary.error = Some(format!("{e:#}"));
            }
        }
        summaries.push(summary);
    }

    let mut csv = Vec::new();
    write_metrics_csv(&mut csv, &rows).context("writing metrics")?;
    write_output(&dir.join(METRICS), &csv)?;
    let mut nd = Vec::new();
    write_instances_ndjson(&mut nd, &instances)?;
    write_output(&dir.join(INSTANCES), &nd)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        git: git_version(),
        seed: cfg.seed,
        started_at,
        finished_at: unix_now(),
        thresholds: &cfg.thresholds,
        repos: &summaries,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;

    let failed: Vec<&str> = summaries.iter().filter(|s| !s.ok).map(|s| s.project.as_str()).collect();
    if !failed.is_empty() {
        return Err(anyhow::anyhow!("{} of {} repositories failed: {}", failed.len(), summaries.len(), failed.join(", "))
            .into());
    }
    Ok(summaries)
}
