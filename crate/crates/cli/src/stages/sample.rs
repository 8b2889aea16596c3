//! Stratified sample of the mined refactoring instances.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use anyhow::Context;
use refwhy_core::refactoring::read_instances_ndjson;
use refwhy_core::sampler::{cochran_n, draw_sample, write_manifest, SamplePlan, Shortfall};
use serde::Serialize;

use super::{mine, require, write_json, write_output};
use crate::config::PipelineConfig;
use crate::error::CliError;

pub const DIR: &str = "sample";
pub const MANIFEST: &str = "manifest.csv";
pub const REPORT: &str = "report.json";
pub const FILES: [&str; 2] = [MANIFEST, REPORT];

#[derive(Debug, Serialize)]
pub struct SampleReport {
    pub plan: SamplePlan,
    pub population: usize,
    pub target: usize,
    /// Cochran's n for an unbounded population at the plan's settings.
    pub cochran_unbounded: u64,
    pub selected: usize,
    /// Selected count per phase (1 coverage, 2 project top-up, 3 random fill).
    pub phases: BTreeMap<u8, usize>,
    pub per_project: BTreeMap<String, usize>,
    pub shortfalls: Vec<Shortfall>,
}

pub fn run(cfg: &PipelineConfig) -> Result<SampleReport, CliError> {
    let input = require(cfg.stage_dir(mine::DIR).join(mine::INSTANCES))?;
    let population = read_instances_ndjson(BufReader::new(File::open(&input)?))
        .with_context(|| format!("reading {}", input.display()))?;
    let plan = cfg.sample_plan();
    let sample = draw_sample(&population, &plan).context("drawing the sample")?;

    let dir = cfg.stage_dir(DIR);
    std::fs::create_dir_all(&dir)?;
    let mut csv = Vec::new();
    write_manifest(&mut csv, &population, &sample).context("writing the manifest")?;
    write_output(&dir.join(MANIFEST), &csv)?;

    let mut phases = BTreeMap::new();
    let mut per_project = BTreeMap::new();
    for &(i, phase) in &sample.selected {
        *phases.entry(phase).or_insert(0) += 1;
        *per_project.entry(population[i].project.clone()).or_insert(0) += 1;
    }
    let report = SampleReport {
        cochran_unbounded: cochran_n(plan.confidence, plan.margin, None).context("sample plan")?,
        plan,
        population: population.len(),
        target: sample.target,
        selected: sample.selected.len(),
        phases,
        per_project,
        shortfalls: sample.shortfalls,
    };
    write_json(&dir.join(REPORT), &report)?;
    Ok(report)
}
